//! JSON over HTTP.
//!
//! | method | path                     | body                         |
//! |--------|--------------------------|------------------------------|
//! | GET    | `/tests`                 |                              |
//! | POST   | `/sessions`              | `{test_id, seed?, native_language?}` |
//! | GET    | `/sessions/{id}/next`    |                              |
//! | POST   | `/sessions/{id}/response`| `{item_id, answer, rt_ms?}`  |
//! | POST   | `/sessions/{id}/finish`  |                              |
//!
//! Item labels only ever leave the server inside the finish report.

use std::sync::Arc;

use axum::extract::{Path, State};
use axum::http::StatusCode;
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use serde::{Deserialize, Serialize};
use vocabforge::{Answer, ScoreReport};

use crate::session::{Ack, NextTrial, Service, ServiceError, SessionInfo, TestInfo};

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CreateSession {
    pub test_id: String,
    #[serde(default)]
    pub seed: Option<u64>,
    #[serde(default)]
    pub native_language: Option<String>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SubmitResponse {
    pub item_id: String,
    pub answer: Answer,
    /// Client-measured reaction time, stored as advisory only.
    #[serde(default)]
    pub rt_ms: Option<u64>,
}

#[derive(Debug, Serialize, Deserialize)]
pub struct ErrorBody {
    pub error: String,
    pub kind: String,
}

impl IntoResponse for ServiceError {
    fn into_response(self) -> Response {
        let (status, kind) = match &self {
            ServiceError::UnknownTest(_) => (StatusCode::NOT_FOUND, "unknown_test"),
            ServiceError::UnknownSession(_) => (StatusCode::NOT_FOUND, "unknown_session"),
            ServiceError::Protocol(_) => (StatusCode::CONFLICT, "protocol"),
            ServiceError::Unresolved(_) => (StatusCode::CONFLICT, "unresolved"),
            ServiceError::Expired(_) => (StatusCode::GONE, "expired"),
            ServiceError::Log(_) | ServiceError::Scoring(_) | ServiceError::Replay(_) => {
                log::error!("{self}");
                (StatusCode::INTERNAL_SERVER_ERROR, "internal")
            }
        };
        (status, Json(ErrorBody { error: self.to_string(), kind: kind.into() })).into_response()
    }
}

type Shared = Arc<Service>;

// Session operations take a std mutex and may write to the log, so they
// run off the async workers.
async fn blocking<T: Send + 'static>(
    f: impl FnOnce() -> Result<T, ServiceError> + Send + 'static,
) -> Result<T, ServiceError> {
    tokio::task::spawn_blocking(f).await.expect("session task panicked")
}

async fn list_tests(State(svc): State<Shared>) -> Json<Vec<TestInfo>> {
    Json(svc.tests())
}

async fn create(
    State(svc): State<Shared>,
    Json(req): Json<CreateSession>,
) -> Result<(StatusCode, Json<SessionInfo>), ServiceError> {
    let info = blocking(move || svc.create_session(&req.test_id, req.seed, req.native_language)).await?;
    Ok((StatusCode::CREATED, Json(info)))
}

async fn next(State(svc): State<Shared>, Path(id): Path<String>) -> Result<Json<NextTrial>, ServiceError> {
    Ok(Json(blocking(move || svc.next_trial(&id)).await?))
}

async fn respond(
    State(svc): State<Shared>,
    Path(id): Path<String>,
    Json(req): Json<SubmitResponse>,
) -> Result<Json<Ack>, ServiceError> {
    Ok(Json(blocking(move || svc.submit_response(&id, &req.item_id, req.answer, req.rt_ms)).await?))
}

async fn finish(State(svc): State<Shared>, Path(id): Path<String>) -> Result<Json<ScoreReport>, ServiceError> {
    Ok(Json(blocking(move || svc.finish(&id)).await?))
}

pub fn router(service: Shared) -> Router {
    Router::new()
        .route("/tests", get(list_tests))
        .route("/sessions", post(create))
        .route("/sessions/{id}/next", get(next))
        .route("/sessions/{id}/response", post(respond))
        .route("/sessions/{id}/finish", post(finish))
        .with_state(service)
}

/// Serves until ctrl-c.
pub async fn serve(service: Shared, addr: std::net::SocketAddr) -> std::io::Result<()> {
    let listener = tokio::net::TcpListener::bind(addr).await?;
    log::info!("listening on {}", listener.local_addr()?);
    axum::serve(listener, router(service))
        .with_graceful_shutdown(async {
            let _ = tokio::signal::ctrl_c().await;
        })
        .await
}
