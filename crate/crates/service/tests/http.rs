mod common;

use std::collections::BTreeMap;
use std::sync::Arc;

use serde_json::{json, Value};
use vocabforge::ScoreReport;
use vocabforge_service::log::{read_events, rescore, Event};
use vocabforge_service::session::stratified_order;
use vocabforge_service::ManualClock;

struct Client {
    http: reqwest::Client,
    base: String,
}

impl Client {
    async fn call(&self, method: reqwest::Method, path: &str, body: Option<Value>) -> (u16, Vec<u8>) {
        let mut req = self.http.request(method, format!("{}{path}", self.base));
        if let Some(b) = body {
            req = req.json(&b);
        }
        let resp = req.send().await.unwrap();
        let status = resp.status().as_u16();
        (status, resp.bytes().await.unwrap().to_vec())
    }
}

fn json_of(body: &[u8]) -> Value {
    serde_json::from_slice(body).unwrap()
}

/// Runs one scripted participant who answers the first `correct` trials
/// right and the rest wrong. Returns every pre-finish payload and the raw
/// finish body.
async fn participant(client: &Client, test_id: &str, seed: u64, correct: usize) -> (String, Vec<Value>, Vec<u8>) {
    let key = common::key(test_id);
    let mut wire = Vec::new();
    let (status, body) =
        client.call(reqwest::Method::POST, "/sessions", Some(json!({"test_id": test_id, "seed": seed}))).await;
    assert_eq!(status, 201);
    let created = json_of(&body);
    wire.push(created.clone());
    let id = created["session_id"].as_str().unwrap().to_string();
    for (i, expected) in stratified_order(&key, seed).iter().enumerate() {
        let (status, body) = client.call(reqwest::Method::GET, &format!("/sessions/{id}/next"), None).await;
        assert_eq!(status, 200);
        let next = json_of(&body);
        wire.push(next.clone());
        let item = next["item_id"].as_str().unwrap();
        assert_eq!(item, expected);
        assert_eq!(next["display_ms"], 2_000);
        let is_real = key.item(item).unwrap().is_real;
        let answer = if (i < correct) == is_real { "real" } else { "fake" };
        let (status, body) = client
            .call(
                reqwest::Method::POST,
                &format!("/sessions/{id}/response"),
                Some(json!({"item_id": item, "answer": answer, "rt_ms": 640})),
            )
            .await;
        assert_eq!(status, 200);
        wire.push(json_of(&body));
    }
    let (_, body) = client.call(reqwest::Method::GET, &format!("/sessions/{id}/next"), None).await;
    let done = json_of(&body);
    assert_eq!(done["status"], "complete");
    wire.push(done);
    let (status, body) = client.call(reqwest::Method::POST, &format!("/sessions/{id}/finish"), None).await;
    assert_eq!(status, 200);
    (id, wire, body)
}

#[tokio::test(flavor = "multi_thread", worker_threads = 4)]
async fn concurrent_sessions_replay_exactly() {
    let dir = tempfile::tempdir().unwrap();
    let log_path = dir.path().join("events.jsonl");
    let clock = Arc::new(ManualClock::new(10_000));
    let server = common::spawn(common::service(clock.clone()).with_log(&log_path).unwrap(), clock).await;
    let client = Arc::new(Client { http: reqwest::Client::new(), base: server.base.clone() });

    let (status, body) = client.call(reqwest::Method::GET, "/tests", None).await;
    assert_eq!(status, 200);
    assert!(!common::mentions_label(&json_of(&body)));

    let mut tasks = Vec::new();
    for k in 0..50u64 {
        let client = client.clone();
        tasks.push(tokio::spawn(async move {
            let test_id = if k % 2 == 0 { "en" } else { "de" };
            let correct = 10 + k as usize;
            let (id, wire, finish) = participant(&client, test_id, 1_000 + k, correct).await;
            (k, test_id, correct, id, wire, finish)
        }));
    }
    let mut finished: BTreeMap<String, Vec<u8>> = BTreeMap::new();
    for t in tasks {
        let (k, test_id, correct, id, wire, finish) = t.await.unwrap();
        for payload in &wire {
            assert!(!common::mentions_label(payload), "label leaked: {payload}");
        }
        let report: ScoreReport = serde_json::from_slice(&finish).unwrap();
        assert_eq!(report.session_id, id);
        assert_eq!(report.tested_language, test_id);
        assert_eq!(report.n_trials, 60);
        assert!((report.accuracy - correct as f64 / 60.0).abs() < 1e-12, "session {k}");
        // Everything the server stored for this session belongs to it.
        let key = common::key(test_id);
        let stored = server.service.responses(&id).unwrap();
        assert_eq!(stored.len(), 60);
        assert!(stored.iter().all(|r| key.item(&r.item_id).is_some() && r.client_rt_ms == Some(640)));
        finished.insert(id, finish);
    }
    assert_eq!(finished.len(), 50);

    let events = read_events(&log_path).unwrap();
    let per_session = events.iter().filter(|e| matches!(e, Event::Response { .. })).count();
    assert_eq!(per_session, 50 * 60);
    let rescored = rescore(&events, &common::tests()).unwrap();
    assert_eq!(rescored.len(), 50);
    for (id, bytes) in &finished {
        assert_eq!(&serde_json::to_vec(&rescored[id]).unwrap(), bytes);
    }

    // A fresh server on the same log returns the same reports.
    let clock = Arc::new(ManualClock::new(10_000));
    let restarted = common::spawn(common::service(clock.clone()).with_log(&log_path).unwrap(), clock).await;
    let client = Client { http: reqwest::Client::new(), base: restarted.base.clone() };
    for (id, bytes) in &finished {
        let (status, body) = client.call(reqwest::Method::POST, &format!("/sessions/{id}/finish"), None).await;
        assert_eq!(status, 200);
        assert_eq!(&body, bytes);
    }
}

#[tokio::test]
async fn late_response_is_stored_as_timeout() {
    let clock = Arc::new(ManualClock::new(0));
    let server = common::spawn(common::service(clock.clone()), clock.clone()).await;
    let client = Client { http: reqwest::Client::new(), base: server.base.clone() };
    let (_, body) = client.call(reqwest::Method::POST, "/sessions", Some(json!({"test_id": "en", "seed": 1}))).await;
    let id = json_of(&body)["session_id"].as_str().unwrap().to_string();
    let (_, body) = client.call(reqwest::Method::GET, &format!("/sessions/{id}/next"), None).await;
    let next = json_of(&body);
    assert_eq!(next["respond_by"], 3_500);
    let item = next["item_id"].as_str().unwrap().to_string();

    let (status, body) = client.call(reqwest::Method::GET, &format!("/sessions/{id}/next"), None).await;
    assert_eq!((status, json_of(&body)["kind"].as_str().unwrap().to_string()), (409, "protocol".to_string()));

    server.clock.advance(4_000);
    let (status, body) = client
        .call(
            reqwest::Method::POST,
            &format!("/sessions/{id}/response"),
            Some(json!({"item_id": item, "answer": "real", "rt_ms": 300})),
        )
        .await;
    assert_eq!(status, 200);
    let ack = json_of(&body);
    assert_eq!((ack["answer"].as_str().unwrap(), ack["rt_ms"].as_u64().unwrap()), ("timeout", 4_000));
    let stored = server.service.responses(&id).unwrap();
    assert_eq!((stored[0].rt_ms, stored[0].client_rt_ms), (4_000, Some(300)));
}

#[tokio::test]
async fn error_statuses() {
    let clock = Arc::new(ManualClock::new(0));
    let server = common::spawn(common::service(clock.clone()), clock).await;
    let client = Client { http: reqwest::Client::new(), base: server.base.clone() };
    let (status, _) = client.call(reqwest::Method::POST, "/sessions", Some(json!({"test_id": "zz"}))).await;
    assert_eq!(status, 404);
    let (status, _) = client.call(reqwest::Method::GET, "/sessions/nope/next", None).await;
    assert_eq!(status, 404);
    let (_, body) = client.call(reqwest::Method::POST, "/sessions", Some(json!({"test_id": "en"}))).await;
    let id = json_of(&body)["session_id"].as_str().unwrap().to_string();
    let (status, body) = client.call(reqwest::Method::POST, &format!("/sessions/{id}/finish"), None).await;
    assert_eq!((status, json_of(&body)["kind"].clone()), (409, json!("unresolved")));
    let (status, _) = client
        .call(
            reqwest::Method::POST,
            &format!("/sessions/{id}/response"),
            Some(json!({"item_id": "x", "answer": "real"})),
        )
        .await;
    assert_eq!(status, 409);
}
