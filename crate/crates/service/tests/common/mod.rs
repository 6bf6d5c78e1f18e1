#![allow(dead_code)]

use std::collections::BTreeMap;
use std::sync::Arc;

use serde_json::Value;
use vocabforge::{TestItem, TestSet};
use vocabforge_service::{http, ManualClock, Service, ServiceConfig};

pub fn key(language: &str) -> TestSet {
    let items = (0..30)
        .flat_map(|i| [(format!("real{i}"), true), (format!("fake{i}"), false)])
        .map(|(text, is_real)| TestItem { id: vocabforge::assemble::item_id(language, 1, &text), text, is_real })
        .collect();
    TestSet { language: language.into(), seed: 1, pipeline_version: "t".into(), batch_size: 30, items }
}

pub fn tests() -> BTreeMap<String, TestSet> {
    BTreeMap::from([("en".to_string(), key("en")), ("de".to_string(), key("de"))])
}

pub fn service(clock: Arc<ManualClock>) -> Service {
    Service::new(tests(), ServiceConfig::default(), clock)
}

/// Whether any object key anywhere in `v` is `is_real`.
pub fn mentions_label(v: &Value) -> bool {
    match v {
        Value::Object(m) => m.iter().any(|(k, v)| k == "is_real" || mentions_label(v)),
        Value::Array(a) => a.iter().any(mentions_label),
        _ => false,
    }
}

pub struct Server {
    pub base: String,
    pub clock: Arc<ManualClock>,
    pub service: Arc<Service>,
}

pub async fn spawn(service: Service, clock: Arc<ManualClock>) -> Server {
    let service = Arc::new(service);
    let listener = tokio::net::TcpListener::bind("127.0.0.1:0").await.unwrap();
    let addr = listener.local_addr().unwrap();
    let app = http::router(service.clone());
    tokio::spawn(async move { axum::serve(listener, app).await.unwrap() });
    Server { base: format!("http://{addr}"), clock, service }
}
