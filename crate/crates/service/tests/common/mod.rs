#![allow(dead_code)]

use std::path::Path;
use std::sync::Arc;

use axum::body::Body;
use axum::http::{Request, StatusCode};
use axum::Router;
use cpbo_service::{router, AppState, Registry, Settings, Store};
use http_body_util::BodyExt;
use serde_json::Value;
use tower::ServiceExt;

pub fn app(dir: &Path) -> Router {
    let store = Store::open(dir).unwrap();
    router(Arc::new(AppState::new(store, Registry::with_defaults(), Settings::default())))
}

pub async fn call(app: &Router, method: &str, uri: &str, body: Option<Value>) -> (StatusCode, Vec<u8>) {
    let req = Request::builder().method(method).uri(uri);
    let req = match body {
        Some(b) => req
            .header("content-type", "application/json")
            .body(Body::from(serde_json::to_vec(&b).unwrap())),
        None => req.body(Body::empty()),
    }
    .unwrap();
    let resp = app.clone().oneshot(req).await.unwrap();
    let status = resp.status();
    let bytes = resp.into_body().collect().await.unwrap().to_bytes().to_vec();
    (status, bytes)
}

pub async fn call_json(app: &Router, method: &str, uri: &str, body: Option<Value>) -> (StatusCode, Value) {
    let (s, b) = call(app, method, uri, body).await;
    (s, serde_json::from_slice(&b).unwrap_or(Value::Null))
}

/// Create a session and return `(id, create response)`.
pub async fn create(app: &Router, body: Value) -> (String, Value) {
    let (status, v) = call_json(app, "POST", "/sessions", Some(body)).await;
    assert_eq!(status, StatusCode::CREATED, "{v}");
    (v["session_id"].as_str().unwrap().to_string(), v)
}

pub fn choice(pair: &Value, winner: &str) -> Value {
    serde_json::json!({ "nonce": pair["nonce"], "winner": winner })
}

/// Native parameter vector of candidate `k` in banner order.
pub fn colors(pair: &Value, k: usize) -> [f64; 6] {
    let p = &pair["candidates"][k]["params"];
    ["fg_r", "fg_g", "fg_b", "bg_r", "bg_g", "bg_b"].map(|n| p[n].as_f64().unwrap())
}
