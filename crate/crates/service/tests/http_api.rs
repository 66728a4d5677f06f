mod common;

use std::sync::Arc;

use axum::body::Body;
use axum::http::{Request, StatusCode};
use http_body_util::BodyExt;
use qauction_service::http::{router, BIDDER_HEADER};
use serde_json::{json, Value};
use tower::ServiceExt;

struct Api(axum::Router);

impl Api {
    fn new() -> Self {
        Api(router(Arc::new(common::memory_store())))
    }

    async fn call(&self, method: &str, uri: &str, body: Option<Value>, bidder: Option<&str>) -> (StatusCode, Value) {
        let mut req = Request::builder().method(method).uri(uri);
        if let Some(b) = bidder {
            req = req.header(BIDDER_HEADER, b);
        }
        let body = body.map(|b| Body::from(b.to_string())).unwrap_or_else(Body::empty);
        let resp = self.0.clone().oneshot(req.header("content-type", "application/json").body(body).unwrap()).await.unwrap();
        let status = resp.status();
        let bytes = resp.into_body().collect().await.unwrap().to_bytes();
        (status, if bytes.is_empty() { Value::Null } else { serde_json::from_slice(&bytes).unwrap() })
    }

    async fn raw(&self, method: &str, uri: &str, body: &'static str) -> (StatusCode, Value) {
        let req = Request::builder().method(method).uri(uri).body(Body::from(body)).unwrap();
        let resp = self.0.clone().oneshot(req).await.unwrap();
        let status = resp.status();
        let bytes = resp.into_body().collect().await.unwrap().to_bytes();
        (status, serde_json::from_slice(&bytes).unwrap())
    }
}

fn error_code(body: &Value) -> &str {
    body["error"]["code"].as_str().unwrap()
}

#[tokio::test]
async fn full_lifecycle_over_http() {
    let api = Api::new();
    let (status, created) = api.call("POST", "/sessions", Some(common::hp_spec()), None).await;
    assert_eq!(status, StatusCode::CREATED);
    assert_eq!(created["phase"], json!("announced"));
    let id = created["id"].as_str().unwrap().to_string();

    let (status, view) = api.call("POST", &format!("/sessions/{id}/configure"), Some(common::pinned_config()), None).await;
    assert_eq!(status, StatusCode::OK);
    assert_eq!(view["phase"], json!("bidding"));

    let (status, ack) = api.call("POST", &format!("/sessions/{id}/bids"), Some(common::pinned_bid_a()), Some("A")).await;
    assert_eq!(status, StatusCode::OK);
    assert_eq!(ack, json!({"session_id": id, "bidder_id": "A", "seq": 3, "replaced": false}));
    let mut body_b = common::pinned_bid_b();
    body_b["bidder_id"] = json!("B");
    let (status, _) = api.call("POST", &format!("/sessions/{id}/bids"), Some(body_b), None).await;
    assert_eq!(status, StatusCode::OK);

    let (status, own) = api.call("GET", &format!("/sessions/{id}?viewer=A"), None, None).await;
    assert_eq!(status, StatusCode::OK);
    assert_eq!(own["own_bid"], common::pinned_bid_a());

    let (status, view) = api.call("POST", &format!("/sessions/{id}/search"), Some(json!({"seed": 3})), None).await;
    assert_eq!(status, StatusCode::OK);
    assert_eq!(view["phase"], json!("settled"));
    assert_eq!(view["settled_revenue"], json!(5.0));

    let (status, public) = api.call("GET", &format!("/sessions/{id}"), None, None).await;
    assert_eq!(status, StatusCode::OK);
    assert_eq!(public["settled_revenue"], json!(5.0));
    assert!(public.get("result").is_none());

    let (status, events) = api.call("GET", &format!("/sessions/{id}/events?viewer=auctioneer"), None, None).await;
    assert_eq!(status, StatusCode::OK);
    let kinds: Vec<&str> = events["events"].as_array().unwrap().iter().map(|e| e["kind"].as_str().unwrap()).collect();
    assert_eq!(kinds, ["created", "configured", "bid_submitted", "bid_submitted", "search_started", "settled"]);
}

#[tokio::test]
async fn error_envelope_and_status_codes() {
    let api = Api::new();
    let (status, body) = api.raw("POST", "/sessions", "{\"kind\":").await;
    assert_eq!(status, StatusCode::BAD_REQUEST);
    assert_eq!(error_code(&body), "invalid");
    assert!(body["error"]["message"].is_string());

    let (status, body) = api.call("GET", "/sessions/nope", None, None).await;
    assert_eq!((status, error_code(&body)), (StatusCode::NOT_FOUND, "not_found"));
    let (status, body) = api.call("GET", "/elsewhere", None, None).await;
    assert_eq!((status, error_code(&body)), (StatusCode::NOT_FOUND, "not_found"));

    let (_, created) = api.call("POST", "/sessions", Some(common::hp_spec()), None).await;
    let id = created["id"].as_str().unwrap().to_string();
    let bids = format!("/sessions/{id}/bids");
    let (status, body) = api.call("POST", &bids, Some(common::pinned_bid_a()), Some("A")).await;
    assert_eq!((status, error_code(&body)), (StatusCode::CONFLICT, "wrong_phase"));

    api.call("POST", &format!("/sessions/{id}/configure"), Some(common::pinned_config()), None).await;
    let (status, body) = api.call("POST", &format!("/sessions/{id}/search"), Some(json!({"seed": 1})), None).await;
    assert_eq!((status, error_code(&body)), (StatusCode::CONFLICT, "no_bids"));
    let (status, body) = api.call("POST", &bids, Some(common::pinned_bid_a()), Some("Z")).await;
    assert_eq!((status, error_code(&body)), (StatusCode::FORBIDDEN, "unknown_bidder"));
    let (status, body) = api.call("POST", &bids, Some(common::pinned_bid_a()), None).await;
    assert_eq!((status, error_code(&body)), (StatusCode::BAD_REQUEST, "invalid"));
    let mut mismatched = common::pinned_bid_a();
    mismatched["bidder_id"] = json!("B");
    let (status, _) = api.call("POST", &bids, Some(mismatched), Some("A")).await;
    assert_eq!(status, StatusCode::BAD_REQUEST);
    let (status, body) = api.call("GET", &format!("/sessions/{id}/events?viewer=A"), None, None).await;
    assert_eq!((status, error_code(&body)), (StatusCode::FORBIDDEN, "forbidden"));
    let (status, _) = api.call("POST", &format!("/sessions/{id}/search"), Some(json!({"seed": 1, "x": 0})), None).await;
    assert_eq!(status, StatusCode::BAD_REQUEST);
}
