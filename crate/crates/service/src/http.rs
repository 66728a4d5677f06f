//! JSON-over-HTTP wire API.
//!
//! | method | path | body |
//! |---|---|---|
//! | POST | `/sessions` | session spec |
//! | POST | `/sessions/{id}/configure` | model configuration |
//! | POST | `/sessions/{id}/bids` | bid, plus `bidder_id` (or `x-bidder-id` header) |
//! | POST | `/sessions/{id}/search` | `{"seed": u64}` |
//! | GET | `/sessions/{id}?viewer=` | none |
//! | GET | `/sessions/{id}/events?viewer=auctioneer` | none |
//!
//! Errors use the envelope `{"error": {"code", "message"}}`.

use std::net::SocketAddr;
use std::sync::Arc;

use axum::body::Bytes;
use axum::extract::{Path, RawQuery, State};
use axum::http::{HeaderMap, StatusCode};
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use serde::Deserialize;
use serde_json::{json, Value};

use crate::error::{ErrorCode, ServiceError};
use crate::store::SessionStore;
use crate::views::Viewer;

pub const BIDDER_HEADER: &str = "x-bidder-id";

impl IntoResponse for ServiceError {
    fn into_response(self) -> Response {
        let status = match self.code {
            ErrorCode::Invalid => StatusCode::BAD_REQUEST,
            ErrorCode::NotFound => StatusCode::NOT_FOUND,
            ErrorCode::WrongPhase | ErrorCode::NoBids => StatusCode::CONFLICT,
            ErrorCode::UnknownBidder | ErrorCode::Forbidden => StatusCode::FORBIDDEN,
            ErrorCode::Integrity | ErrorCode::Io => StatusCode::INTERNAL_SERVER_ERROR,
        };
        let body = json!({"error": {"code": self.code, "message": self.message}});
        (status, Json(body)).into_response()
    }
}

type ApiResult = Result<Response, ServiceError>;

fn parse_body(body: &Bytes) -> Result<Value, ServiceError> {
    if body.is_empty() {
        return Err(ServiceError::invalid("request body is empty"));
    }
    Ok(serde_json::from_slice(body)?)
}

fn viewer_from_query(query: Option<String>) -> Viewer {
    let viewer = query
        .as_deref()
        .unwrap_or("")
        .split('&')
        .filter_map(|pair| pair.split_once('='))
        .find(|(k, _)| *k == "viewer")
        .map(|(_, v)| v.to_string())
        .unwrap_or_default();
    Viewer::parse(&viewer)
}

/// Runs a store operation off the async executor.
async fn blocking<T, F>(store: &Arc<SessionStore>, f: F) -> Result<T, ServiceError>
where
    T: Send + 'static,
    F: FnOnce(&SessionStore) -> Result<T, ServiceError> + Send + 'static,
{
    let store = Arc::clone(store);
    tokio::task::spawn_blocking(move || f(&store))
        .await
        .map_err(|e| ServiceError::new(ErrorCode::Io, format!("worker failed: {e}")))?
}

async fn create(State(store): State<Arc<SessionStore>>, body: Bytes) -> ApiResult {
    let spec = parse_body(&body)?;
    let session = blocking(&store, move |s| s.create_session(spec)).await?;
    Ok((StatusCode::CREATED, Json(json!({"id": session.id, "phase": session.phase}))).into_response())
}

async fn configure(State(store): State<Arc<SessionStore>>, Path(id): Path<String>, body: Bytes) -> ApiResult {
    let config = parse_body(&body)?;
    let view = blocking(&store, move |s| {
        s.configure(&id, config)?;
        s.view(&id, &Viewer::Auctioneer)
    })
    .await?;
    Ok(Json(view).into_response())
}

async fn submit_bid(
    State(store): State<Arc<SessionStore>>,
    Path(id): Path<String>,
    headers: HeaderMap,
    body: Bytes,
) -> ApiResult {
    let mut bid = parse_body(&body)?;
    let from_body = match bid.as_object_mut().map(|o| o.remove("bidder_id")) {
        Some(Some(Value::String(b))) => Some(b),
        Some(Some(_)) => return Err(ServiceError::invalid("bidder_id must be a string")),
        _ => None,
    };
    let from_header = match headers.get(BIDDER_HEADER) {
        Some(h) => Some(h.to_str().map_err(|_| ServiceError::invalid("bad bidder header"))?.to_string()),
        None => None,
    };
    let bidder = match (from_header, from_body) {
        (Some(h), Some(b)) if h != b => return Err(ServiceError::invalid("bidder_id in header and body differ")),
        (Some(h), _) => h,
        (None, Some(b)) => b,
        (None, None) => return Err(ServiceError::invalid("missing bidder_id")),
    };
    let ack = blocking(&store, move |s| s.submit_bid(&id, &bidder, bid)).await?;
    Ok(Json(ack).into_response())
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct SearchBody {
    seed: u64,
}

async fn search(State(store): State<Arc<SessionStore>>, Path(id): Path<String>, body: Bytes) -> ApiResult {
    let body: SearchBody = serde_json::from_value(parse_body(&body)?)?;
    let view = blocking(&store, move |s| {
        s.run_search(&id, body.seed)?;
        s.view(&id, &Viewer::Auctioneer)
    })
    .await?;
    Ok(Json(view).into_response())
}

async fn get_view(State(store): State<Arc<SessionStore>>, Path(id): Path<String>, RawQuery(q): RawQuery) -> ApiResult {
    let viewer = viewer_from_query(q);
    Ok(Json(blocking(&store, move |s| s.view(&id, &viewer)).await?).into_response())
}

async fn events(State(store): State<Arc<SessionStore>>, Path(id): Path<String>, RawQuery(q): RawQuery) -> ApiResult {
    let viewer = viewer_from_query(q);
    let events = blocking(&store, move |s| s.events(&id, &viewer)).await?;
    Ok(Json(json!({"events": events})).into_response())
}

async fn not_found() -> ServiceError {
    ServiceError::new(ErrorCode::NotFound, "no such route")
}

pub fn router(store: Arc<SessionStore>) -> Router {
    Router::new()
        .route("/sessions", post(create))
        .route("/sessions/{id}", get(get_view))
        .route("/sessions/{id}/configure", post(configure))
        .route("/sessions/{id}/bids", post(submit_bid))
        .route("/sessions/{id}/search", post(search))
        .route("/sessions/{id}/events", get(events))
        .fallback(not_found)
        .with_state(store)
}

/// Serves the API on `addr` until the future is dropped or ctrl-c arrives.
pub async fn serve(addr: SocketAddr, store: Arc<SessionStore>) -> std::io::Result<()> {
    let listener = tokio::net::TcpListener::bind(addr).await?;
    axum::serve(listener, router(store))
        .with_graceful_shutdown(async {
            let _ = tokio::signal::ctrl_c().await;
        })
        .await
}
