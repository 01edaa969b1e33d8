use std::net::SocketAddr;
use std::sync::Arc;

use axum::extract::{Path, Query, State};
use axum::http::{header, HeaderMap, HeaderValue, StatusCode};
use axum::response::{IntoResponse, Response};
use axum::routing::get;
use axum::Router;
use serde::Deserialize;
use sha2::{Digest, Sha256};

use super::{RequestContext, SimEngine};
use crate::model::{Cookie, Language, Location};

/// SHA-256 of the response body, hex encoded.
pub const CONTENT_HASH_HEADER: &str = "x-content-hash";

struct AppState {
    engine: Arc<SimEngine>,
    allow_truth: bool,
}

type Shared = State<Arc<AppState>>;

fn respond(status: StatusCode, content_type: &'static str, body: String) -> Response {
    let hash = hex::encode(Sha256::digest(body.as_bytes()));
    let mut resp = (status, body).into_response();
    let h = resp.headers_mut();
    h.insert(header::CONTENT_TYPE, HeaderValue::from_static(content_type));
    h.insert(CONTENT_HASH_HEADER, HeaderValue::from_str(&hash).expect("hex is a valid header"));
    resp
}

fn error(status: StatusCode, message: &str) -> Response {
    respond(status, "application/json", serde_json::json!({ "error": message }).to_string())
}

#[derive(Deserialize)]
struct SearchParams {
    q: String,
    loc: String,
    #[serde(default)]
    lang: Option<String>,
    #[serde(default)]
    ip: String,
}

fn request_cookies(headers: &HeaderMap) -> Vec<Cookie> {
    headers
        .get_all(header::COOKIE)
        .iter()
        .filter_map(|v| v.to_str().ok())
        .flat_map(|v| v.split(';'))
        .filter_map(|pair| pair.trim().split_once('='))
        .map(|(n, v)| Cookie::new(n, v, ""))
        .collect()
}

async fn search(State(st): Shared, Query(p): Query<SearchParams>, headers: HeaderMap) -> Response {
    let Ok(location) = Location::new(p.loc.as_str()) else {
        return error(StatusCode::BAD_REQUEST, "bad loc");
    };
    let language = match p.lang.as_deref() {
        Some(l) => match Language::new(l) {
            Ok(l) => l,
            Err(_) => return error(StatusCode::BAD_REQUEST, "bad lang"),
        },
        None => location.local_language().unwrap_or_else(Language::english),
    };
    let ctx = RequestContext::new(location, language, &request_cookies(&headers), p.ip);
    let serp = st.engine.serve_search(&p.q, &ctx);
    respond(StatusCode::OK, "application/json", serde_json::to_string(&serp).expect("serp serializes"))
}

async fn page(State(st): Shared, Path(id): Path<String>) -> Response {
    match st.engine.serve_page(&id) {
        Some(html) => respond(StatusCode::OK, "text/html; charset=utf-8", html),
        None => error(StatusCode::NOT_FOUND, "no such document"),
    }
}

#[derive(Deserialize)]
struct TrackParams {
    #[serde(default)]
    site: Option<String>,
}

async fn track(State(st): Shared, Path(topic): Path<String>, Query(p): Query<TrackParams>) -> Response {
    let site = p.site.unwrap_or_default();
    match st.engine.serve_track(&topic, &site) {
        Ok(t) => {
            let mut resp = respond(StatusCode::OK, "text/html; charset=utf-8", t.body);
            let mut cookie = format!("{}={}; Path=/", t.cookie.name, t.cookie.value);
            if !site.is_empty() {
                cookie.push_str(&format!("; Domain={site}"));
            }
            if let Ok(v) = HeaderValue::from_str(&cookie) {
                resp.headers_mut().insert(header::SET_COOKIE, v);
            }
            resp
        }
        Err(e) => error(StatusCode::NOT_FOUND, &e.to_string()),
    }
}

async fn truth(State(st): Shared, Path(id): Path<String>) -> Response {
    if !st.allow_truth {
        return error(StatusCode::FORBIDDEN, "ground truth disabled");
    }
    match st.engine.truth(&id) {
        Some(l) => respond(
            StatusCode::OK,
            "application/json",
            serde_json::json!({ "doc_id": id, "leaning": l.map(|l| l.as_str()) }).to_string(),
        ),
        None => error(StatusCode::NOT_FOUND, "no such document"),
    }
}

async fn healthz() -> Response {
    respond(StatusCode::OK, "text/plain", "ok".to_string())
}

/// Routes: `/search`, `/page/{id}`, `/track/{*topic}`, `/truth/{id}`, `/healthz`.
/// `/truth` answers 403 unless `allow_truth` is set.
pub fn router(engine: Arc<SimEngine>, allow_truth: bool) -> Router {
    Router::new()
        .route("/search", get(search))
        .route("/page/{id}", get(page))
        .route("/a/{id}", get(page))
        .route("/track/{*topic}", get(track))
        .route("/truth/{id}", get(truth))
        .route("/healthz", get(healthz))
        .with_state(Arc::new(AppState { engine, allow_truth }))
}

/// Serves until the process ends.
pub async fn serve(engine: Arc<SimEngine>, allow_truth: bool, addr: SocketAddr) -> std::io::Result<()> {
    let listener = tokio::net::TcpListener::bind(addr).await?;
    axum::serve(listener, router(engine, allow_truth)).await
}

/// [`serve`] on a fresh multi-threaded runtime.
pub fn serve_blocking(engine: Arc<SimEngine>, allow_truth: bool, addr: SocketAddr) -> std::io::Result<()> {
    tokio::runtime::Builder::new_multi_thread().enable_all().build()?.block_on(serve(engine, allow_truth, addr))
}
