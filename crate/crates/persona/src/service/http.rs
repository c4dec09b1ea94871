use std::collections::HashMap;
use std::net::SocketAddr;
use std::path::PathBuf;
use std::sync::{Arc, RwLock};

use axum::body::Bytes;
use axum::extract::{Path, Query, State};
use axum::http::{header, HeaderMap, StatusCode};
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use serde_json::json;
use tokio::sync::{mpsc, oneshot};
use tower_http::services::ServeDir;

use super::desk::{Ack, Desk, ServiceError, Submission};
use crate::error::{PersonaError, Result};

type Reply = oneshot::Sender<std::result::Result<Ack, ServiceError>>;

/// Shared handle: reads take the lock directly, writes go through the
/// single writer task.
#[derive(Clone)]
pub struct AppState {
    desk: Arc<RwLock<Desk>>,
    writes: mpsc::Sender<(Submission, Reply)>,
}

impl AppState {
    /// Spawns the writer task; must be called inside a tokio runtime.
    pub fn new(desk: Desk) -> Self {
        let desk = Arc::new(RwLock::new(desk));
        let (writes, mut queue) = mpsc::channel::<(Submission, Reply)>(256);
        let writer = Arc::clone(&desk);
        tokio::spawn(async move {
            while let Some((submission, reply)) = queue.recv().await {
                let result = writer
                    .write()
                    .expect("desk lock poisoned")
                    .submit(&submission);
                let _ = reply.send(result);
            }
        });
        AppState { desk, writes }
    }

    pub fn desk(&self) -> std::sync::RwLockReadGuard<'_, Desk> {
        self.desk.read().expect("desk lock poisoned")
    }
}

fn error_response(err: &ServiceError) -> Response {
    let status = StatusCode::from_u16(err.status()).unwrap_or(StatusCode::INTERNAL_SERVER_ERROR);
    (status, Json(json!({ "error": err.to_string() }))).into_response()
}

fn bad_request(message: String) -> Response {
    (StatusCode::BAD_REQUEST, Json(json!({ "error": message }))).into_response()
}

fn bearer(headers: &HeaderMap) -> Option<&str> {
    headers
        .get(header::AUTHORIZATION)?
        .to_str()
        .ok()?
        .strip_prefix("Bearer ")
        .map(str::trim)
}

/// The annotator named in the request. A bearer token, when sent, must agree.
fn annotator(
    headers: &HeaderMap,
    named: Option<&str>,
) -> std::result::Result<String, ServiceError> {
    match (bearer(headers), named) {
        (Some(token), Some(name)) if token != name => {
            Err(ServiceError::UnknownAnnotator(name.to_string()))
        }
        (_, Some(name)) => Ok(name.to_string()),
        (Some(token), None) => Ok(token.to_string()),
        (None, None) => Err(ServiceError::UnknownAnnotator(String::new())),
    }
}

async fn next_task(
    State(state): State<AppState>,
    headers: HeaderMap,
    Query(query): Query<HashMap<String, String>>,
) -> Response {
    let who = match annotator(&headers, query.get("annotator").map(String::as_str)) {
        Ok(who) => who,
        Err(e) => return error_response(&e),
    };
    match state.desk().next_task(&who) {
        Ok(task) => Json(json!({ "done": task.is_none(), "task": task })).into_response(),
        Err(e) => error_response(&e),
    }
}

async fn submit(State(state): State<AppState>, headers: HeaderMap, body: Bytes) -> Response {
    let submission: Submission = match serde_json::from_slice(&body) {
        Ok(s) => s,
        Err(e) => return bad_request(format!("invalid submission: {e}")),
    };
    if let Err(e) = annotator(&headers, Some(&submission.annotator)) {
        return error_response(&e);
    }
    let (reply, answer) = oneshot::channel();
    if state.writes.send((submission, reply)).await.is_err() {
        return (StatusCode::SERVICE_UNAVAILABLE, "writer stopped").into_response();
    }
    match answer.await {
        Ok(Ok(ack)) => Json(ack).into_response(),
        Ok(Err(e)) => error_response(&e),
        Err(_) => (StatusCode::SERVICE_UNAVAILABLE, "writer stopped").into_response(),
    }
}

async fn progress(State(state): State<AppState>) -> Response {
    Json(state.desk().progress()).into_response()
}

async fn subscene(State(state): State<AppState>, Path(id): Path<String>) -> Response {
    match state.desk().subscene(&id) {
        Ok(s) => Json(s).into_response(),
        Err(e) => error_response(&e),
    }
}

pub fn router(state: AppState, static_dir: Option<PathBuf>) -> Router {
    let api = Router::new()
        .route("/api/tasks/next", get(next_task))
        .route("/api/annotations", post(submit))
        .route("/api/progress", get(progress))
        .route("/api/subscenes/{id}", get(subscene))
        .with_state(state);
    match static_dir {
        Some(dir) => api.fallback_service(ServeDir::new(dir)),
        None => api,
    }
}

#[derive(Debug, Clone)]
pub struct ServeOptions {
    pub addr: SocketAddr,
    pub static_dir: Option<PathBuf>,
}

pub async fn serve(desk: Desk, options: ServeOptions) -> Result<()> {
    let state = AppState::new(desk);
    let app = router(state, options.static_dir);
    let listener = tokio::net::TcpListener::bind(options.addr)
        .await
        .map_err(|e| PersonaError::Config(format!("cannot bind {}: {e}", options.addr)))?;
    log::info!("listening on http://{}", options.addr);
    axum::serve(listener, app)
        .await
        .map_err(|e| PersonaError::Data(format!("server error: {e}")))
}
