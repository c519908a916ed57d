//! HTTP+JSON session service.
//!
//! ```text
//! POST   /sessions                {text} | {sample_id}          -> {id, hypothesis}
//! POST   /sessions/{id}/feedback  {position, character}         -> {hypothesis, keystrokes, mouse_actions, latency_ms, validated_prefix_length}
//!                                 {position, end_of_text: true}
//! POST   /sessions/{id}/accept                                  -> {trace, ksmr, hypothesis}
//! GET    /sessions/{id}                                         -> current state
//! DELETE /sessions/{id}
//! GET    /ui[/path]                                             -> static files (or a placeholder)
//! ```
//!
//! Requests on one session are serialized by its lock; decoding runs on the
//! blocking pool so sessions proceed in parallel.

use std::collections::HashMap;
use std::future::Future;
use std::net::SocketAddr;
use std::path::{Component, Path, PathBuf};
use std::sync::{Arc, Mutex};
use std::time::{Duration, Instant};

use axum::extract::rejection::JsonRejection;
use axum::extract::{Path as UrlPath, State};
use axum::http::{header, StatusCode};
use axum::response::{Html, IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use serde::{Deserialize, Serialize};
use serde_json::json;

use crate::corpus::Dataset;
use crate::decoder::{DecodeError, SearchConfig};
use crate::metrics::{InteractionTrace, KsmrConvention};
use crate::scorers::{Scorer, ScorerError};
use crate::seqcore::{FeedbackSignal, SourceContext};
use crate::session::{Session, SessionError};

#[derive(Debug, Clone)]
pub struct ServerConfig {
    pub search: SearchConfig,
    pub ksmr: KsmrConvention,
    pub session_ttl: Duration,
    pub ui_dir: Option<PathBuf>,
}

impl Default for ServerConfig {
    fn default() -> Self {
        Self {
            search: SearchConfig::default(),
            ksmr: KsmrConvention::default(),
            session_ttl: Duration::from_secs(30 * 60),
            ui_dir: None,
        }
    }
}

struct Entry {
    session: Session,
    last_active: Instant,
}

type Shared = Arc<Mutex<Entry>>;

pub struct AppState {
    scorer: Arc<dyn Scorer>,
    samples: HashMap<String, SourceContext>,
    sessions: Mutex<HashMap<String, Shared>>,
    cfg: ServerConfig,
}

impl AppState {
    pub fn new(scorer: Arc<dyn Scorer>, cfg: ServerConfig) -> Self {
        Self {
            scorer,
            samples: HashMap::new(),
            sessions: Mutex::new(HashMap::new()),
            cfg,
        }
    }

    /// Makes every sample addressable by `sample_id`.
    pub fn with_samples(mut self, dataset: &Dataset) -> Self {
        for s in &dataset.samples {
            self.samples.insert(s.id.clone(), s.source.clone());
        }
        self
    }

    pub fn session_count(&self) -> usize {
        self.sessions.lock().expect("session map poisoned").len()
    }

    fn purge_expired(&self) {
        let ttl = self.cfg.session_ttl;
        let mut map = self.sessions.lock().expect("session map poisoned");
        // a session whose lock is held is in use, hence not idle
        map.retain(|_, e| e.try_lock().map_or(true, |e| e.last_active.elapsed() < ttl));
    }

    fn lookup(&self, id: &str) -> Result<Shared, ApiError> {
        self.purge_expired();
        self.sessions
            .lock()
            .expect("session map poisoned")
            .get(id)
            .cloned()
            .ok_or_else(|| ApiError::new(StatusCode::NOT_FOUND, "unknown_session", format!("no session {id:?}")))
    }
}

#[derive(Debug)]
pub struct ApiError {
    status: StatusCode,
    kind: &'static str,
    message: String,
}

impl ApiError {
    fn new(status: StatusCode, kind: &'static str, message: impl Into<String>) -> Self {
        Self {
            status,
            kind,
            message: message.into(),
        }
    }

    fn bad_request(message: impl Into<String>) -> Self {
        Self::new(StatusCode::BAD_REQUEST, "bad_request", message)
    }
}

impl From<SessionError> for ApiError {
    fn from(e: SessionError) -> Self {
        let message = e.to_string();
        match e {
            SessionError::Prefix(_) => Self::new(StatusCode::BAD_REQUEST, "out_of_bounds", message),
            SessionError::Accepted => Self::new(StatusCode::CONFLICT, "accepted", message),
            SessionError::Decode(DecodeError::Scorer(ScorerError::UnknownSource(_))) => {
                Self::new(StatusCode::NOT_FOUND, "unknown_source", message)
            }
            SessionError::Decode(DecodeError::Scorer(ScorerError::UnsupportedModality(_))) => {
                Self::new(StatusCode::BAD_REQUEST, "unsupported_modality", message)
            }
            SessionError::Metric(_) => Self::new(StatusCode::CONFLICT, "metric", message),
            SessionError::Decode(_) => Self::new(StatusCode::INTERNAL_SERVER_ERROR, "decode", message),
        }
    }
}

impl From<JsonRejection> for ApiError {
    fn from(e: JsonRejection) -> Self {
        Self::bad_request(e.body_text())
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        (self.status, Json(json!({ "error": self.message, "kind": self.kind }))).into_response()
    }
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CreateRequest {
    pub text: Option<String>,
    pub sample_id: Option<String>,
}

#[derive(Debug, Serialize, Deserialize)]
pub struct CreateResponse {
    pub id: String,
    pub hypothesis: String,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FeedbackRequest {
    pub position: usize,
    pub character: Option<String>,
    #[serde(default)]
    pub end_of_text: bool,
}

impl FeedbackRequest {
    fn signal(&self) -> Result<FeedbackSignal, ApiError> {
        match (&self.character, self.end_of_text) {
            (Some(_), true) => Err(ApiError::bad_request("give either character or end_of_text")),
            (None, true) => Ok(FeedbackSignal::end_of_text(self.position)),
            (Some(c), false) => {
                let mut chars = c.chars();
                match (chars.next(), chars.next()) {
                    (Some(ch), None) => Ok(FeedbackSignal::char(self.position, ch)),
                    _ => Err(ApiError::bad_request("character must be exactly one character")),
                }
            }
            (None, false) => Err(ApiError::bad_request("missing character")),
        }
    }
}

#[derive(Debug, Serialize, Deserialize)]
pub struct FeedbackResponse {
    pub hypothesis: String,
    pub keystrokes: usize,
    pub mouse_actions: usize,
    pub latency_ms: f64,
    pub validated_prefix_length: usize,
}

#[derive(Debug, Serialize, Deserialize)]
pub struct AcceptResponse {
    pub hypothesis: String,
    pub trace: InteractionTrace,
    /// Absent when the accepted hypothesis is empty.
    pub ksmr: Option<f64>,
}

#[derive(Debug, Serialize, Deserialize)]
pub struct SessionView {
    pub id: String,
    pub source_id: Option<String>,
    pub modality: String,
    pub hypothesis: String,
    pub validated_prefix_length: usize,
    pub keystrokes: usize,
    pub mouse_actions: usize,
    pub accepted: bool,
    pub trace: InteractionTrace,
}

async fn blocking<T: Send + 'static>(f: impl FnOnce() -> Result<T, ApiError> + Send + 'static) -> Result<T, ApiError> {
    tokio::task::spawn_blocking(f)
        .await
        .map_err(|e| ApiError::new(StatusCode::INTERNAL_SERVER_ERROR, "internal", e.to_string()))?
}

async fn create(
    State(app): State<Arc<AppState>>,
    body: Result<Json<CreateRequest>, JsonRejection>,
) -> Result<(StatusCode, Json<CreateResponse>), ApiError> {
    let Json(req) = body?;
    let source = match (req.text, req.sample_id) {
        (Some(text), None) => SourceContext::text(text),
        (None, Some(id)) => app.samples.get(&id).cloned().ok_or_else(|| {
            ApiError::new(
                StatusCode::NOT_FOUND,
                "unknown_source",
                ScorerError::UnknownSource(id).to_string(),
            )
        })?,
        _ => return Err(ApiError::bad_request("give exactly one of text and sample_id")),
    };
    app.purge_expired();
    let worker = Arc::clone(&app);
    let session = blocking(move || Ok(Session::start(&worker.scorer, source, worker.cfg.search.clone())?)).await?;
    let id = uuid::Uuid::new_v4().to_string();
    let hypothesis = session.hypothesis().to_owned();
    app.sessions.lock().expect("session map poisoned").insert(
        id.clone(),
        Arc::new(Mutex::new(Entry {
            session,
            last_active: Instant::now(),
        })),
    );
    tracing::debug!(%id, "session created");
    Ok((StatusCode::CREATED, Json(CreateResponse { id, hypothesis })))
}

async fn feedback(
    State(app): State<Arc<AppState>>,
    UrlPath(id): UrlPath<String>,
    body: Result<Json<FeedbackRequest>, JsonRejection>,
) -> Result<Json<FeedbackResponse>, ApiError> {
    let Json(req) = body?;
    let signal = req.signal()?;
    let entry = app.lookup(&id)?;
    let worker = Arc::clone(&app);
    blocking(move || {
        let mut e = entry.lock().expect("session poisoned");
        e.last_active = Instant::now();
        let out = e.session.feedback(&worker.scorer, signal)?;
        let trace = e.session.trace();
        Ok(Json(FeedbackResponse {
            hypothesis: e.session.hypothesis().to_owned(),
            keystrokes: trace.keystrokes(),
            mouse_actions: trace.mouse_actions(worker.cfg.ksmr),
            latency_ms: out.latency.as_secs_f64() * 1e3,
            validated_prefix_length: e.session.validated_prefix_length(),
        }))
    })
    .await
}

async fn accept(State(app): State<Arc<AppState>>, UrlPath(id): UrlPath<String>) -> Result<Json<AcceptResponse>, ApiError> {
    let entry = app.lookup(&id)?;
    let mut e = entry.lock().expect("session poisoned");
    e.last_active = Instant::now();
    let trace = e.session.accept().clone();
    Ok(Json(AcceptResponse {
        hypothesis: e.session.hypothesis().to_owned(),
        ksmr: e.session.ksmr(app.cfg.ksmr).ok(),
        trace,
    }))
}

async fn view(State(app): State<Arc<AppState>>, UrlPath(id): UrlPath<String>) -> Result<Json<SessionView>, ApiError> {
    let entry = app.lookup(&id)?;
    let mut e = entry.lock().expect("session poisoned");
    e.last_active = Instant::now();
    let s = &e.session;
    Ok(Json(SessionView {
        source_id: s.source().id().map(str::to_owned),
        modality: s.source().modality().to_string(),
        hypothesis: s.hypothesis().to_owned(),
        validated_prefix_length: s.validated_prefix_length(),
        keystrokes: s.trace().keystrokes(),
        mouse_actions: s.trace().mouse_actions(app.cfg.ksmr),
        accepted: s.is_accepted(),
        trace: s.trace().clone(),
        id,
    }))
}

async fn remove(State(app): State<Arc<AppState>>, UrlPath(id): UrlPath<String>) -> Result<StatusCode, ApiError> {
    app.lookup(&id)?;
    app.sessions.lock().expect("session map poisoned").remove(&id);
    Ok(StatusCode::NO_CONTENT)
}

const PLACEHOLDER: &str = "<!doctype html>
<html><head><meta charset=\"utf-8\"><title>ipredict</title></head>
<body>
<h1>ipredict session service</h1>
<p>No UI bundle configured. Start the server with <code>--ui-dir DIR</code> to serve one here.</p>
<p>API: <code>POST /sessions</code>, <code>POST /sessions/{id}/feedback</code>,
<code>POST /sessions/{id}/accept</code>, <code>GET /sessions/{id}</code>, <code>DELETE /sessions/{id}</code>.</p>
</body></html>
";

fn content_type(path: &Path) -> &'static str {
    match path.extension().and_then(|e| e.to_str()) {
        Some("html") => "text/html; charset=utf-8",
        Some("js" | "mjs") => "text/javascript; charset=utf-8",
        Some("css") => "text/css; charset=utf-8",
        Some("json" | "map") => "application/json",
        Some("svg") => "image/svg+xml",
        Some("png") => "image/png",
        Some("ico") => "image/x-icon",
        _ => "application/octet-stream",
    }
}

async fn ui_file(app: &AppState, rel: &str) -> Response {
    let Some(dir) = &app.cfg.ui_dir else {
        return Html(PLACEHOLDER).into_response();
    };
    let rel = Path::new(rel);
    if rel.components().any(|c| !matches!(c, Component::Normal(_))) {
        return StatusCode::NOT_FOUND.into_response();
    }
    let mut path = dir.join(rel);
    if rel.as_os_str().is_empty() || path.is_dir() {
        path = path.join("index.html");
    }
    match tokio::fs::read(&path).await {
        Ok(bytes) => ([(header::CONTENT_TYPE, content_type(&path))], bytes).into_response(),
        Err(_) => StatusCode::NOT_FOUND.into_response(),
    }
}

async fn ui_index(State(app): State<Arc<AppState>>) -> Response {
    ui_file(&app, "").await
}

async fn ui_path(State(app): State<Arc<AppState>>, UrlPath(rel): UrlPath<String>) -> Response {
    ui_file(&app, &rel).await
}

pub fn router(state: Arc<AppState>) -> Router {
    Router::new()
        .route("/sessions", post(create))
        .route("/sessions/{id}", get(view).delete(remove))
        .route("/sessions/{id}/feedback", post(feedback))
        .route("/sessions/{id}/accept", post(accept))
        .route("/ui", get(ui_index))
        .route("/ui/", get(ui_index))
        .route("/ui/{*path}", get(ui_path))
        .with_state(state)
}

pub async fn serve(
    listener: tokio::net::TcpListener,
    state: Arc<AppState>,
    shutdown: impl Future<Output = ()> + Send + 'static,
) -> std::io::Result<()> {
    axum::serve(listener, router(state))
        .with_graceful_shutdown(shutdown)
        .await
}

/// A server on its own runtime thread, stopped on drop.
pub struct BackgroundServer {
    pub addr: SocketAddr,
    stop: Option<tokio::sync::oneshot::Sender<()>>,
    thread: Option<std::thread::JoinHandle<std::io::Result<()>>>,
}

impl BackgroundServer {
    pub fn start(state: Arc<AppState>, addr: SocketAddr) -> std::io::Result<Self> {
        let rt = tokio::runtime::Builder::new_multi_thread().enable_all().build()?;
        let listener = rt.block_on(tokio::net::TcpListener::bind(addr))?;
        let addr = listener.local_addr()?;
        let (tx, rx) = tokio::sync::oneshot::channel::<()>();
        let thread = std::thread::spawn(move || {
            rt.block_on(serve(listener, state, async {
                let _ = rx.await;
            }))
        });
        Ok(Self {
            addr,
            stop: Some(tx),
            thread: Some(thread),
        })
    }

    pub fn url(&self, path: &str) -> String {
        format!("http://{}{}", self.addr, path)
    }
}

impl Drop for BackgroundServer {
    fn drop(&mut self) {
        if let Some(tx) = self.stop.take() {
            let _ = tx.send(());
        }
        if let Some(t) = self.thread.take() {
            let _ = t.join();
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn feedback_request_validation() {
        let req = |c: Option<&str>, eot| FeedbackRequest {
            position: 1,
            character: c.map(str::to_owned),
            end_of_text: eot,
        };
        assert_eq!(req(Some("b"), false).signal().unwrap(), FeedbackSignal::char(1, 'b'));
        assert_eq!(req(None, true).signal().unwrap(), FeedbackSignal::end_of_text(1));
        for bad in [req(Some("bc"), false), req(Some(""), false), req(None, false), req(Some("b"), true)] {
            assert_eq!(bad.signal().unwrap_err().status, StatusCode::BAD_REQUEST);
        }
    }

    #[test]
    fn content_types() {
        assert_eq!(content_type(Path::new("a/index.html")), "text/html; charset=utf-8");
        assert_eq!(content_type(Path::new("x.bin")), "application/octet-stream");
    }
}
