//! HTTP + SSE chat service: one [`MissionSession`] per mission, events in,
//! questions answered, everything fanned out on a per-mission stream.

use std::collections::HashMap;
use std::convert::Infallible;
use std::fs::OpenOptions;
use std::io::Write;
use std::path::PathBuf;
use std::sync::Arc;

use axum::extract::{Path, State};
use axum::http::StatusCode;
use axum::response::sse::{Event, KeepAlive, Sse};
use axum::response::{Html, IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use axv_explain::model::Diagnostic;
use axv_explain::session::{SessionError, TranscriptEntry};
use axv_explain::sim::parse_log;
use axv_explain::state::StateError;
use axv_explain::{AnswerPolicy, AnswerRecord, MissionEvent, MissionSession, Value};
use futures::{Stream, StreamExt};
use parking_lot::{Mutex, RwLock};
use serde::{Deserialize, Serialize};
use serde_json::json;
use tokio::sync::{broadcast, watch};
use tower_http::services::ServeDir;

const STREAM_CAPACITY: usize = 1024;

#[derive(Debug, Clone, Default)]
pub struct ServiceConfig {
    /// Directory of static UI assets served at `/`. A placeholder page is
    /// served when unset.
    pub ui_dir: Option<PathBuf>,
    /// When set, each mission's transcript is appended to `<dir>/<id>.jsonl`.
    pub transcript_dir: Option<PathBuf>,
}

/// One item on a mission's stream.
#[derive(Debug, Clone, Serialize)]
#[serde(untagged)]
pub enum StreamItem {
    MissionEvent(MissionEvent),
    Chat(TranscriptEntry),
}

impl StreamItem {
    fn name(&self) -> &'static str {
        match self {
            StreamItem::MissionEvent(_) => "mission_event",
            StreamItem::Chat(_) => "chat",
        }
    }

    fn to_sse(&self) -> Event {
        Event::default()
            .event(self.name())
            .json_data(self)
            .expect("stream items serialize")
    }
}

struct Mission {
    session: MissionSession,
    /// Everything ever broadcast, so late subscribers see the whole mission.
    backlog: Vec<StreamItem>,
}

struct MissionHandle {
    inner: Mutex<Mission>,
    tx: broadcast::Sender<StreamItem>,
}

impl MissionHandle {
    /// Records and broadcasts under the mission lock, so subscribers never
    /// see items out of order or twice.
    fn publish(mission: &mut Mission, tx: &broadcast::Sender<StreamItem>, item: StreamItem) {
        mission.backlog.push(item.clone());
        let _ = tx.send(item);
    }
}

pub struct AppState {
    missions: RwLock<HashMap<String, Arc<MissionHandle>>>,
    config: ServiceConfig,
    closing: watch::Sender<bool>,
}

impl AppState {
    pub fn new(config: ServiceConfig) -> Self {
        AppState { missions: RwLock::default(), config, closing: watch::Sender::new(false) }
    }

    fn mission(&self, id: &str) -> Result<Arc<MissionHandle>, ApiError> {
        self.missions.read().get(id).cloned().ok_or_else(|| ApiError::NotFound(id.to_string()))
    }

    fn persist(&self, id: &str, entry: &TranscriptEntry) {
        let Some(dir) = &self.config.transcript_dir else { return };
        let write = || -> std::io::Result<()> {
            std::fs::create_dir_all(dir)?;
            let mut f = OpenOptions::new().create(true).append(true).open(dir.join(format!("{id}.jsonl")))?;
            writeln!(f, "{}", serde_json::to_string(entry).expect("transcript entries serialize"))
        };
        if let Err(e) = write() {
            tracing::warn!(mission = id, error = %e, "could not persist transcript entry");
        }
    }
}

#[derive(Debug, thiserror::Error)]
pub enum ApiError {
    #[error("no mission with id `{0}`")]
    NotFound(String),
    #[error("{0}")]
    Model(String, Option<(usize, usize)>),
    #[error("model failed validation")]
    Invalid(Vec<Diagnostic>),
    #[error("{0}")]
    BadRequest(String),
    #[error("{0}")]
    Conflict(String),
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        let message = self.to_string();
        let (status, body) = match self {
            ApiError::NotFound(_) => (StatusCode::NOT_FOUND, json!({ "error": message })),
            ApiError::Model(_, pos) => (
                StatusCode::BAD_REQUEST,
                json!({
                    "error": message,
                    "diagnostics": [{
                        "line": pos.map(|p| p.0),
                        "column": pos.map(|p| p.1),
                        "message": message,
                    }],
                }),
            ),
            ApiError::Invalid(diags) => {
                (StatusCode::BAD_REQUEST, json!({ "error": message, "diagnostics": diags }))
            }
            ApiError::BadRequest(_) => (StatusCode::BAD_REQUEST, json!({ "error": message })),
            ApiError::Conflict(_) => (StatusCode::CONFLICT, json!({ "error": message })),
        };
        (status, Json(body)).into_response()
    }
}

impl From<SessionError> for ApiError {
    fn from(e: SessionError) -> Self {
        match e {
            SessionError::Model(m) => ApiError::Model(m.to_string(), m.position()),
            SessionError::Invalid(d) => ApiError::Invalid(d),
            SessionError::BadPolicy(_) => ApiError::BadRequest(e.to_string()),
        }
    }
}

impl From<StateError> for ApiError {
    fn from(e: StateError) -> Self {
        match e {
            StateError::OutOfOrder { .. } => ApiError::Conflict(e.to_string()),
            _ => ApiError::BadRequest(e.to_string()),
        }
    }
}

#[derive(Debug, Deserialize)]
pub struct CreateMission {
    pub model: String,
    #[serde(default)]
    pub policy: AnswerPolicy,
    #[serde(default = "yes")]
    pub show_numbers: bool,
    /// Optional JSONL mission log applied before the mission is returned.
    #[serde(default)]
    pub log: Option<String>,
}

fn yes() -> bool {
    true
}

#[derive(Debug, Serialize, Deserialize)]
pub struct Created {
    pub mission_id: String,
}

#[derive(Debug, Deserialize)]
pub struct Ask {
    pub text: String,
}

#[derive(Debug, Serialize, Deserialize, PartialEq)]
pub struct StateView {
    pub clock: f64,
    pub phase: Option<String>,
    pub vars: std::collections::BTreeMap<String, Value>,
    pub zones: Vec<String>,
}

async fn create(
    State(app): State<Arc<AppState>>,
    Json(req): Json<CreateMission>,
) -> Result<(StatusCode, Json<Created>), ApiError> {
    let mut session = MissionSession::create(&req.model, req.policy, req.show_numbers)?;
    let mut backlog = Vec::new();
    if let Some(log) = &req.log {
        let events = parse_log(log).map_err(|e| ApiError::BadRequest(format!("mission log: {e}")))?;
        for e in events {
            session.post_event(e.clone())?;
            backlog.push(StreamItem::MissionEvent(e));
        }
    }
    let id = uuid::Uuid::new_v4().simple().to_string();
    let (tx, _) = broadcast::channel(STREAM_CAPACITY);
    let handle = MissionHandle { inner: Mutex::new(Mission { session, backlog }), tx };
    app.missions.write().insert(id.clone(), Arc::new(handle));
    tracing::info!(mission = %id, "mission created");
    Ok((StatusCode::CREATED, Json(Created { mission_id: id })))
}

/// Acknowledges an accepted event with the mission clock after applying it.
#[derive(Debug, Serialize, Deserialize)]
pub struct Accepted {
    pub clock: f64,
}

async fn post_event(
    State(app): State<Arc<AppState>>,
    Path(id): Path<String>,
    Json(event): Json<MissionEvent>,
) -> Result<Json<Accepted>, ApiError> {
    let m = app.mission(&id)?;
    let mut inner = m.inner.lock();
    inner.session.post_event(event.clone())?;
    let clock = inner.session.state.clock;
    MissionHandle::publish(&mut inner, &m.tx, StreamItem::MissionEvent(event));
    Ok(Json(Accepted { clock }))
}

async fn ask(
    State(app): State<Arc<AppState>>,
    Path(id): Path<String>,
    Json(req): Json<Ask>,
) -> Result<Json<AnswerRecord>, ApiError> {
    let m = app.mission(&id)?;
    let mut inner = m.inner.lock();
    let answer = inner.session.ask(&req.text);
    let entry = inner.session.transcript().last().expect("ask appends").clone();
    app.persist(&id, &entry);
    MissionHandle::publish(&mut inner, &m.tx, StreamItem::Chat(entry));
    Ok(Json(answer))
}

async fn get_state(
    State(app): State<Arc<AppState>>,
    Path(id): Path<String>,
) -> Result<Json<StateView>, ApiError> {
    let m = app.mission(&id)?;
    let inner = m.inner.lock();
    let s = &inner.session.state;
    Ok(Json(StateView {
        clock: s.clock,
        phase: s.phase.clone(),
        vars: s.vars.clone(),
        zones: s.zones_inside.iter().cloned().collect(),
    }))
}

async fn transcript(
    State(app): State<Arc<AppState>>,
    Path(id): Path<String>,
) -> Result<Json<Vec<TranscriptEntry>>, ApiError> {
    let m = app.mission(&id)?;
    let entries = m.inner.lock().session.transcript().to_vec();
    Ok(Json(entries))
}

async fn stream(
    State(app): State<Arc<AppState>>,
    Path(id): Path<String>,
) -> Result<Sse<impl Stream<Item = Result<Event, Infallible>>>, ApiError> {
    let m = app.mission(&id)?;
    let (backlog, rx) = {
        let inner = m.inner.lock();
        (inner.backlog.clone(), m.tx.subscribe())
    };
    let past = futures::stream::iter(backlog.into_iter().map(|i| Ok(i.to_sse())));
    let live = futures::stream::unfold(rx, |mut rx| async move {
        loop {
            match rx.recv().await {
                Ok(item) => return Some((Ok(item.to_sse()), rx)),
                Err(broadcast::error::RecvError::Lagged(n)) => {
                    tracing::warn!(skipped = n, "slow stream subscriber");
                }
                Err(broadcast::error::RecvError::Closed) => return None,
            }
        }
    });
    let mut closing = app.closing.subscribe();
    let closed = async move {
        let _ = closing.wait_for(|c| *c).await;
    };
    let events = past.chain(live).take_until(closed);
    Ok(Sse::new(events).keep_alive(KeepAlive::default()))
}

const PLACEHOLDER_UI: &str = r#"<!doctype html>
<html><head><meta charset="utf-8"><title>axv-explain</title></head>
<body>
<h1>axv-explain</h1>
<p>No UI assets configured. Start the service with <code>--ui-dir</code> to serve a client here.</p>
<ul>
<li><code>POST /api/missions</code></li>
<li><code>POST /api/missions/{id}/events</code></li>
<li><code>POST /api/missions/{id}/ask</code></li>
<li><code>GET /api/missions/{id}/state</code></li>
<li><code>GET /api/missions/{id}/transcript</code></li>
<li><code>GET /api/missions/{id}/stream</code></li>
</ul>
</body></html>
"#;

pub fn router(state: Arc<AppState>) -> Router {
    let api = Router::new()
        .route("/api/missions", post(create))
        .route("/api/missions/{id}/events", post(post_event))
        .route("/api/missions/{id}/ask", post(ask))
        .route("/api/missions/{id}/state", get(get_state))
        .route("/api/missions/{id}/transcript", get(transcript))
        .route("/api/missions/{id}/stream", get(stream));
    let ui_dir = state.config.ui_dir.clone();
    let api = api.with_state(state);
    match ui_dir {
        Some(dir) => api.fallback_service(ServeDir::new(dir)),
        None => api.route("/", get(|| async { Html(PLACEHOLDER_UI) })),
    }
}

pub fn app(config: ServiceConfig) -> Router {
    router(Arc::new(AppState::new(config)))
}

/// Serves until `shutdown` resolves. Open streams are ended first so the
/// graceful shutdown does not wait on them forever.
pub async fn serve(
    listener: tokio::net::TcpListener,
    config: ServiceConfig,
    shutdown: impl std::future::Future<Output = ()> + Send + 'static,
) -> std::io::Result<()> {
    let state = Arc::new(AppState::new(config));
    let closing = state.closing.clone();
    axum::serve(listener, router(state))
        .with_graceful_shutdown(async move {
            shutdown.await;
            let _ = closing.send(true);
        })
        .await
}
