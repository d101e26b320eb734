//! HTTP and WebSocket front end of a guidance session.
//!
//! One session runs at a time. Frames are processed on a blocking worker
//! and fanned out through a bounded broadcast channel: a subscriber that
//! falls behind skips to the newest messages and is told how many it
//! missed, while ingestion never waits on it.

use std::collections::BTreeMap;
use std::fs::File;
use std::io::{BufReader, Cursor};
use std::path::PathBuf;
use std::sync::atomic::{AtomicBool, AtomicU64, Ordering};
use std::sync::{Arc, Mutex, MutexGuard};

use anyhow::Context;
use axum::body::Bytes;
use axum::extract::ws::{Message, Utf8Bytes, WebSocket, WebSocketUpgrade};
use axum::extract::State;
use axum::http::{header, StatusCode};
use axum::response::{Html, IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use corebody::evaluation::SessionReport;
use corebody::gateway::{connect_external, open_replay, Endpoint, EstimatedFrame, FrameRecord, GatewayError, LiveOptions};
use corebody::session::{
    paced, run_session, set_target, FrameOutput, SessionConfig, SessionDir, SessionError, SessionStore, Speed,
    TargetSource, TargetState, ViewpointSpec,
};
use corebody::BodyModelAssets;
use log::{info, warn};
use serde::{Deserialize, Serialize};
use serde_json::json;
use tokio::sync::broadcast;

use crate::wire::{encode_mesh, ServerMessage, TARGET_FRAME_ID};

/// Broadcast queue length per subscriber.
pub const BROADCAST_CAPACITY: usize = 16;

const INDEX_HTML: &str = include_str!("../ui/index.html");

/// One broadcast item: a JSON message and, for guidance frames, the
/// companion vertex payload.
#[derive(Debug)]
pub struct Outgoing {
    pub text: Utf8Bytes,
    pub binary: Option<Bytes>,
}

type FrameIter = Box<dyn Iterator<Item = Result<EstimatedFrame, GatewayError>> + Send>;

pub struct AppState {
    assets: Arc<BodyModelAssets>,
    store: SessionStore,
    inner: Mutex<Inner>,
    events: broadcast::Sender<Arc<Outgoing>>,
    stop: AtomicBool,
    frames_processed: AtomicU64,
}

#[derive(Default)]
struct Inner {
    config: SessionConfig,
    target: Option<Arc<TargetState>>,
    target_mesh: Option<Bytes>,
    active: Option<String>,
    last_session: Option<String>,
    last_report: Option<SessionReport>,
}

impl AppState {
    /// Sets up the service; a target named in `config` is meshed and bound now.
    pub fn new(assets: BodyModelAssets, config: SessionConfig, store: SessionStore) -> Result<Arc<Self>, SessionError> {
        config.validate()?;
        let (events, _) = broadcast::channel(BROADCAST_CAPACITY);
        let state = Arc::new(Self {
            assets: Arc::new(assets),
            store,
            inner: Mutex::new(Inner { config: config.clone(), ..Inner::default() }),
            events,
            stop: AtomicBool::new(false),
            frames_processed: AtomicU64::new(0),
        });
        if let Some(src) = &config.target {
            let frame = src.resolve()?;
            let target = set_target(&state.assets, &config, &frame)?;
            state.install_target(&mut state.lock(), target);
        }
        Ok(state)
    }

    pub fn assets(&self) -> &BodyModelAssets {
        &self.assets
    }

    fn lock(&self) -> MutexGuard<'_, Inner> {
        self.inner.lock().unwrap_or_else(|e| e.into_inner())
    }

    fn publish(&self, text: ServerMessage, binary: Option<Vec<u8>>) {
        let item = Outgoing { text: text.to_json().into(), binary: binary.map(Bytes::from) };
        // No subscribers is fine.
        let _ = self.events.send(Arc::new(item));
    }

    fn install_target(&self, inner: &mut Inner, target: TargetState) {
        inner.target_mesh = Some(Bytes::from(encode_mesh(TARGET_FRAME_ID, &target.mesh)));
        inner.target = Some(Arc::new(target));
        self.publish(ServerMessage::Target { vertex_count: self.assets.vertex_count() }, None);
    }

    fn publish_frame(&self, out: &FrameOutput) {
        let msg = ServerMessage::Guidance {
            frame_id: out.frame_id,
            t: out.input.timestamp,
            rmse: out.guidance.rmse,
            markers: out.guidance.markers.clone(),
            skeleton: out.skeleton.clone(),
        };
        self.publish(msg, Some(encode_mesh(out.frame_id, &out.guidance.current)));
    }
}

pub fn router(state: Arc<AppState>) -> Router {
    Router::new()
        .route("/", get(index))
        .route("/api/config", get(get_config).put(put_config))
        .route("/api/config/viewpoints", get(get_viewpoints).put(put_viewpoints))
        .route("/api/target", post(post_target))
        .route("/api/target/mesh", get(get_target_mesh))
        .route("/api/topology", get(get_topology))
        .route("/api/report", get(get_report))
        .route("/api/session", get(get_session))
        .route("/api/session/start", post(start_session))
        .route("/api/session/stop", post(stop_session))
        .route("/ws", get(ws_handler))
        .with_state(state)
}

/// Binds `addr` and serves until Ctrl-C.
pub async fn serve(state: Arc<AppState>, addr: &str) -> anyhow::Result<()> {
    let listener = tokio::net::TcpListener::bind(addr).await.with_context(|| format!("binding {addr}"))?;
    info!("listening on http://{}", listener.local_addr()?);
    axum::serve(listener, router(state))
        .with_graceful_shutdown(async {
            let _ = tokio::signal::ctrl_c().await;
        })
        .await?;
    Ok(())
}

#[derive(Debug)]
pub struct ApiError(StatusCode, String);

impl ApiError {
    fn bad_request(msg: impl std::fmt::Display) -> Self {
        Self(StatusCode::BAD_REQUEST, msg.to_string())
    }

    fn conflict(msg: impl std::fmt::Display) -> Self {
        Self(StatusCode::CONFLICT, msg.to_string())
    }

    fn not_found(msg: impl std::fmt::Display) -> Self {
        Self(StatusCode::NOT_FOUND, msg.to_string())
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        (self.0, Json(json!({ "error": self.1 }))).into_response()
    }
}

type ApiResult<T> = Result<T, ApiError>;

async fn index() -> Html<&'static str> {
    Html(INDEX_HTML)
}

async fn get_config(State(state): State<Arc<AppState>>) -> Json<SessionConfig> {
    Json(state.lock().config.clone())
}

/// Replaces the configuration. The asset path is fixed at startup and is
/// kept as is.
async fn put_config(State(state): State<Arc<AppState>>, Json(mut config): Json<SessionConfig>) -> ApiResult<Json<SessionConfig>> {
    let mut inner = state.lock();
    if let Some(name) = &inner.active {
        return Err(ApiError::conflict(format!("{name} is running; only viewpoints can change")));
    }
    config.assets = inner.config.assets.clone();
    config.validate().map_err(ApiError::bad_request)?;

    let frame = if config.target != inner.config.target {
        config.target.as_ref().map(|src| src.resolve()).transpose().map_err(ApiError::bad_request)?
    } else {
        inner.target.as_ref().map(|t| t.frame.clone())
    };
    // Camera or window changes need a fresh binding.
    let target = frame.map(|f| set_target(&state.assets, &config, &f)).transpose().map_err(ApiError::bad_request)?;
    inner.config = config;
    if let Some(t) = target {
        state.install_target(&mut inner, t);
    }
    Ok(Json(inner.config.clone()))
}

async fn get_viewpoints(State(state): State<Arc<AppState>>) -> Json<[ViewpointSpec; 2]> {
    Json(state.lock().config.viewpoints)
}

/// Viewpoints are display-only and may change at any time.
async fn put_viewpoints(
    State(state): State<Arc<AppState>>,
    Json(viewpoints): Json<[ViewpointSpec; 2]>,
) -> ApiResult<Json<[ViewpointSpec; 2]>> {
    for v in &viewpoints {
        v.validate().map_err(ApiError::bad_request)?;
    }
    state.lock().config.viewpoints = viewpoints;
    Ok(Json(viewpoints))
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct TargetSummary {
    pub vertex_count: usize,
    /// Bound vertices per marker site.
    pub bindings: BTreeMap<String, usize>,
}

async fn post_target(State(state): State<Arc<AppState>>, Json(record): Json<FrameRecord>) -> ApiResult<Json<TargetSummary>> {
    let mut inner = state.lock();
    if let Some(name) = &inner.active {
        return Err(ApiError::conflict(format!("{name} is running")));
    }
    let frame = record.validate().map_err(|e| ApiError::bad_request(format!("invalid frame: {e:?}")))?;
    let target = set_target(&state.assets, &inner.config, &frame).map_err(ApiError::bad_request)?;
    let summary = TargetSummary {
        vertex_count: target.mesh.vertices.len(),
        bindings: target.bindings.iter().map(|(site, b)| (site.name().to_string(), b.vertex_indices.len())).collect(),
    };
    inner.config.target = Some(TargetSource::Frame(record));
    state.install_target(&mut inner, target);
    Ok(Json(summary))
}

async fn get_target_mesh(State(state): State<Arc<AppState>>) -> ApiResult<Response> {
    let bytes = state.lock().target_mesh.clone().ok_or_else(|| ApiError::not_found("no target set"))?;
    Ok(([(header::CONTENT_TYPE, "application/octet-stream")], bytes).into_response())
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct Topology {
    pub vertex_count: usize,
    pub faces: Vec<[u32; 3]>,
}

async fn get_topology(State(state): State<Arc<AppState>>) -> Json<Topology> {
    Json(Topology { vertex_count: state.assets.vertex_count(), faces: state.assets.faces().to_vec() })
}

async fn get_report(State(state): State<Arc<AppState>>) -> ApiResult<Json<SessionReport>> {
    state.lock().last_report.clone().map(Json).ok_or_else(|| ApiError::not_found("no finished session"))
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct SessionStatus {
    pub active: Option<String>,
    pub last_session: Option<String>,
    pub frames_processed: u64,
}

async fn get_session(State(state): State<Arc<AppState>>) -> Json<SessionStatus> {
    let inner = state.lock();
    Json(SessionStatus {
        active: inner.active.clone(),
        last_session: inner.last_session.clone(),
        frames_processed: state.frames_processed.load(Ordering::Relaxed),
    })
}

/// Where a session's frames come from.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub enum FrameSource {
    /// A `.poselog` on the server's filesystem.
    Replay(PathBuf),
    /// `host:port` of an estimator writing protocol lines.
    Tcp(String),
    /// Command line of an estimator process writing protocol lines to stdout.
    Command(String),
    /// Frames included in the request.
    Frames(Vec<FrameRecord>),
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct StartRequest {
    pub source: FrameSource,
    #[serde(default)]
    pub speed: Speed,
}

fn open_source(source: FrameSource) -> Result<FrameIter, ApiError> {
    Ok(match source {
        FrameSource::Replay(path) => {
            let file = File::open(&path).map_err(|e| ApiError::bad_request(format!("{}: {e}", path.display())))?;
            Box::new(open_replay(BufReader::new(file)))
        }
        FrameSource::Tcp(addr) => Box::new(
            connect_external(&Endpoint::Tcp(addr), LiveOptions::default())
                .map_err(|e| ApiError(StatusCode::BAD_GATEWAY, e.to_string()))?,
        ),
        FrameSource::Command(cmd) => {
            let endpoint: Endpoint = format!("exec:{cmd}").parse().map_err(ApiError::bad_request)?;
            Box::new(
                connect_external(&endpoint, LiveOptions::default())
                    .map_err(|e| ApiError(StatusCode::BAD_GATEWAY, e.to_string()))?,
            )
        }
        FrameSource::Frames(records) => {
            // Go through the line decoder so inline frames get the same checks.
            let mut text = String::new();
            for r in &records {
                text.push_str(&serde_json::to_string(r).map_err(ApiError::bad_request)?);
                text.push('\n');
            }
            Box::new(open_replay(Cursor::new(text.into_bytes())))
        }
    })
}

#[derive(Debug, Serialize, Deserialize)]
pub struct StartResponse {
    pub session: String,
}

async fn start_session(
    State(state): State<Arc<AppState>>,
    Json(req): Json<StartRequest>,
) -> ApiResult<(StatusCode, Json<StartResponse>)> {
    let (config, target, dir) = {
        let mut inner = state.lock();
        if let Some(name) = &inner.active {
            return Err(ApiError::conflict(format!("{name} is already running")));
        }
        let target = inner.target.clone().ok_or_else(|| ApiError::conflict("no target set"))?;
        let dir = state.store.create_session().map_err(|e| ApiError(StatusCode::INTERNAL_SERVER_ERROR, e.to_string()))?;
        let name = session_name(&dir);
        inner.active = Some(name);
        (inner.config.clone(), target, dir)
    };
    let name = session_name(&dir);

    let opened = {
        let source = req.source.clone();
        tokio::task::spawn_blocking(move || open_source(source))
            .await
            .map_err(|e| ApiError(StatusCode::INTERNAL_SERVER_ERROR, e.to_string()))?
    };
    let frames = match opened {
        Ok(f) => f,
        Err(e) => {
            state.lock().active = None;
            let _ = std::fs::remove_dir_all(dir.path());
            return Err(e);
        }
    };

    state.stop.store(false, Ordering::SeqCst);
    state.frames_processed.store(0, Ordering::SeqCst);
    state.publish(ServerMessage::Session { session: name.clone() }, None);
    let worker = Arc::clone(&state);
    let worker_name = name.clone();
    tokio::task::spawn_blocking(move || run_worker(worker, worker_name, dir, config, target, frames, req.speed));
    Ok((StatusCode::ACCEPTED, Json(StartResponse { session: name })))
}

async fn stop_session(State(state): State<Arc<AppState>>) -> ApiResult<StatusCode> {
    if state.lock().active.is_none() {
        return Err(ApiError::conflict("no session is running"));
    }
    state.stop.store(true, Ordering::SeqCst);
    Ok(StatusCode::ACCEPTED)
}

fn session_name(dir: &SessionDir) -> String {
    dir.path().file_name().map(|n| n.to_string_lossy().into_owned()).unwrap_or_default()
}

fn run_worker(
    state: Arc<AppState>,
    name: String,
    dir: SessionDir,
    config: SessionConfig,
    target: Arc<TargetState>,
    frames: FrameIter,
    speed: Speed,
) {
    let result = (|| -> Result<SessionReport, SessionError> {
        dir.write_config(&config)?;
        dir.write_target(&target.frame)?;
        let mut log = dir.open_log()?;
        let stop = &state.stop;
        let frames = paced(frames.take_while(|_| !stop.load(Ordering::SeqCst)), speed);
        let outcome = run_session(Arc::clone(&state.assets), &config, target, frames, |out| {
            if let Err(e) = log.append(&out.log_record()) {
                warn!("{name}: session log write failed: {e}");
            }
            state.frames_processed.fetch_add(1, Ordering::Relaxed);
            state.publish_frame(out);
        })?;
        dir.write_report(&outcome.report)?;
        Ok(outcome.report)
    })();

    let mut inner = state.lock();
    inner.active = None;
    inner.last_session = Some(name.clone());
    match result {
        Ok(report) => {
            info!("{name} finished: R = {:.2}, t_min = {}", report.accuracy_r, report.t_min);
            inner.last_report = Some(report.clone());
            state.publish(ServerMessage::Metrics { session: name, report }, None);
        }
        Err(e) => {
            warn!("{name} failed: {e}");
            state.publish(ServerMessage::SessionError { session: name, message: e.to_string() }, None);
        }
    }
}

async fn ws_handler(State(state): State<Arc<AppState>>, ws: WebSocketUpgrade) -> Response {
    // Subscribe before the upgrade so nothing sent after the handshake is missed.
    let rx = state.events.subscribe();
    ws.on_upgrade(move |socket| pump(socket, rx))
}

async fn pump(mut socket: WebSocket, mut rx: broadcast::Receiver<Arc<Outgoing>>) {
    loop {
        tokio::select! {
            event = rx.recv() => match event {
                Ok(item) => {
                    if socket.send(Message::Text(item.text.clone())).await.is_err() {
                        break;
                    }
                    if let Some(bin) = &item.binary {
                        if socket.send(Message::Binary(bin.clone())).await.is_err() {
                            break;
                        }
                    }
                }
                Err(broadcast::error::RecvError::Lagged(count)) => {
                    let text = ServerMessage::Dropped { count }.to_json();
                    if socket.send(Message::Text(text.into())).await.is_err() {
                        break;
                    }
                }
                Err(broadcast::error::RecvError::Closed) => break,
            },
            incoming = socket.recv() => match incoming {
                None | Some(Err(_)) | Some(Ok(Message::Close(_))) => break,
                Some(Ok(_)) => {}
            },
        }
    }
}
