//! Session API behind the interactive editor.
//!
//! | route | |
//! |---|---|
//! | `POST /sessions` | `{skeleton, format?, config?}` → 201 `{sessionId}` |
//! | `GET /sessions/{id}` | status |
//! | `DELETE /sessions/{id}` | drop the session |
//! | `GET /sessions/{id}/embedding` | committed solution, 202 while the first solve runs |
//! | `GET /sessions/{id}/skeleton` | nodes, segments and color groups |
//! | `GET /sessions/{id}/report` | losses of the committed solution |
//! | `GET /sessions/{id}/edits` | edit log |
//! | `POST /sessions/{id}/edits` | `{segmentId, anchorNodeId, rotationRadians}` → 202 `{jobId}` |
//! | `POST /sessions/{id}/weights` | energy weights → 202 `{jobId}` |
//! | `GET /sessions/{id}/progress` | WebSocket of `{c, energy}` frames, then `{done, jobId, ...}` |
//!
//! Mutations answer 409 while a solve is running.

pub mod session;

use std::collections::HashMap;
use std::net::SocketAddr;
use std::sync::Arc;

use axum::extract::ws::rejection::WebSocketUpgradeRejection;
use axum::extract::ws::{Message, WebSocket, WebSocketUpgrade};
use axum::extract::{Path, State};
use axum::http::{header, HeaderValue, StatusCode};
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use parking_lot::RwLock;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};
use tokio::sync::broadcast::error::RecvError;
use tower_http::cors::{Any, CorsLayer};

use treeplan::embedding::EnergyWeights;
use treeplan::evaluation::report;
use treeplan::skeleton::{parse_json, parse_swc, Loc, NodeId};

pub use session::{Edit, Event, JobDone, LogEntry, ProgressFrame, Session, SessionConfig, SolveState, Status};

/// Response header carrying the snapshot version of an embedding.
pub const VERSION_HEADER: &str = "x-solution-version";

#[derive(Clone, Debug, Default)]
pub struct ServiceOptions {
    /// Base settings; a request's `config` overrides fields of these.
    pub defaults: SessionConfig,
    /// Allowed CORS origin. `None` allows any.
    pub allow_origin: Option<String>,
}

#[derive(Clone)]
struct AppState {
    sessions: Arc<RwLock<HashMap<String, Arc<Session>>>>,
    defaults: Arc<SessionConfig>,
}

impl AppState {
    fn get(&self, id: &str) -> Result<Arc<Session>, Response> {
        self.sessions.read().get(id).cloned().ok_or_else(|| error(StatusCode::NOT_FOUND, "unknown session"))
    }
}

#[derive(Clone, Copy, Debug, Default, Deserialize)]
#[serde(rename_all = "lowercase")]
enum Format {
    #[default]
    Swc,
    Json,
}

#[derive(Debug, Deserialize)]
struct CreateSession {
    skeleton: String,
    #[serde(default)]
    format: Format,
    #[serde(default)]
    config: Option<Value>,
}

fn error(status: StatusCode, msg: impl std::fmt::Display) -> Response {
    (status, Json(json!({ "error": msg.to_string() }))).into_response()
}

/// Overlays `patch` onto `base`, recursing into objects.
fn merge(base: &mut Value, patch: Value) {
    match (base, patch) {
        (Value::Object(b), Value::Object(p)) => {
            for (k, v) in p {
                merge(b.entry(k).or_insert(Value::Null), v);
            }
        }
        (b, p) => *b = p,
    }
}

pub fn router(opts: ServiceOptions) -> Router {
    let cors = CorsLayer::new().allow_methods(Any).allow_headers(Any).expose_headers([header::HeaderName::from_static(VERSION_HEADER)]);
    let cors = match opts.allow_origin.as_deref().map(HeaderValue::from_str) {
        Some(Ok(origin)) => cors.allow_origin(origin),
        _ => cors.allow_origin(Any),
    };
    let state = AppState { sessions: Arc::default(), defaults: Arc::new(opts.defaults) };
    Router::new()
        .route("/sessions", post(create_session))
        .route("/sessions/{id}", get(status).delete(delete_session))
        .route("/sessions/{id}/embedding", get(embedding))
        .route("/sessions/{id}/skeleton", get(skeleton))
        .route("/sessions/{id}/report", get(loss_report))
        .route("/sessions/{id}/edits", get(edit_log).post(post_edit))
        .route("/sessions/{id}/weights", post(post_weights))
        .route("/sessions/{id}/progress", get(progress))
        .layer(cors)
        .with_state(state)
}

pub async fn serve(addr: SocketAddr, opts: ServiceOptions) -> std::io::Result<()> {
    let listener = tokio::net::TcpListener::bind(addr).await?;
    axum::serve(listener, router(opts)).await
}

async fn create_session(State(st): State<AppState>, Json(body): Json<CreateSession>) -> Response {
    let parsed = match body.format {
        Format::Swc => parse_swc::<f64>(&body.skeleton),
        Format::Json => parse_json::<f64>(&body.skeleton),
    };
    let tree = match parsed {
        Ok(t) => t,
        Err(e) => {
            let line = match e.loc() {
                Some(Loc::Line(l)) => Some(l),
                _ => None,
            };
            return (StatusCode::BAD_REQUEST, Json(json!({ "error": e.to_string(), "line": line }))).into_response();
        }
    };
    let mut cfg = serde_json::to_value(&*st.defaults).expect("config serializes");
    if let Some(patch) = body.config {
        merge(&mut cfg, patch);
    }
    let config: SessionConfig = match serde_json::from_value(cfg) {
        Ok(c) => c,
        Err(e) => return error(StatusCode::BAD_REQUEST, format!("invalid config: {e}")),
    };
    if let Err(e) = config.weights.validate() {
        return error(StatusCode::BAD_REQUEST, e);
    }
    if config.swarm.particles == 0 || config.edit_particles == 0 {
        return error(StatusCode::BAD_REQUEST, "particle counts must be positive");
    }
    let id = uuid::Uuid::new_v4().simple().to_string();
    let session = Session::start(id.clone(), tree, config);
    st.sessions.write().insert(id.clone(), session);
    (StatusCode::CREATED, Json(json!({ "sessionId": id }))).into_response()
}

async fn status(State(st): State<AppState>, Path(id): Path<String>) -> Response {
    match st.get(&id) {
        Ok(s) => Json(s.status()).into_response(),
        Err(r) => r,
    }
}

async fn delete_session(State(st): State<AppState>, Path(id): Path<String>) -> Response {
    match st.sessions.write().remove(&id) {
        Some(_) => StatusCode::NO_CONTENT.into_response(),
        None => error(StatusCode::NOT_FOUND, "unknown session"),
    }
}

/// 202 with the status while nothing is committed; 422 if the first solve
/// failed.
fn pending(s: &Session) -> Response {
    let st = s.status();
    let code = if st.state == SolveState::Failed { StatusCode::UNPROCESSABLE_ENTITY } else { StatusCode::ACCEPTED };
    (code, Json(st)).into_response()
}

async fn embedding(State(st): State<AppState>, Path(id): Path<String>) -> Response {
    let s = match st.get(&id) {
        Ok(s) => s,
        Err(r) => return r,
    };
    let Some(snap) = s.snapshot() else { return pending(&s) };
    let body = serde_json::to_string(&snap.solution).expect("solution serializes");
    (
        [(header::CONTENT_TYPE, "application/json".to_string()), (header::HeaderName::from_static(VERSION_HEADER), snap.version.to_string())],
        body,
    )
        .into_response()
}

#[derive(Serialize)]
#[serde(rename_all = "camelCase")]
struct NodeView {
    id: NodeId,
    parent: Option<NodeId>,
    position: [f64; 3],
    radius: f64,
    group: Option<usize>,
}

#[derive(Serialize)]
#[serde(rename_all = "camelCase")]
struct SegmentView {
    index: usize,
    node_ids: Vec<NodeId>,
    attach_node_id: Option<NodeId>,
    group: Option<usize>,
}

async fn skeleton(State(st): State<AppState>, Path(id): Path<String>) -> Response {
    let s = match st.get(&id) {
        Ok(s) => s,
        Err(r) => return r,
    };
    let Some(p) = s.prepared() else { return pending(&s) };
    let tree = p.tree();
    let groups = p.hierarchy.level_one_groups(tree);
    let nodes: Vec<NodeView> = (0..tree.len())
        .map(|i| {
            let n = tree.node(i);
            NodeView {
                id: n.id,
                parent: n.parent,
                position: [n.position.x, n.position.y, n.position.z],
                radius: n.radius,
                group: groups[i],
            }
        })
        .collect();
    let segments: Vec<SegmentView> = p
        .segments
        .iter()
        .map(|seg| SegmentView {
            index: seg.index,
            node_ids: seg.node_ids.clone(),
            attach_node_id: tree.parent(seg.first()).map(|a| tree.id(a)),
            group: groups[seg.first()],
        })
        .collect();
    Json(json!({ "nodes": nodes, "segments": segments })).into_response()
}

async fn loss_report(State(st): State<AppState>, Path(id): Path<String>) -> Response {
    let s = match st.get(&id) {
        Ok(s) => s,
        Err(r) => return r,
    };
    let (Some(p), Some(snap)) = (s.prepared(), s.snapshot()) else { return pending(&s) };
    match report(p.tree(), &p.segments, &snap.solution, &p.targets) {
        Some(r) => Json(r).into_response(),
        None => error(StatusCode::INTERNAL_SERVER_ERROR, "solution does not cover the tree"),
    }
}

async fn edit_log(State(st): State<AppState>, Path(id): Path<String>) -> Response {
    match st.get(&id) {
        Ok(s) => Json(s.log()).into_response(),
        Err(r) => r,
    }
}

fn accepted(r: Result<u64, session::SubmitError>) -> Response {
    use session::SubmitError::*;
    match r {
        Ok(job) => (StatusCode::ACCEPTED, Json(json!({ "jobId": job }))).into_response(),
        Err(Busy) => error(StatusCode::CONFLICT, "a solve is running"),
        Err(NoSolution) => error(StatusCode::CONFLICT, "no committed solution to edit"),
        Err(Invalid(e)) => error(StatusCode::UNPROCESSABLE_ENTITY, e),
    }
}

async fn post_edit(State(st): State<AppState>, Path(id): Path<String>, Json(edit): Json<Edit>) -> Response {
    match st.get(&id) {
        Ok(s) => accepted(s.submit_edit(edit)),
        Err(r) => r,
    }
}

async fn post_weights(
    State(st): State<AppState>,
    Path(id): Path<String>,
    Json(weights): Json<EnergyWeights>,
) -> Response {
    match st.get(&id) {
        Ok(s) => accepted(s.submit_weights(weights)),
        Err(r) => r,
    }
}

async fn progress(
    State(st): State<AppState>,
    Path(id): Path<String>,
    ws: Result<WebSocketUpgrade, WebSocketUpgradeRejection>,
) -> Response {
    let s = match st.get(&id) {
        Ok(s) => s,
        Err(r) => return r,
    };
    match ws {
        Ok(ws) => ws.on_upgrade(move |socket| stream_progress(socket, s)),
        Err(rej) => rej.into_response(),
    }
}

async fn send(socket: &mut WebSocket, ev: &Event) -> bool {
    let text = serde_json::to_string(ev).expect("event serializes");
    socket.send(Message::Text(text.into())).await.is_ok()
}

async fn stream_progress(mut socket: WebSocket, s: Arc<Session>) {
    let (backlog, mut rx) = s.subscribe();
    drop(s);
    for ev in &backlog {
        if !send(&mut socket, ev).await {
            return;
        }
    }
    loop {
        tokio::select! {
            ev = rx.recv() => match ev {
                Ok(ev) => {
                    if !send(&mut socket, &ev).await {
                        return;
                    }
                }
                Err(RecvError::Lagged(_)) => continue,
                Err(RecvError::Closed) => return,
            },
            msg = socket.recv() => match msg {
                None | Some(Err(_)) | Some(Ok(Message::Close(_))) => return,
                Some(Ok(_)) => {}
            },
        }
    }
}
