//! Local HTTP service for interactive editing: one project per session,
//! annotation edits, per-part rebuilds and mesh read-back.
//!
//! Writes may carry an `x-expected-revision` header; a write made against
//! an older revision is rejected with 409.

pub mod error;
pub mod session;

use axum::extract::rejection::JsonRejection;
use axum::extract::{FromRequest, Path, Request, State};
use axum::http::{header, HeaderMap, StatusCode};
use axum::response::IntoResponse;
use axum::routing::{delete, get, post, put};
use axum::{Json, Router};
use error::ServiceError;
use orthomodel_core::annotations::{PartId, StrokeId};
use orthomodel_core::pipeline::{build_part, PipelineConfig};
use orthomodel_core::View;
use serde::de::DeserializeOwned;
use serde::Deserialize;
use serde_json::{json, Value};
use session::{BuiltPart, ImageUpload, MeshPayload, NewStroke, Session};
use std::collections::HashMap;
use std::sync::{Arc, Mutex};

pub const EXPECTED_REVISION: &str = "x-expected-revision";

#[derive(Debug, Default)]
struct Registry {
    next: u64,
    sessions: HashMap<u64, Arc<Mutex<Session>>>,
}

#[derive(Debug, Clone, Default)]
pub struct AppState {
    registry: Arc<Mutex<Registry>>,
}

type Shared = Arc<Mutex<Session>>;
type Reply = Result<Json<Value>, ServiceError>;

impl AppState {
    fn session(&self, id: u64) -> Result<Shared, ServiceError> {
        self.registry
            .lock()
            .expect("registry lock")
            .sessions
            .get(&id)
            .cloned()
            .ok_or(ServiceError::UnknownSession(id))
    }
}

/// JSON body whose rejections come back as 400 with the service's error
/// shape.
pub struct Body<T>(pub T);

impl<S, T> FromRequest<S> for Body<T>
where
    T: DeserializeOwned,
    S: Send + Sync,
{
    type Rejection = ServiceError;

    async fn from_request(req: Request, state: &S) -> Result<Self, Self::Rejection> {
        let Json(v) = Json::<T>::from_request(req, state)
            .await
            .map_err(|e: JsonRejection| ServiceError::Invalid(e.body_text()))?;
        Ok(Body(v))
    }
}

fn expected(headers: &HeaderMap) -> Result<Option<u64>, ServiceError> {
    headers
        .get(EXPECTED_REVISION)
        .map(|v| {
            v.to_str()
                .ok()
                .and_then(|s| s.trim().parse().ok())
                .ok_or_else(|| ServiceError::Invalid(format!("bad {EXPECTED_REVISION} header")))
        })
        .transpose()
}

/// Run a write against a session after the revision check.
fn write<T>(
    state: &AppState,
    id: u64,
    headers: &HeaderMap,
    f: impl FnOnce(&mut Session) -> Result<T, ServiceError>,
) -> Result<T, ServiceError> {
    let expected = expected(headers)?;
    let shared = state.session(id)?;
    let mut s = shared.lock().expect("session lock");
    s.expect_revision(expected)?;
    f(&mut s)
}

fn read<T>(state: &AppState, id: u64, f: impl FnOnce(&Session) -> T) -> Result<T, ServiceError> {
    let shared = state.session(id)?;
    let s = shared.lock().expect("session lock");
    Ok(f(&s))
}

pub fn router(state: AppState) -> Router {
    Router::new()
        .route("/v1/sessions", post(create_session))
        .route("/v1/sessions/{id}", get(session_info).delete(close_session))
        .route("/v1/sessions/{id}/images", put(upload_images))
        .route("/v1/sessions/{id}/parts", post(add_part))
        .route("/v1/sessions/{id}/parts/{part}/reconstruct", post(reconstruct_part))
        .route("/v1/sessions/{id}/reconstruct", post(reconstruct_all))
        .route("/v1/sessions/{id}/strokes", post(add_stroke))
        .route("/v1/sessions/{id}/strokes/{stroke}", delete(delete_stroke))
        .route("/v1/sessions/{id}/strokes/{stroke}/move", post(move_key_point))
        .route("/v1/sessions/{id}/strokes/{stroke}/relocate", post(relocate_stroke))
        .route("/v1/sessions/{id}/undo", post(undo))
        .route("/v1/sessions/{id}/lock", put(set_lock))
        .route("/v1/sessions/{id}/scene", get(scene))
        .route("/v1/sessions/{id}/scene.obj", get(scene_obj))
        .route("/v1/sessions/{id}/save", post(save))
        .route("/v1/sessions/{id}/load", post(load))
        .with_state(state)
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct CreateSession {
    #[serde(default)]
    config: PipelineConfig,
}

/// The body is optional; an empty one takes the default config.
async fn create_session(State(state): State<AppState>, body: axum::body::Bytes) -> Result<impl IntoResponse, ServiceError> {
    let req: CreateSession = if body.iter().all(u8::is_ascii_whitespace) {
        CreateSession::default()
    } else {
        serde_json::from_slice(&body).map_err(|e| ServiceError::Invalid(e.to_string()))?
    };
    let session = Session::new(req.config)?;
    let mut reg = state.registry.lock().expect("registry lock");
    reg.next += 1;
    let id = reg.next;
    reg.sessions.insert(id, Arc::new(Mutex::new(session)));
    Ok((StatusCode::CREATED, Json(json!({ "session": id, "revision": 0 }))))
}

async fn session_info(State(state): State<AppState>, Path(id): Path<u64>) -> Reply {
    read(&state, id, |s| {
        let parts: Vec<Value> = s
            .project()
            .parts()
            .iter()
            .map(|p| json!({ "id": p.id, "name": p.name, "strokes": p.strokes.len() }))
            .collect();
        Json(json!({
            "session": id,
            "revision": s.revision(),
            "locked": s.locked(),
            "images": s.project().images(),
            "parts": parts,
            "config": s.config(),
        }))
    })
}

async fn close_session(State(state): State<AppState>, Path(id): Path<u64>) -> Reply {
    let removed = state.registry.lock().expect("registry lock").sessions.remove(&id);
    removed.ok_or(ServiceError::UnknownSession(id))?;
    Ok(Json(json!({ "closed": id })))
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct Images {
    front: ImageUpload,
    side: ImageUpload,
}

async fn upload_images(State(state): State<AppState>, Path(id): Path<u64>, headers: HeaderMap, Body(req): Body<Images>) -> Reply {
    let revision = write(&state, id, &headers, |s| s.upload_images(&req.front, &req.side))?;
    Ok(Json(json!({ "revision": revision })))
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct NewPart {
    name: String,
}

async fn add_part(State(state): State<AppState>, Path(id): Path<u64>, headers: HeaderMap, Body(req): Body<NewPart>) -> Reply {
    let (revision, part) = write(&state, id, &headers, |s| s.add_part(&req.name))?;
    Ok(Json(json!({ "revision": revision, "part": part })))
}

async fn add_stroke(State(state): State<AppState>, Path(id): Path<u64>, headers: HeaderMap, Body(req): Body<NewStroke>) -> Reply {
    let (revision, stroke) = write(&state, id, &headers, |s| s.add_stroke(&req))?;
    Ok(Json(json!({ "revision": revision, "stroke": stroke })))
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct Move {
    view: View,
    index: usize,
    position: [f64; 2],
    /// Overrides the session's lock setting for this move.
    locked: Option<bool>,
}

async fn move_key_point(
    State(state): State<AppState>,
    Path((id, stroke)): Path<(u64, u64)>,
    headers: HeaderMap,
    Body(req): Body<Move>,
) -> Reply {
    let (revision, stroke) = write(&state, id, &headers, |s| s.move_key_point(StrokeId(stroke), req.view, req.index, req.position, req.locked))?;
    Ok(Json(json!({ "revision": revision, "stroke": stroke })))
}

async fn delete_stroke(State(state): State<AppState>, Path((id, stroke)): Path<(u64, u64)>, headers: HeaderMap) -> Reply {
    let (revision, stroke, attached) = write(&state, id, &headers, |s| s.delete_stroke(StrokeId(stroke)))?;
    Ok(Json(json!({ "revision": revision, "stroke": stroke, "removed_attached": attached })))
}

async fn relocate_stroke(State(state): State<AppState>, Path((id, stroke)): Path<(u64, u64)>, headers: HeaderMap) -> Reply {
    let (revision, stroke) = write(&state, id, &headers, |s| s.relocate_stroke(StrokeId(stroke)))?;
    Ok(Json(json!({ "revision": revision, "stroke": stroke })))
}

async fn undo(State(state): State<AppState>, Path(id): Path<u64>, headers: HeaderMap) -> Reply {
    let (undone, revision) = write(&state, id, &headers, |s| Ok(s.undo().map_or((false, s.revision()), |r| (true, r))))?;
    Ok(Json(json!({ "revision": revision, "undone": undone })))
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct Lock {
    locked: bool,
}

async fn set_lock(State(state): State<AppState>, Path(id): Path<u64>, headers: HeaderMap, Body(req): Body<Lock>) -> Reply {
    let revision = write(&state, id, &headers, |s| Ok(s.set_lock(req.locked)))?;
    Ok(Json(json!({ "revision": revision, "locked": req.locked })))
}

fn built_json(b: &BuiltPart) -> Value {
    json!({
        "part": b.mesh.part,
        "revision": b.revision,
        "mesh": MeshPayload::from(&b.mesh),
        "diagnostics": b.diagnostics,
    })
}

/// Build one part off the async runtime and store the result if the part
/// still exists.
async fn build(state: &AppState, id: u64, part: PartId) -> Result<BuiltPart, ServiceError> {
    let shared = state.session(id)?;
    let (p, drawings, config, revision) = {
        let s = shared.lock().expect("session lock");
        let (p, d) = s.build_inputs(part)?;
        (p, d, *s.config(), s.revision())
    };
    let result = tokio::task::spawn_blocking(move || build_part(&p, &drawings.edges, &config))
        .await
        .map_err(|e| ServiceError::Internal(format!("part build aborted: {e}")))?;
    let (mesh, diagnostics) = result.map_err(|e| ServiceError::Invalid(format!("{part} failed: {e}")))?;
    let built = BuiltPart { revision, mesh, diagnostics };
    let mut s = shared.lock().expect("session lock");
    if s.project().part(part).is_some() {
        s.store(built.clone());
    }
    Ok(built)
}

async fn reconstruct_part(State(state): State<AppState>, Path((id, part)): Path<(u64, u64)>) -> Reply {
    let built = build(&state, id, PartId(part)).await?;
    Ok(Json(built_json(&built)))
}

async fn reconstruct_all(State(state): State<AppState>, Path(id): Path<u64>) -> Reply {
    let parts: Vec<PartId> = read(&state, id, |s| s.project().parts().iter().map(|p| p.id).collect())?;
    let mut out = Vec::new();
    for p in parts {
        match build(&state, id, p).await {
            Ok(b) => out.push(json!({ "part": p, "status": "ok", "diagnostics": b.diagnostics })),
            Err(ServiceError::Invalid(msg)) => out.push(json!({ "part": p, "status": "failed", "error": msg })),
            Err(e) => return Err(e),
        }
    }
    let revision = read(&state, id, Session::revision)?;
    Ok(Json(json!({ "revision": revision, "parts": out })))
}

async fn scene(State(state): State<AppState>, Path(id): Path<u64>) -> Reply {
    read(&state, id, |s| {
        let parts: Vec<Value> = s.scene_parts().into_iter().map(built_json).collect();
        Json(json!({ "revision": s.revision(), "parts": parts }))
    })
}

async fn scene_obj(State(state): State<AppState>, Path(id): Path<u64>) -> Result<impl IntoResponse, ServiceError> {
    let text = read(&state, id, Session::scene_obj)?;
    Ok(([(header::CONTENT_TYPE, "text/plain; charset=utf-8")], text))
}

async fn save(State(state): State<AppState>, Path(id): Path<u64>) -> Reply {
    read(&state, id, |s| Json(json!({ "revision": s.revision(), "document": s.save() })))
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct Load {
    document: String,
    /// Directory the document's image paths are relative to.
    base_dir: Option<String>,
}

async fn load(State(state): State<AppState>, Path(id): Path<u64>, headers: HeaderMap, Body(req): Body<Load>) -> Reply {
    let revision = write(&state, id, &headers, |s| s.load(&req.document, req.base_dir.as_deref().map(std::path::Path::new)))?;
    Ok(Json(json!({ "revision": revision })))
}
