//! HTTP/JSON session service.
//!
//! Models are immutable once stored; each session is guarded by its own lock so
//! steps on one session are serialized while sessions proceed independently.

mod session;
mod store;

use std::collections::HashMap;
use std::net::{Ipv4Addr, SocketAddr};
use std::path::PathBuf;
use std::sync::{Arc, Mutex, RwLock};
use std::time::{SystemTime, UNIX_EPOCH};

use axum::extract::{Path, Query, State};
use axum::http::StatusCode;
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use idvoi::{InfluenceDiagram, ModelDocument, ModelError};
use serde::Deserialize;
use serde_json::{json, Value};

pub use session::{
    Assignment, Candidate, PendingDecision, Recommendation, Session, SessionView, Step, StepError,
};
pub use store::{LogLine, Store};

pub struct StoredModel {
    pub document: ModelDocument,
    pub diagram: InfluenceDiagram,
}

struct SessionEntry {
    session: Session,
    /// Serialized VOI reports keyed by `decision|candidates`; cleared on every step.
    voi_cache: HashMap<String, String>,
}

pub struct AppState {
    models: RwLock<HashMap<String, Arc<StoredModel>>>,
    sessions: RwLock<HashMap<String, Arc<Mutex<SessionEntry>>>>,
    store: Option<Store>,
}

impl AppState {
    /// In-memory state; with `log_dir`, stored models and sessions are replayed.
    pub fn new(log_dir: Option<PathBuf>) -> anyhow::Result<Self> {
        let store = log_dir.as_deref().map(Store::open).transpose()?;
        let state = AppState {
            models: RwLock::new(HashMap::new()),
            sessions: RwLock::new(HashMap::new()),
            store,
        };
        if let Some(store) = &state.store {
            for (id, document) in store.models()? {
                let diagram = InfluenceDiagram::from_document(&document)?;
                state.insert_model(id, document, diagram);
            }
            for stored in store.sessions()? {
                let model = state
                    .model(&stored.model_id)
                    .ok_or_else(|| anyhow::anyhow!("session {} has no model", stored.id))?;
                let mut session = Session::new(stored.id, stored.model_id, stored.created);
                for step in &stored.steps {
                    session.apply(&model.diagram, step)?;
                }
                state.insert_session(session);
            }
        }
        Ok(state)
    }

    fn insert_model(&self, id: String, document: ModelDocument, diagram: InfluenceDiagram) {
        let stored = Arc::new(StoredModel { document, diagram });
        self.models.write().expect("model lock").insert(id, stored);
    }

    fn insert_session(&self, session: Session) {
        let entry = SessionEntry {
            session,
            voi_cache: HashMap::new(),
        };
        self.sessions
            .write()
            .expect("session lock")
            .insert(entry.session.id.clone(), Arc::new(Mutex::new(entry)));
    }

    pub fn model(&self, id: &str) -> Option<Arc<StoredModel>> {
        self.models.read().expect("model lock").get(id).cloned()
    }

    fn session(&self, id: &str) -> Option<Arc<Mutex<SessionEntry>>> {
        self.sessions.read().expect("session lock").get(id).cloned()
    }

    fn persist(&self, session: &str, line: &LogLine) -> Result<(), ApiError> {
        if let Some(store) = &self.store {
            store
                .append(session, line)
                .map_err(|e| ApiError::internal(format!("cannot persist session: {e}")))?;
        }
        Ok(())
    }
}

#[derive(Debug)]
pub struct ApiError {
    status: StatusCode,
    body: Value,
}

impl ApiError {
    fn new(status: StatusCode, message: impl Into<String>) -> Self {
        ApiError {
            status,
            body: json!({ "error": message.into() }),
        }
    }

    fn not_found(what: &str, id: &str) -> Self {
        Self::new(StatusCode::NOT_FOUND, format!("unknown {what} `{id}`"))
    }

    fn bad_request(message: impl Into<String>) -> Self {
        Self::new(StatusCode::BAD_REQUEST, message)
    }

    fn internal(message: impl Into<String>) -> Self {
        Self::new(StatusCode::INTERNAL_SERVER_ERROR, message)
    }
}

impl From<StepError> for ApiError {
    fn from(e: StepError) -> Self {
        match e {
            StepError::BadRequest(m) => ApiError::bad_request(m),
            StepError::Conflict(m) => ApiError::new(StatusCode::CONFLICT, m),
        }
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        (self.status, Json(self.body)).into_response()
    }
}

type ApiResult = Result<Response, ApiError>;

fn now() -> u64 {
    SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map_or(0, |d| d.as_secs())
}

fn json_body(status: StatusCode, text: String) -> Response {
    (status, [("content-type", "application/json")], text).into_response()
}

pub fn router(state: Arc<AppState>) -> Router {
    Router::new()
        .route("/models", post(create_model))
        .route("/models/{id}", get(get_model))
        .route("/sessions", post(create_session))
        .route("/sessions/{id}", get(get_session))
        .route("/sessions/{id}/steps", post(session_step))
        .route("/sessions/{id}/voi", get(get_voi))
        .route("/sessions/{id}/recommendation", get(get_recommendation))
        .with_state(state)
}

async fn create_model(State(state): State<Arc<AppState>>, body: String) -> ApiResult {
    let document: ModelDocument = serde_json::from_str(&body).map_err(|e| ApiError {
        status: StatusCode::BAD_REQUEST,
        body: json!({
            "error": format!("syntax error at line {}, column {}: {e}", e.line(), e.column()),
            "violations": [],
        }),
    })?;
    let diagram = match InfluenceDiagram::from_document(&document) {
        Ok(d) => d,
        Err(ModelError::Invalid(violations)) => {
            return Err(ApiError {
                status: StatusCode::BAD_REQUEST,
                body: json!({ "error": "invalid model", "violations": violations }),
            })
        }
        Err(e) => return Err(ApiError::bad_request(e.to_string())),
    };
    let id = uuid::Uuid::new_v4().to_string();
    if let Some(store) = &state.store {
        store
            .save_model(&id, &document)
            .map_err(|e| ApiError::internal(format!("cannot persist model: {e}")))?;
    }
    state.insert_model(id.clone(), document, diagram);
    Ok((StatusCode::CREATED, Json(json!({ "id": id }))).into_response())
}

async fn get_model(State(state): State<Arc<AppState>>, Path(id): Path<String>) -> ApiResult {
    let model = state.model(&id).ok_or_else(|| ApiError::not_found("model", &id))?;
    Ok(Json(json!({ "id": id, "document": model.document })).into_response())
}

#[derive(Deserialize)]
struct NewSession {
    model_id: String,
}

async fn create_session(State(state): State<Arc<AppState>>, body: String) -> ApiResult {
    let request: NewSession = serde_json::from_str(&body)
        .map_err(|e| ApiError::bad_request(format!("expected {{\"model_id\": ...}}: {e}")))?;
    let model = state
        .model(&request.model_id)
        .ok_or_else(|| ApiError::not_found("model", &request.model_id))?;
    let session = Session::new(uuid::Uuid::new_v4().to_string(), request.model_id, now());
    state.persist(
        &session.id,
        &LogLine::Created {
            model_id: session.model_id.clone(),
            created: session.created,
        },
    )?;
    let view = session.view(&model.diagram);
    state.insert_session(session);
    Ok((StatusCode::CREATED, Json(view)).into_response())
}

/// Runs `f` on a session and its model while holding the session lock.
fn with_session<T>(
    state: &AppState,
    id: &str,
    f: impl FnOnce(&mut SessionEntry, &StoredModel) -> Result<T, ApiError>,
) -> Result<T, ApiError> {
    let entry = state.session(id).ok_or_else(|| ApiError::not_found("session", id))?;
    let mut entry = entry.lock().expect("session lock");
    let model = state
        .model(&entry.session.model_id)
        .ok_or_else(|| ApiError::internal("session refers to a missing model"))?;
    f(&mut entry, &model)
}

async fn get_session(State(state): State<Arc<AppState>>, Path(id): Path<String>) -> ApiResult {
    let view = with_session(&state, &id, |entry, model| {
        Ok(entry.session.view(&model.diagram))
    })?;
    Ok(Json(view).into_response())
}

async fn session_step(
    State(state): State<Arc<AppState>>,
    Path(id): Path<String>,
    body: String,
) -> ApiResult {
    let step: Step = serde_json::from_str(&body).map_err(|e| {
        ApiError::bad_request(format!(
            "expected {{\"observe\": {{variable, state}}}} or {{\"decide\": {{decision, action}}}}: {e}"
        ))
    })?;
    let view = with_session(&state, &id, |entry, model| {
        let mut next = entry.session.clone();
        next.apply(&model.diagram, &step)?;
        state.persist(&id, &LogLine::Step(step.clone()))?;
        entry.session = next;
        entry.voi_cache.clear();
        Ok(entry.session.view(&model.diagram))
    })?;
    Ok(Json(view).into_response())
}

#[derive(Deserialize)]
struct VoiParams {
    decision: Option<String>,
    candidates: Option<String>,
}

async fn get_voi(
    State(state): State<Arc<AppState>>,
    Path(id): Path<String>,
    Query(params): Query<VoiParams>,
) -> ApiResult {
    let body = with_session(&state, &id, |entry, model| {
        let id = &model.diagram;
        let decision = match params.decision {
            Some(d) => d,
            None => entry
                .session
                .pending(id)
                .map(|d| id.name(d).to_string())
                .ok_or_else(|| ApiError::from(StepError::Conflict("no decision is pending".into())))?,
        };
        let candidates: Option<Vec<String>> = params.candidates.as_ref().map(|c| {
            c.split(',')
                .map(str::trim)
                .filter(|s| !s.is_empty())
                .map(String::from)
                .collect()
        });
        let key = format!("{decision}|{}", candidates.as_ref().map_or("*".into(), |c| c.join(",")));
        if let Some(hit) = entry.voi_cache.get(&key) {
            return Ok(hit.clone());
        }
        let report = entry.session.voi(id, &decision, candidates.as_deref())?;
        let text = serde_json::to_string(&report.to_json()).expect("report serializes");
        entry.voi_cache.insert(key, text.clone());
        Ok(text)
    })?;
    Ok(json_body(StatusCode::OK, body))
}

async fn get_recommendation(
    State(state): State<Arc<AppState>>,
    Path(id): Path<String>,
) -> ApiResult {
    let rec = with_session(&state, &id, |entry, model| {
        Ok(entry.session.recommendation(&model.diagram)?)
    })?;
    Ok(Json(rec).into_response())
}

/// Serves on `127.0.0.1:port` until the process ends.
pub async fn serve(port: u16, log_dir: Option<PathBuf>) -> anyhow::Result<()> {
    let state = Arc::new(AppState::new(log_dir)?);
    let addr = SocketAddr::from((Ipv4Addr::LOCALHOST, port));
    let listener = tokio::net::TcpListener::bind(addr).await?;
    eprintln!("listening on http://{}", listener.local_addr()?);
    axum::serve(listener, router(state)).await?;
    Ok(())
}
