//! HTTP/JSON service: problem-building sessions and solving.
//!
//! Every mutating endpoint answers with the full dialogue state, so a client
//! never has to keep its own copy. Errors use the envelope
//! `{code, message, details}`.

use std::collections::HashMap;
use std::net::SocketAddr;
use std::sync::{Arc, Mutex, TryLockError};
use std::time::{Duration, Instant};

use axum::body::Bytes;
use axum::extract::{Path, Query, State};
use axum::http::{HeaderValue, StatusCode};
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};
use tower_http::cors::{AllowOrigin, Any, CorsLayer};
use uuid::Uuid;

use crate::explain::SolutionReport;
use crate::knowledge::KnowledgeBase;
use crate::ontology::GraphDocument;
use crate::problem::{
    Choice, ConceptInstance, Known, ProblemError, ProblemInstance, Status, VariableInfo,
};
use crate::reasoner::{solve_with, FirstFound, ReasonerError};

pub const DEFAULT_ADDR: &str = "127.0.0.1:8080";
pub const DEFAULT_SESSION_TIMEOUT: Duration = Duration::from_secs(3600);

#[derive(Debug, Clone)]
pub struct ServiceConfig {
    pub session_timeout: Duration,
    /// Allowed CORS origins; empty allows any.
    pub cors_origins: Vec<String>,
}

impl Default for ServiceConfig {
    fn default() -> Self {
        ServiceConfig {
            session_timeout: DEFAULT_SESSION_TIMEOUT,
            cors_origins: Vec::new(),
        }
    }
}

/// The error envelope.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ApiError {
    #[serde(skip)]
    pub status: u16,
    pub code: String,
    pub message: String,
    #[serde(default)]
    pub details: Value,
}

impl ApiError {
    fn new(status: StatusCode, code: &str, message: impl Into<String>) -> Self {
        ApiError {
            status: status.as_u16(),
            code: code.to_string(),
            message: message.into(),
            details: Value::Null,
        }
    }

    fn with_details(mut self, details: Value) -> Self {
        self.details = details;
        self
    }

    fn session(id: &str) -> Self {
        Self::new(
            StatusCode::NOT_FOUND,
            "UnknownSession",
            format!("no live session `{id}`"),
        )
        .with_details(json!({ "session_id": id }))
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        let status = StatusCode::from_u16(self.status).unwrap_or(StatusCode::INTERNAL_SERVER_ERROR);
        (status, Json(self)).into_response()
    }
}

impl From<ProblemError> for ApiError {
    fn from(e: ProblemError) -> Self {
        let status = match e {
            ProblemError::UnknownProcessClass { .. } | ProblemError::Parse { .. } => {
                StatusCode::BAD_REQUEST
            }
            _ => StatusCode::UNPROCESSABLE_ENTITY,
        };
        let details = match &e {
            ProblemError::IncompleteDefinition { missing } => {
                json!({ "stage": "definition", "missing": missing })
            }
            ProblemError::UnknownProcessClass { available, .. } => {
                json!({ "available": available })
            }
            ProblemError::UnknownMaterial { available, .. } => json!({ "available": available }),
            ProblemError::InvalidValue { allowed, .. } => json!({ "allowed": allowed }),
            _ => Value::Null,
        };
        ApiError::new(status, e.code(), e.to_string()).with_details(details)
    }
}

impl From<ReasonerError> for ApiError {
    fn from(e: ReasonerError) -> Self {
        if let ReasonerError::Definition(p) = e {
            return p.into();
        }
        let mut details = json!({ "stage": e.stage() });
        match &e {
            ReasonerError::NotSolvable { unreached } => details["unreached"] = json!(unreached),
            ReasonerError::InconsistentInput {
                equation, report, ..
            } => {
                details["equation"] = json!(equation);
                if let Some(r) = report {
                    details["report"] = serde_json::to_value(r).expect("report serializes");
                }
            }
            ReasonerError::Execution {
                equation, unknown, ..
            } => {
                details["equation"] = json!(equation);
                details["unknown"] = json!(unknown);
            }
            _ => {}
        }
        ApiError::new(StatusCode::UNPROCESSABLE_ENTITY, e.code(), e.to_string())
            .with_details(details)
    }
}

/// Full dialogue state of a session.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DialogueState {
    pub session_id: String,
    pub process_class: String,
    pub status: Status,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub material: Option<String>,
    pub instances: Vec<ConceptInstance>,
    pub pending_choices: Vec<Choice>,
    pub variables: Vec<VariableInfo>,
    pub knowns: std::collections::BTreeMap<String, Known>,
    pub targets: Vec<String>,
    /// Items that still block solving.
    pub missing: Vec<String>,
}

impl DialogueState {
    fn of(id: &str, p: &ProblemInstance) -> Self {
        DialogueState {
            session_id: id.to_string(),
            process_class: p.process_class().to_string(),
            status: p.status(),
            material: p.material().map(String::from),
            instances: p.instances().to_vec(),
            pending_choices: p.pending_choices(),
            variables: p.variables(),
            knowns: p.knowns().clone(),
            targets: p.targets().to_vec(),
            missing: p.missing_mandatory(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProcessClassInfo {
    pub name: String,
    pub concept: String,
    pub description: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolveResponse {
    pub report: SolutionReport,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub graph: Option<GraphPayload>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum GraphPayload {
    Json(GraphDocument),
    Dot(String),
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct CreateRequest {
    process_class: String,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct AttributeRequest {
    instance: String,
    attribute: String,
    value: crate::ontology::Scalar,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct MaterialRequest {
    material: String,
}

/// `null` clears a value.
#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct ValuesRequest {
    values: std::collections::BTreeMap<String, Option<f64>>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct TargetsRequest {
    targets: Vec<String>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RenameRequest {
    from: String,
    to: String,
}

#[derive(Deserialize)]
struct SolveQuery {
    graph: Option<String>,
}

struct Session {
    problem: Mutex<ProblemInstance>,
    touched: Mutex<Instant>,
}

struct Inner {
    kb: Arc<KnowledgeBase>,
    config: ServiceConfig,
    sessions: Mutex<HashMap<String, Arc<Session>>>,
}

/// Shared service state; clones share sessions.
#[derive(Clone)]
pub struct Service {
    inner: Arc<Inner>,
}

impl Service {
    pub fn new(kb: Arc<KnowledgeBase>, config: ServiceConfig) -> Self {
        Service {
            inner: Arc::new(Inner {
                kb,
                config,
                sessions: Mutex::new(HashMap::new()),
            }),
        }
    }

    pub fn session_count(&self) -> usize {
        self.purge();
        self.inner.sessions.lock().expect("session table").len()
    }

    /// Runs `f` while the session's problem is locked, as a concurrent
    /// request would see it.
    pub fn with_session_held<R>(&self, id: &str, f: impl FnOnce() -> R) -> Option<R> {
        let session = self
            .inner
            .sessions
            .lock()
            .expect("session table")
            .get(id)
            .cloned()?;
        let guard = session.problem.lock().expect("session lock");
        let r = f();
        drop(guard);
        Some(r)
    }

    fn purge(&self) {
        let timeout = self.inner.config.session_timeout;
        self.inner
            .sessions
            .lock()
            .expect("session table")
            .retain(|_, s| s.touched.lock().expect("touch lock").elapsed() <= timeout);
    }

    fn session(&self, id: &str) -> Result<Arc<Session>, ApiError> {
        self.purge();
        let s = self
            .inner
            .sessions
            .lock()
            .expect("session table")
            .get(id)
            .cloned()
            .ok_or_else(|| ApiError::session(id))?;
        *s.touched.lock().expect("touch lock") = Instant::now();
        Ok(s)
    }

    /// Locks the session for one request; a concurrent request gets 409.
    fn with_problem<R>(
        &self,
        id: &str,
        f: impl FnOnce(&mut ProblemInstance) -> Result<R, ApiError>,
    ) -> Result<R, ApiError> {
        let session = self.session(id)?;
        let mut guard = match session.problem.try_lock() {
            Ok(g) => g,
            Err(TryLockError::WouldBlock) => {
                return Err(ApiError::new(
                    StatusCode::CONFLICT,
                    "ConcurrentModification",
                    format!("session `{id}` is busy with another request"),
                ))
            }
            Err(TryLockError::Poisoned(p)) => p.into_inner(),
        };
        f(&mut guard)
    }

    fn mutate(
        &self,
        id: &str,
        f: impl FnOnce(&mut ProblemInstance) -> Result<(), ProblemError>,
    ) -> Result<Json<DialogueState>, ApiError> {
        self.with_problem(id, |p| {
            f(p)?;
            Ok(Json(DialogueState::of(id, p)))
        })
    }

    pub fn router(&self) -> Router {
        let cors = if self.inner.config.cors_origins.is_empty() {
            CorsLayer::new().allow_origin(Any)
        } else {
            let origins: Vec<HeaderValue> = self
                .inner
                .config
                .cors_origins
                .iter()
                .filter_map(|o| HeaderValue::from_str(o).ok())
                .collect();
            CorsLayer::new().allow_origin(AllowOrigin::list(origins))
        }
        .allow_methods(Any)
        .allow_headers(Any);
        Router::new()
            .route("/api/process-classes", get(process_classes))
            .route("/api/materials", get(materials))
            .route("/api/equations", get(equations))
            .route("/api/problems", post(create_problem))
            .route(
                "/api/problems/{id}",
                get(get_problem).delete(delete_problem),
            )
            .route("/api/problems/{id}/attributes", post(set_attribute))
            .route("/api/problems/{id}/material", post(set_material))
            .route("/api/problems/{id}/values", post(set_values))
            .route("/api/problems/{id}/targets", post(set_targets))
            .route("/api/problems/{id}/names", post(rename))
            .route("/api/problems/{id}/document", get(document))
            .route("/api/problems/{id}/solve", post(solve))
            .fallback(|| async {
                ApiError::new(StatusCode::NOT_FOUND, "NotFound", "no such endpoint")
            })
            .layer(cors)
            .with_state(self.clone())
    }
}

fn parse_body<T: DeserializeOwned>(body: &Bytes) -> Result<T, ApiError> {
    serde_json::from_slice(body).map_err(|e| {
        ApiError::new(StatusCode::BAD_REQUEST, "ParseError", e.to_string())
            .with_details(json!({ "line": e.line(), "column": e.column() }))
    })
}

async fn process_classes(State(s): State<Service>) -> Json<Vec<ProcessClassInfo>> {
    Json(
        s.inner
            .kb
            .processes
            .iter()
            .map(|c| ProcessClassInfo {
                name: c.name.clone(),
                concept: c.concept.clone(),
                description: c.description.clone(),
            })
            .collect(),
    )
}

async fn materials(State(s): State<Service>) -> Json<Value> {
    Json(serde_json::to_value(&s.inner.kb.materials).expect("materials serialize"))
}

async fn equations(State(s): State<Service>) -> Json<Value> {
    let list: Vec<Value> = s
        .inner
        .kb
        .equation_catalog()
        .iter()
        .map(|e| json!({ "name": e.name, "equation": e.render(), "guards": e.guards }))
        .collect();
    Json(Value::Array(list))
}

async fn create_problem(State(s): State<Service>, body: Bytes) -> Result<Response, ApiError> {
    let req: CreateRequest = parse_body(&body)?;
    let problem = ProblemInstance::create(s.inner.kb.clone(), &req.process_class)?;
    let id = Uuid::new_v4().simple().to_string();
    let state = DialogueState::of(&id, &problem);
    s.purge();
    s.inner.sessions.lock().expect("session table").insert(
        id,
        Arc::new(Session {
            problem: Mutex::new(problem),
            touched: Mutex::new(Instant::now()),
        }),
    );
    Ok((StatusCode::CREATED, Json(state)).into_response())
}

async fn get_problem(
    State(s): State<Service>,
    Path(id): Path<String>,
) -> Result<Json<DialogueState>, ApiError> {
    s.with_problem(&id, |p| Ok(Json(DialogueState::of(&id, p))))
}

async fn delete_problem(
    State(s): State<Service>,
    Path(id): Path<String>,
) -> Result<StatusCode, ApiError> {
    s.session(&id)?;
    s.inner.sessions.lock().expect("session table").remove(&id);
    Ok(StatusCode::NO_CONTENT)
}

async fn set_attribute(
    State(s): State<Service>,
    Path(id): Path<String>,
    body: Bytes,
) -> Result<Json<DialogueState>, ApiError> {
    let req: AttributeRequest = parse_body(&body)?;
    s.mutate(&id, |p| {
        p.set_attribute(&req.instance, &req.attribute, req.value.as_str())
    })
}

async fn set_material(
    State(s): State<Service>,
    Path(id): Path<String>,
    body: Bytes,
) -> Result<Json<DialogueState>, ApiError> {
    let req: MaterialRequest = parse_body(&body)?;
    s.mutate(&id, |p| p.set_material(&req.material))
}

/// All values are applied or none.
async fn set_values(
    State(s): State<Service>,
    Path(id): Path<String>,
    body: Bytes,
) -> Result<Json<DialogueState>, ApiError> {
    let req: ValuesRequest = parse_body(&body)?;
    s.mutate(&id, |p| {
        let mut next = p.clone();
        for (name, value) in &req.values {
            match value {
                Some(v) => next.set_value(name, *v)?,
                None => next.clear_value(name)?,
            }
        }
        *p = next;
        Ok(())
    })
}

async fn set_targets(
    State(s): State<Service>,
    Path(id): Path<String>,
    body: Bytes,
) -> Result<Json<DialogueState>, ApiError> {
    let req: TargetsRequest = parse_body(&body)?;
    s.mutate(&id, |p| p.set_targets(&req.targets))
}

async fn rename(
    State(s): State<Service>,
    Path(id): Path<String>,
    body: Bytes,
) -> Result<Json<DialogueState>, ApiError> {
    let req: RenameRequest = parse_body(&body)?;
    s.mutate(&id, |p| p.rename(&req.from, &req.to))
}

async fn document(State(s): State<Service>, Path(id): Path<String>) -> Result<Response, ApiError> {
    s.with_problem(&id, |p| {
        let doc = p.to_document();
        Ok(([("content-type", "application/yaml")], doc.to_yaml()).into_response())
    })
}

async fn solve(
    State(s): State<Service>,
    Path(id): Path<String>,
    Query(q): Query<SolveQuery>,
) -> Result<Json<SolveResponse>, ApiError> {
    let graph_format = match q.graph.as_deref() {
        None => None,
        Some(f @ ("json" | "dot")) => Some(f.to_string()),
        Some(other) => {
            return Err(ApiError::new(
                StatusCode::BAD_REQUEST,
                "InvalidQuery",
                format!("graph format `{other}` is not json or dot"),
            ))
        }
    };
    let problem = s.with_problem(&id, |p| Ok(p.clone()))?;
    let solved = tokio::task::spawn_blocking(move || solve_with(&problem, &FirstFound))
        .await
        .map_err(|e| {
            ApiError::new(StatusCode::INTERNAL_SERVER_ERROR, "Internal", e.to_string())
        })??;
    let graph = graph_format.map(|f| {
        let doc = solved.graph.to_document();
        if f == "dot" {
            GraphPayload::Dot(doc.to_dot("reasoning"))
        } else {
            GraphPayload::Json(doc)
        }
    });
    Ok(Json(SolveResponse {
        report: solved.report,
        graph,
    }))
}

/// Serves until ctrl-c.
pub async fn serve(addr: SocketAddr, service: Service) -> std::io::Result<()> {
    let listener = tokio::net::TcpListener::bind(addr).await?;
    eprintln!("listening on http://{}", listener.local_addr()?);
    axum::serve(listener, service.router())
        .with_graceful_shutdown(async {
            let _ = tokio::signal::ctrl_c().await;
        })
        .await
}
