//! HTTP API over annotation projects.
//!
//! Every mutating request is validated, appended to the project's log and
//! only then applied, so a restart from the data directory restores the
//! exact state. Errors are JSON objects `{"error": {"code", "message"}}`.

use axum::extract::rejection::{JsonRejection, QueryRejection};
use axum::extract::{Path, Query, State};
use axum::http::StatusCode;
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use lscd_core::annotation::{
    create_project, project_from_usages, AnnotationProject, CompletionStatus, Event, NextPair, ProjectConfig,
    ProjectStore,
};
use lscd_core::corpus::{Corpus, UsageSample};
use lscd_core::wug::{Judgment, Rating};
use lscd_core::{Error, Period};
use serde::{Deserialize, Serialize};
use serde_json::json;
use std::collections::BTreeMap;
use std::path::PathBuf;
use std::sync::{Arc, RwLock};

pub struct AppState {
    store: ProjectStore,
    projects: RwLock<BTreeMap<String, Arc<RwLock<AnnotationProject>>>>,
}

impl AppState {
    /// Open the data directory and replay every project found in it.
    pub fn load(data_dir: impl Into<PathBuf>) -> lscd_core::Result<Arc<Self>> {
        let store = ProjectStore::open(data_dir)?;
        let projects = store
            .load_all()?
            .into_iter()
            .map(|p| (p.id().to_owned(), Arc::new(RwLock::new(p))))
            .collect();
        Ok(Arc::new(AppState { store, projects: RwLock::new(projects) }))
    }

    fn project(&self, id: &str) -> Result<Arc<RwLock<AnnotationProject>>, ApiError> {
        self.projects
            .read()
            .expect("project map lock")
            .get(id)
            .cloned()
            .ok_or_else(|| ApiError::from(Error::Unknown { kind: "project", name: id.to_owned() }))
    }
}

#[derive(Debug)]
pub struct ApiError {
    status: StatusCode,
    code: String,
    message: String,
}

impl ApiError {
    fn bad_request(code: &str, message: impl Into<String>) -> Self {
        ApiError { status: StatusCode::BAD_REQUEST, code: code.to_owned(), message: message.into() }
    }
}

impl From<Error> for ApiError {
    fn from(e: Error) -> Self {
        let (status, code) = match &e {
            Error::Unknown { kind, .. } => (StatusCode::NOT_FOUND, format!("unknown_{kind}")),
            Error::Duplicate { kind, .. } => (StatusCode::CONFLICT, format!("duplicate_{kind}")),
            Error::Annotation(_) => (StatusCode::CONFLICT, "annotation_rule".to_owned()),
            Error::InvalidInput(_) | Error::Config(_) => (StatusCode::BAD_REQUEST, "invalid_input".to_owned()),
            Error::Io { .. } | Error::Parse { .. } | Error::EmptyFile(_) | Error::Csv(_) => {
                (StatusCode::UNPROCESSABLE_ENTITY, "bad_data".to_owned())
            }
            _ => (StatusCode::INTERNAL_SERVER_ERROR, "internal".to_owned()),
        };
        ApiError { status, code, message: e.to_string() }
    }
}

impl From<JsonRejection> for ApiError {
    fn from(e: JsonRejection) -> Self {
        ApiError::bad_request("invalid_body", e.body_text())
    }
}

impl From<QueryRejection> for ApiError {
    fn from(e: QueryRejection) -> Self {
        ApiError::bad_request("invalid_query", e.body_text())
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        let body = json!({ "error": { "code": self.code, "message": self.message } });
        (self.status, Json(body)).into_response()
    }
}

type ApiResult<T> = Result<T, ApiError>;

pub fn router(state: Arc<AppState>) -> Router {
    Router::new()
        .route("/projects", post(create).get(list))
        .route("/projects/{id}/annotators", post(register))
        .route("/projects/{id}/next", get(next))
        .route("/projects/{id}/judgments", post(judge))
        .route("/projects/{id}/status", get(status))
        .route("/projects/{id}/advance", post(advance))
        .route("/projects/{id}/wug/{lemma}", get(wug))
        .route("/projects/{id}/change/{lemma}", get(change))
        .route("/projects/{id}/export/{lemma}", get(export))
        .layer(tower_http::cors::CorsLayer::permissive())
        .with_state(state)
}

/// Serve until Ctrl-C.
pub async fn serve(addr: std::net::SocketAddr, data_dir: PathBuf) -> std::io::Result<()> {
    let state = AppState::load(data_dir).map_err(std::io::Error::other)?;
    let listener = tokio::net::TcpListener::bind(addr).await?;
    axum::serve(listener, router(state))
        .with_graceful_shutdown(async {
            let _ = tokio::signal::ctrl_c().await;
        })
        .await
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct CreateRequest {
    id: String,
    #[serde(default)]
    targets: Vec<String>,
    corpus1: Option<PathBuf>,
    corpus2: Option<PathBuf>,
    usages: Option<Vec<UsageSample>>,
    sample_size: Option<usize>,
    seed: Option<u64>,
    pair_density: Option<f64>,
    #[serde(default)]
    annotators: Vec<String>,
}

#[derive(Serialize)]
struct Created {
    id: String,
    status: CompletionStatus,
}

fn run_blocking<T: Send + 'static>(f: impl FnOnce() -> ApiResult<T> + Send + 'static) -> impl std::future::Future<Output = ApiResult<T>> {
    async move {
        tokio::task::spawn_blocking(f)
            .await
            .map_err(|e| ApiError { status: StatusCode::INTERNAL_SERVER_ERROR, code: "internal".into(), message: e.to_string() })?
    }
}

async fn create(
    State(state): State<Arc<AppState>>,
    body: Result<Json<CreateRequest>, JsonRejection>,
) -> ApiResult<(StatusCode, Json<Created>)> {
    let Json(req) = body?;
    run_blocking(move || {
        let mut config = ProjectConfig::default();
        if let Some(n) = req.sample_size {
            config.sample_size = n;
        }
        if let Some(s) = req.seed {
            config.seed = s;
        }
        if let Some(d) = req.pair_density {
            config.pair_density = d;
        }
        let mut project = match (req.usages, req.corpus1, req.corpus2) {
            (Some(usages), None, None) => project_from_usages(&req.id, &req.targets, usages, config)?,
            (None, Some(p1), Some(p2)) => {
                if req.targets.is_empty() {
                    return Err(ApiError::bad_request("invalid_body", "`targets` is required with corpora"));
                }
                let c1 = Corpus::load(&p1, Period::C1)?;
                let c2 = Corpus::load(&p2, Period::C2)?;
                create_project(&req.id, &req.targets, &c1, &c2, config)?
            }
            _ => {
                return Err(ApiError::bad_request(
                    "invalid_body",
                    "give either `usages` or both `corpus1` and `corpus2`",
                ))
            }
        };
        for name in req.annotators {
            project.register_annotator(&name)?;
        }
        let mut projects = state.projects.write().expect("project map lock");
        if projects.contains_key(project.id()) {
            return Err(Error::Duplicate { kind: "project", name: project.id().to_owned() }.into());
        }
        state.store.create(&project)?;
        let created = Created { id: project.id().to_owned(), status: project.status() };
        projects.insert(project.id().to_owned(), Arc::new(RwLock::new(project)));
        Ok((StatusCode::CREATED, Json(created)))
    })
    .await
}

async fn list(State(state): State<Arc<AppState>>) -> Json<Vec<String>> {
    Json(state.projects.read().expect("project map lock").keys().cloned().collect())
}

fn execute(state: &AppState, id: &str, event: Event) -> ApiResult<lscd_core::annotation::Outcome> {
    let project = state.project(id)?;
    let mut guard = project.write().expect("project lock");
    Ok(state.store.execute(&mut guard, event)?)
}

#[derive(Deserialize)]
struct AnnotatorRequest {
    name: String,
}

async fn register(
    State(state): State<Arc<AppState>>,
    Path(id): Path<String>,
    body: Result<Json<AnnotatorRequest>, JsonRejection>,
) -> ApiResult<StatusCode> {
    let Json(req) = body?;
    execute(&state, &id, Event::Annotator { name: req.name })?;
    Ok(StatusCode::CREATED)
}

#[derive(Deserialize)]
struct NextQuery {
    annotator: String,
}

#[derive(Serialize)]
struct NextResponse {
    pair: Option<NextPair>,
}

async fn next(
    State(state): State<Arc<AppState>>,
    Path(id): Path<String>,
    query: Result<Query<NextQuery>, QueryRejection>,
) -> ApiResult<Json<NextResponse>> {
    let Query(q) = query?;
    let project = state.project(&id)?;
    let pair = project.read().expect("project lock").next_pair(&q.annotator)?;
    Ok(Json(NextResponse { pair }))
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct JudgmentRequest {
    lemma: String,
    usage_id_1: String,
    usage_id_2: String,
    annotator: String,
    /// 1..=4, or 0 for "cannot decide".
    judgment: i64,
    comment: Option<String>,
}

async fn judge(
    State(state): State<Arc<AppState>>,
    Path(id): Path<String>,
    body: Result<Json<JudgmentRequest>, JsonRejection>,
) -> ApiResult<(StatusCode, Json<serde_json::Value>)> {
    let Json(req) = body?;
    let judgment = Judgment {
        usage_id_1: req.usage_id_1,
        usage_id_2: req.usage_id_2,
        annotator: req.annotator,
        rating: Rating::from_code(req.judgment)?,
        comment: req.comment.filter(|c| !c.is_empty()),
    };
    execute(&state, &id, Event::Judgment { lemma: req.lemma, judgment })?;
    Ok((StatusCode::CREATED, Json(json!({ "recorded": true }))))
}

async fn status(State(state): State<Arc<AppState>>, Path(id): Path<String>) -> ApiResult<Json<CompletionStatus>> {
    let project = state.project(&id)?;
    let status = project.read().expect("project lock").status();
    Ok(Json(status))
}

#[derive(Deserialize)]
struct AdvanceQuery {
    #[serde(default)]
    force: bool,
}

async fn advance(
    State(state): State<Arc<AppState>>,
    Path(id): Path<String>,
    query: Result<Query<AdvanceQuery>, QueryRejection>,
) -> ApiResult<Json<CompletionStatus>> {
    let Query(q) = query?;
    run_blocking(move || match execute(&state, &id, Event::Advance { force: q.force })? {
        lscd_core::annotation::Outcome::Advanced(status) => Ok(Json(status)),
        _ => unreachable!("advance yields a status"),
    })
    .await
}

async fn wug(
    State(state): State<Arc<AppState>>,
    Path((id, lemma)): Path<(String, String)>,
) -> ApiResult<Json<lscd_core::wug::Layout>> {
    let project = state.project(&id)?;
    let layout = project.read().expect("project lock").layout(&lemma)?;
    Ok(Json(layout))
}

async fn change(
    State(state): State<Arc<AppState>>,
    Path((id, lemma)): Path<(String, String)>,
) -> ApiResult<Json<lscd_core::wug::ChangeResult>> {
    let project = state.project(&id)?;
    let change = project.read().expect("project lock").change(&lemma)?;
    Ok(Json(change))
}

async fn export(
    State(state): State<Arc<AppState>>,
    Path((id, lemma)): Path<(String, String)>,
) -> ApiResult<Json<BTreeMap<String, String>>> {
    let project = state.project(&id)?;
    let export = project.read().expect("project lock").export_wug(&lemma)?;
    Ok(Json(export.files))
}
