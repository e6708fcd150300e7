//! HTTP API for UWL workflows.
//!
//! Workflows live as canonical files in a [`DocumentStore`] folder. Writes
//! use optimistic concurrency: `GET` returns the revision in `ETag`, and
//! `PUT` must send it back in `If-Match`.

mod store;

use std::net::SocketAddr;
use std::path::PathBuf;
use std::sync::Arc;

use axum::body::Bytes;
use axum::extract::{Path, Query, State};
use axum::http::header::{CONTENT_TYPE, ETAG, IF_MATCH};
use axum::http::{HeaderMap, HeaderValue, StatusCode};
use axum::response::{Html, IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};
use tower_http::cors::{Any, CorsLayer};
use tower_http::services::ServeDir;
use uwl_core::bench::{self, BenchAction, BenchSample, GeneratorConfig, Preset};
use uwl_core::lint::{self, Annotations, LintReport};
use uwl_core::table::{self, RowKey};
use uwl_core::transcribe::{render_protocol, transcribe, TranslationTable, Vocabulary};
use uwl_core::{parse, serialize, Violation};

pub use store::{valid_id, DocumentStore, StoreError, WorkflowSummary};

/// Largest sample count accepted by `POST /api/generate`.
pub const MAX_GENERATE: usize = 100_000;

pub struct AppState {
    pub store: DocumentStore,
    pub vocabulary: Vocabulary,
    pub locale_dir: PathBuf,
}

#[derive(Debug)]
pub struct ApiError {
    status: StatusCode,
    code: String,
    message: String,
    violations: Vec<Violation>,
}

impl ApiError {
    pub fn new(status: StatusCode, code: impl Into<String>, message: impl Into<String>) -> Self {
        ApiError { status, code: code.into(), message: message.into(), violations: Vec::new() }
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        let mut body = json!({ "error": { "code": self.code, "message": self.message } });
        if !self.violations.is_empty() {
            body["violations"] = json!(self.violations);
        }
        (self.status, Json(body)).into_response()
    }
}

impl From<StoreError> for ApiError {
    fn from(e: StoreError) -> Self {
        let message = e.to_string();
        match e {
            StoreError::NotFound(_) => ApiError::new(StatusCode::NOT_FOUND, "NOT_FOUND", message),
            StoreError::BadId(_) => ApiError::new(StatusCode::BAD_REQUEST, "BAD_ID", message),
            StoreError::Stale { .. } => ApiError::new(StatusCode::CONFLICT, "STALE_REVISION", message),
            StoreError::RevisionRequired(_) => {
                ApiError::new(StatusCode::PRECONDITION_REQUIRED, "REVISION_REQUIRED", message)
            }
            StoreError::Parse(p) => ApiError::new(StatusCode::BAD_REQUEST, p.code_str(), p.to_string()),
            StoreError::Invalid(report) => ApiError {
                violations: report.violations,
                ..ApiError::new(StatusCode::BAD_REQUEST, "INVALID", message)
            },
            StoreError::Io { .. } => ApiError::new(StatusCode::INTERNAL_SERVER_ERROR, "IO", message),
        }
    }
}

fn unprocessable(code: &str, message: impl ToString) -> ApiError {
    ApiError::new(StatusCode::UNPROCESSABLE_ENTITY, code, message.to_string())
}

type ApiResult<T> = Result<T, ApiError>;

fn etag(revision: u64) -> HeaderValue {
    HeaderValue::from_str(&format!("\"{revision}\"")).expect("digits are a valid header")
}

fn if_match(headers: &HeaderMap) -> ApiResult<Option<u64>> {
    let Some(v) = headers.get(IF_MATCH) else { return Ok(None) };
    v.to_str()
        .ok()
        .map(|s| s.trim().trim_start_matches("W/").trim_matches('"'))
        .and_then(|s| s.parse().ok())
        .map(Some)
        .ok_or_else(|| ApiError::new(StatusCode::BAD_REQUEST, "BAD_IF_MATCH", "If-Match must be a revision number"))
}

fn revision_body(id: &str, revision: u64) -> Response {
    ([(ETAG, etag(revision))], Json(json!({ "id": id, "revision": revision }))).into_response()
}

async fn list(State(app): State<Arc<AppState>>) -> Json<Vec<WorkflowSummary>> {
    Json(app.store.list().await)
}

async fn get_workflow(State(app): State<Arc<AppState>>, Path(id): Path<String>) -> ApiResult<Response> {
    let (text, revision) = app.store.get(&id).await?;
    Ok(([(CONTENT_TYPE, HeaderValue::from_static("application/json")), (ETAG, etag(revision))], text).into_response())
}

async fn put_workflow(
    State(app): State<Arc<AppState>>,
    Path(id): Path<String>,
    headers: HeaderMap,
    body: String,
) -> ApiResult<Response> {
    let revision = app.store.put(&id, &body, if_match(&headers)?).await?;
    Ok(revision_body(&id, revision))
}

async fn validate(State(app): State<Arc<AppState>>, Path(id): Path<String>) -> ApiResult<Json<Value>> {
    let (doc, revision) = app.store.document(&id).await?;
    let report = doc.validate();
    Ok(Json(json!({ "revision": revision, "valid": report.is_clean(), "violations": report.violations })))
}

#[derive(Deserialize)]
struct ProtocolQuery {
    lang: Option<String>,
    format: Option<String>,
}

async fn protocol(
    State(app): State<Arc<AppState>>,
    Path(id): Path<String>,
    Query(q): Query<ProtocolQuery>,
) -> ApiResult<Response> {
    let (doc, revision) = app.store.document(&id).await?;
    let lang = q.lang.as_deref().unwrap_or("en");
    let table = TranslationTable::for_language(&app.locale_dir, lang)
        .map_err(|e| ApiError::new(StatusCode::NOT_FOUND, "UNKNOWN_LANGUAGE", e.to_string()))?;
    let response = match q.format.as_deref().unwrap_or("text") {
        "text" => {
            let text = transcribe(&doc, &app.vocabulary, &table).map_err(|e| unprocessable(e.code(), &e))?;
            ([(CONTENT_TYPE, HeaderValue::from_static("text/plain; charset=utf-8")), (ETAG, etag(revision))], text)
                .into_response()
        }
        "json" => {
            let structured = render_protocol(&doc, &app.vocabulary, &table).map_err(|e| unprocessable(e.code(), &e))?;
            ([(ETAG, etag(revision))], Json(structured)).into_response()
        }
        other => return Err(ApiError::new(StatusCode::BAD_REQUEST, "BAD_FORMAT", format!("unknown format {other:?}"))),
    };
    Ok(response)
}

#[derive(Deserialize)]
struct TableQuery {
    format: Option<String>,
}

async fn get_table(
    State(app): State<Arc<AppState>>,
    Path(id): Path<String>,
    Query(q): Query<TableQuery>,
) -> ApiResult<Response> {
    let (doc, revision) = app.store.document(&id).await?;
    let view = table::flatten(&[&doc]);
    Ok(match q.format.as_deref().unwrap_or("json") {
        "json" => ([(ETAG, etag(revision))], Json(view)).into_response(),
        "csv" => (
            [(CONTENT_TYPE, HeaderValue::from_static("text/csv; charset=utf-8")), (ETAG, etag(revision))],
            table::to_csv(&view),
        )
            .into_response(),
        other => return Err(ApiError::new(StatusCode::BAD_REQUEST, "BAD_FORMAT", format!("unknown format {other:?}"))),
    })
}

#[derive(Deserialize)]
struct CellEdit {
    #[serde(flatten)]
    key: RowKey,
    value: String,
}

async fn patch_table(
    State(app): State<Arc<AppState>>,
    Path(id): Path<String>,
    headers: HeaderMap,
    Json(edit): Json<CellEdit>,
) -> ApiResult<Response> {
    let revision = app
        .store
        .update(&id, if_match(&headers)?, |doc| table::apply_edit(doc, &edit.key, &edit.value))
        .await?
        .map_err(|e| unprocessable(e.code(), &e))?;
    Ok(revision_body(&id, revision))
}

#[derive(Serialize)]
struct LintResponse {
    #[serde(flatten)]
    report: LintReport,
    ambiguities_per_100_words: f64,
    missing_params_per_100_words: f64,
}

async fn lint_workflow(
    State(app): State<Arc<AppState>>,
    Path(id): Path<String>,
    Json(ann): Json<Annotations>,
) -> ApiResult<Json<LintResponse>> {
    let (doc, _) = app.store.document(&id).await?;
    let report = lint::completeness_report(&doc, &ann).map_err(|e| unprocessable(e.code(), &e))?;
    Ok(Json(LintResponse {
        ambiguities_per_100_words: report.ambiguities_per_100_words(),
        missing_params_per_100_words: report.missing_params_per_100_words(),
        report,
    }))
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct GenerateRequest {
    preset: Option<Preset>,
    config: Option<GeneratorConfig>,
    #[serde(default)]
    seed: u64,
    count: Option<usize>,
    #[serde(default)]
    documents: bool,
}

async fn generate(Json(req): Json<GenerateRequest>) -> ApiResult<Json<Value>> {
    let mut config = match (req.preset, req.config) {
        (Some(p), None) => p.config(req.seed, 0),
        (None, Some(c)) => GeneratorConfig { seed: req.seed, ..c },
        _ => return Err(unprocessable("CONFIG_INVALID", "give exactly one of preset and config")),
    };
    config.count = req.count.unwrap_or(config.count.max(1));
    if config.count > MAX_GENERATE {
        return Err(unprocessable("CONFIG_INVALID", format!("count is limited to {MAX_GENERATE}")));
    }
    let result = tokio::task::spawn_blocking(move || -> Result<Value, bench::BenchError> {
        if req.documents {
            let generated = bench::generate(&config)?;
            let samples: Vec<&BenchSample> = generated.iter().map(|g| &g.sample).collect();
            let documents: Vec<Value> = generated
                .iter()
                .map(|g| serde_json::from_str(&serialize(&g.document)).expect("canonical text is JSON"))
                .collect();
            Ok(json!({ "config": config, "samples": samples, "documents": documents }))
        } else {
            Ok(json!({ "config": config, "samples": bench::generate_samples(&config)? }))
        }
    })
    .await
    .map_err(|e| ApiError::new(StatusCode::INTERNAL_SERVER_ERROR, "INTERNAL", e.to_string()))?;
    result.map(Json).map_err(|e| unprocessable(e.code(), &e))
}

#[derive(Deserialize)]
struct ActionList {
    actions: Vec<BenchAction>,
}

/// Body is either `{"actions": [...]}` or a generated UWL document.
async fn surrogate(body: Bytes) -> ApiResult<Json<Value>> {
    let text = std::str::from_utf8(&body).map_err(|e| ApiError::new(StatusCode::BAD_REQUEST, "SYNTAX", e.to_string()))?;
    let actions = match serde_json::from_str::<ActionList>(text) {
        Ok(list) => list.actions,
        Err(_) => {
            let doc = parse(text).map_err(StoreError::Parse)?;
            bench::from_document(&doc).map_err(|e| unprocessable(e.code(), &e))?
        }
    };
    let response = bench::surrogate(&actions).map_err(|e| unprocessable(e.code(), &e))?;
    Ok(Json(json!({ "response": response, "actions": actions.len() })))
}

const INDEX: &str = "<!doctype html>
<html><head><meta charset=\"utf-8\"><title>UWL service</title></head>
<body><h1>UWL service</h1>
<p>No editor build is configured. The API lives under <a href=\"/api/workflows\">/api/workflows</a>.</p>
</body></html>
";

async fn index() -> Html<&'static str> {
    Html(INDEX)
}

/// Routes with CORS open to any origin. Static files come from
/// `static_dir` when given; otherwise `/` serves a short notice.
pub fn router(state: Arc<AppState>, static_dir: Option<PathBuf>) -> Router {
    let api = Router::new()
        .route("/api/workflows", get(list))
        .route("/api/workflows/{id}", get(get_workflow).put(put_workflow))
        .route("/api/workflows/{id}/validate", post(validate))
        .route("/api/workflows/{id}/protocol", get(protocol))
        .route("/api/workflows/{id}/table", get(get_table).patch(patch_table))
        .route("/api/workflows/{id}/lint", post(lint_workflow))
        .route("/api/generate", post(generate))
        .route("/api/surrogate", post(surrogate))
        .with_state(state);
    let api = match static_dir {
        Some(dir) => api.fallback_service(ServeDir::new(dir)),
        None => api.route("/", get(index)),
    };
    api.layer(
        CorsLayer::new()
            .allow_origin(Any)
            .allow_methods(Any)
            .allow_headers(Any)
            .expose_headers([ETAG]),
    )
}

pub struct ServeConfig {
    pub store_dir: PathBuf,
    pub addr: SocketAddr,
    pub static_dir: Option<PathBuf>,
    pub locale_dir: PathBuf,
    pub vocabulary: Vocabulary,
}

/// Opens the store and serves until the process ends.
pub async fn serve(config: ServeConfig) -> std::io::Result<()> {
    let (store, skipped) = DocumentStore::open(&config.store_dir)?;
    for (path, reason) in skipped {
        eprintln!("skipping {}: {reason}", path.display());
    }
    let state = Arc::new(AppState { store, vocabulary: config.vocabulary, locale_dir: config.locale_dir });
    let listener = tokio::net::TcpListener::bind(config.addr).await?;
    eprintln!("listening on http://{}", listener.local_addr()?);
    axum::serve(listener, router(state, config.static_dir)).await
}
