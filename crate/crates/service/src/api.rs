//! HTTP/JSON routes. Errors come back as `{"code", "message"}`.

use std::path::PathBuf;
use std::sync::Arc;

use axum::extract::rejection::{JsonRejection, QueryRejection};
use axum::extract::{Path, Query, State};
use axum::http::{header, HeaderMap, StatusCode};
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use sensecrowd_core::{AnnotationKind, EntryStatus, PartOfSpeech, WordId};
use serde::{Deserialize, Serialize};
use tower_http::services::ServeDir;

use crate::error::ServiceError;
use crate::service::{
    AnnotationInput, Caller, CredentialForm, ExportFilter, ReviewDecision, Service, WordForm,
};

type Shared = Arc<Service>;

#[derive(Debug, Serialize, Deserialize)]
pub struct ErrorBody {
    pub code: String,
    pub message: String,
}

pub struct ApiError(ServiceError);

impl From<ServiceError> for ApiError {
    fn from(e: ServiceError) -> Self {
        ApiError(e)
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        let status = StatusCode::from_u16(self.0.status()).unwrap_or(StatusCode::INTERNAL_SERVER_ERROR);
        if status.is_server_error() {
            log::error!("{}", self.0);
        }
        let body = ErrorBody {
            code: self.0.code().to_string(),
            message: self.0.to_string(),
        };
        (status, Json(body)).into_response()
    }
}

type ApiResult<T> = Result<T, ApiError>;

fn body<T>(payload: Result<Json<T>, JsonRejection>) -> Result<T, ServiceError> {
    payload
        .map(|Json(v)| v)
        .map_err(|e| ServiceError::BadRequest(e.body_text()))
}

fn query<T>(q: Result<Query<T>, QueryRejection>) -> Result<T, ServiceError> {
    q.map(|Query(v)| v)
        .map_err(|e| ServiceError::BadRequest(e.body_text()))
}

fn bearer(headers: &HeaderMap) -> Option<&str> {
    headers
        .get(header::AUTHORIZATION)?
        .to_str()
        .ok()?
        .strip_prefix("Bearer ")
        .map(str::trim)
}

fn caller(svc: &Service, headers: &HeaderMap) -> Result<Caller, ServiceError> {
    svc.authenticate(bearer(headers))
}

/// Runs a store call on the blocking pool; writes wait for an fsync.
async fn blocking<T: Send + 'static>(
    svc: Shared,
    f: impl FnOnce(&Service) -> Result<T, ServiceError> + Send + 'static,
) -> Result<T, ServiceError> {
    tokio::task::spawn_blocking(move || f(&svc))
        .await
        .unwrap_or_else(|e| std::panic::resume_unwind(e.into_panic()))
}

#[derive(Debug, Deserialize)]
struct TaskQuery {
    kind: Option<AnnotationKind>,
    pos: Option<PartOfSpeech>,
}

#[derive(Debug, Deserialize)]
struct LoginForm {
    email: String,
    password: String,
}

#[derive(Debug, Deserialize)]
struct StatusForm {
    status: EntryStatus,
}

async fn quiz(State(svc): State<Shared>) -> impl IntoResponse {
    Json(serde_json::json!({ "questions": svc.quiz() }))
}

async fn guidelines(State(svc): State<Shared>) -> impl IntoResponse {
    (
        [(header::CONTENT_TYPE, "text/markdown; charset=utf-8")],
        svc.guidelines().to_string(),
    )
}

async fn request_credentials(
    State(svc): State<Shared>,
    payload: Result<Json<CredentialForm>, JsonRejection>,
) -> ApiResult<impl IntoResponse> {
    let form = body(payload)?;
    let request = blocking(svc, move |s| s.request_credentials(form)).await?;
    Ok((
        StatusCode::CREATED,
        Json(serde_json::json!({
            "request_id": request.request_id,
            "state": request.state,
        })),
    ))
}

async fn list_requests(State(svc): State<Shared>, headers: HeaderMap) -> ApiResult<impl IntoResponse> {
    let who = caller(&svc, &headers)?;
    Ok(Json(svc.list_requests(&who)?))
}

async fn approve(
    State(svc): State<Shared>,
    headers: HeaderMap,
    Path(id): Path<String>,
) -> ApiResult<impl IntoResponse> {
    let who = caller(&svc, &headers)?;
    Ok(Json(blocking(svc, move |s| s.approve_request(&who, &id)).await?))
}

async fn reject(
    State(svc): State<Shared>,
    headers: HeaderMap,
    Path(id): Path<String>,
) -> ApiResult<impl IntoResponse> {
    let who = caller(&svc, &headers)?;
    Ok(Json(blocking(svc, move |s| s.reject_request(&who, &id)).await?))
}

async fn login(
    State(svc): State<Shared>,
    payload: Result<Json<LoginForm>, JsonRejection>,
) -> ApiResult<impl IntoResponse> {
    let form = body(payload)?;
    Ok(Json(blocking(svc, move |s| s.login(&form.email, &form.password)).await?))
}

async fn next_task(
    State(svc): State<Shared>,
    headers: HeaderMap,
    q: Result<Query<TaskQuery>, QueryRejection>,
) -> ApiResult<impl IntoResponse> {
    let who = caller(&svc, &headers)?;
    let q = query(q)?;
    let kind = q.kind.unwrap_or(AnnotationKind::Sense);
    Ok(Json(svc.next_task(&who, kind, q.pos)?))
}

async fn annotate(
    State(svc): State<Shared>,
    headers: HeaderMap,
    payload: Result<Json<AnnotationInput>, JsonRejection>,
) -> ApiResult<impl IntoResponse> {
    let who = caller(&svc, &headers)?;
    let input = body(payload)?;
    Ok(Json(blocking(svc, move |s| s.submit_annotation(&who, input)).await?))
}

async fn add_word(
    State(svc): State<Shared>,
    headers: HeaderMap,
    payload: Result<Json<WordForm>, JsonRejection>,
) -> ApiResult<impl IntoResponse> {
    let who = caller(&svc, &headers)?;
    let form = body(payload)?;
    let sub = blocking(svc, move |s| s.add_word(&who, form)).await?;
    Ok((StatusCode::CREATED, Json(sub)))
}

async fn set_status(
    State(svc): State<Shared>,
    headers: HeaderMap,
    Path(id): Path<String>,
    payload: Result<Json<StatusForm>, JsonRejection>,
) -> ApiResult<impl IntoResponse> {
    let who = caller(&svc, &headers)?;
    let form = body(payload)?;
    Ok(Json(
        blocking(svc, move |s| s.set_status(&who, &WordId(id), form.status)).await?,
    ))
}

async fn list_submissions(State(svc): State<Shared>, headers: HeaderMap) -> ApiResult<impl IntoResponse> {
    let who = caller(&svc, &headers)?;
    Ok(Json(svc.list_submissions(&who)?))
}

async fn review(
    State(svc): State<Shared>,
    headers: HeaderMap,
    Path(id): Path<String>,
    payload: Result<Json<ReviewDecision>, JsonRejection>,
) -> ApiResult<impl IntoResponse> {
    let who = caller(&svc, &headers)?;
    let decision = body(payload)?;
    Ok(Json(
        blocking(svc, move |s| s.review_submission(&who, &id, decision)).await?,
    ))
}

/// JSON lines in the lexicon interchange format.
async fn export(
    State(svc): State<Shared>,
    q: Result<Query<ExportFilter>, QueryRejection>,
) -> ApiResult<impl IntoResponse> {
    let filter = query(q)?;
    let mut out = String::new();
    for record in svc.export(filter) {
        out.push_str(&serde_json::to_string(&record).expect("records serialize"));
        out.push('\n');
    }
    Ok(([(header::CONTENT_TYPE, "application/x-ndjson")], out))
}

async fn not_found() -> ApiError {
    ApiError(ServiceError::BadRequest("no such endpoint".into()))
}

pub fn router(service: Shared, static_dir: Option<PathBuf>) -> Router {
    let api = Router::new()
        .route("/api/quiz", get(quiz))
        .route("/api/guidelines", get(guidelines))
        .route("/api/credential-requests", post(request_credentials))
        .route("/api/requests", get(list_requests))
        .route("/api/requests/{id}/approve", post(approve))
        .route("/api/requests/{id}/reject", post(reject))
        .route("/api/login", post(login))
        .route("/api/tasks/next", get(next_task))
        .route("/api/annotations", post(annotate))
        .route("/api/words", post(add_word))
        .route("/api/words/{id}/status", post(set_status))
        .route("/api/submissions", get(list_submissions))
        .route("/api/submissions/{id}/review", post(review))
        .route("/api/export", get(export))
        .route("/api/{*rest}", get(not_found).post(not_found))
        .with_state(service);
    match static_dir {
        Some(dir) => api.fallback_service(ServeDir::new(dir)),
        None => api,
    }
}

/// Serves until `shutdown` resolves.
pub async fn serve(
    service: Shared,
    listener: tokio::net::TcpListener,
    static_dir: Option<PathBuf>,
    shutdown: impl std::future::Future<Output = ()> + Send + 'static,
) -> std::io::Result<()> {
    axum::serve(listener, router(service, static_dir))
        .with_graceful_shutdown(shutdown)
        .await
}
