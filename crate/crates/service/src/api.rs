//! HTTP routes.
//!
//! | method | path                                   | who        |
//! |--------|----------------------------------------|------------|
//! | GET    | `/tasks`                               | any user   |
//! | GET    | `/tasks/{id}`                          | assigned annotator or reviewer |
//! | PUT    | `/tasks/{id}/annotations/{annotator}`  | that annotator |
//! | GET    | `/tasks/{id}/review`                   | reviewer   |
//! | POST   | `/tasks/{id}/finalize`                 | reviewer   |
//! | GET    | `/consistency`                         | reviewer   |
//! | POST   | `/consistency`                         | reviewer   |
//! | GET    | `/corpus`                              | reviewer   |
//!
//! Every request carries `Authorization: Bearer <token>`. Errors come back as
//! `{"schema_version": 1, "error": <code>, "message": <text>}`.

use std::sync::Arc;

use axum::body::Bytes;
use axum::extract::{Path, State};
use axum::http::{header, HeaderMap, StatusCode};
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post, put};
use axum::{Json, Router};
use serde::Serialize;

use crate::config::Role;
use crate::state::{
    decode_decision, decode_finalize, decode_submission, ConsistencyQueue, DecisionReceipt, FinalizeReceipt,
    ReviewItem, ServiceError, SubmissionReceipt, TaskList, TaskView, SCHEMA_VERSION,
};
use crate::Service;

pub struct ApiError(pub ServiceError);

impl From<ServiceError> for ApiError {
    fn from(e: ServiceError) -> Self {
        ApiError(e)
    }
}

#[derive(Serialize)]
struct ErrorBody<'a> {
    schema_version: u32,
    error: &'a str,
    message: String,
}

pub fn status_of(e: &ServiceError) -> StatusCode {
    match e {
        ServiceError::Unauthorized => StatusCode::UNAUTHORIZED,
        ServiceError::Forbidden(_) => StatusCode::FORBIDDEN,
        ServiceError::NotFound(_) => StatusCode::NOT_FOUND,
        ServiceError::BadRequest(_) => StatusCode::BAD_REQUEST,
        ServiceError::Conflict { .. } => StatusCode::CONFLICT,
        ServiceError::Unprocessable(_) => StatusCode::UNPROCESSABLE_ENTITY,
        ServiceError::Gone(_) => StatusCode::GONE,
        ServiceError::Internal(_) => StatusCode::INTERNAL_SERVER_ERROR,
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        let body = ErrorBody {
            schema_version: SCHEMA_VERSION,
            error: self.0.code(),
            message: self.0.to_string(),
        };
        (status_of(&self.0), Json(body)).into_response()
    }
}

type ApiResult<T> = Result<Json<T>, ApiError>;

fn caller(svc: &Service, headers: &HeaderMap) -> Result<(String, Role), ServiceError> {
    let token = headers
        .get(header::AUTHORIZATION)
        .and_then(|v| v.to_str().ok())
        .and_then(|v| v.strip_prefix("Bearer "))
        .ok_or(ServiceError::Unauthorized)?;
    svc.authenticate(token.trim()).ok_or(ServiceError::Unauthorized)
}

fn reviewer(svc: &Service, headers: &HeaderMap) -> Result<String, ServiceError> {
    match caller(svc, headers)? {
        (id, Role::Reviewer) => Ok(id),
        (id, Role::Annotator) => Err(ServiceError::Forbidden(format!("{id} is not a reviewer"))),
    }
}

async fn list_tasks(State(svc): State<Arc<Service>>, headers: HeaderMap) -> ApiResult<TaskList> {
    let (id, role) = caller(&svc, &headers)?;
    let filter = (role == Role::Annotator).then_some(id.as_str());
    Ok(Json(svc.read(|s| s.list_tasks(filter))))
}

async fn get_task(
    State(svc): State<Arc<Service>>,
    headers: HeaderMap,
    Path(task_id): Path<String>,
) -> ApiResult<TaskView> {
    let (id, role) = caller(&svc, &headers)?;
    let own = (role == Role::Annotator).then_some(id.as_str());
    Ok(Json(svc.read(|s| s.task_view(&task_id, own))?))
}

async fn submit(
    State(svc): State<Arc<Service>>,
    headers: HeaderMap,
    Path((task_id, annotator)): Path<(String, String)>,
    body: Bytes,
) -> ApiResult<SubmissionReceipt> {
    let (id, role) = caller(&svc, &headers)?;
    if role != Role::Annotator || id != annotator {
        return Err(ServiceError::Forbidden(format!("{id} cannot submit for {annotator}")).into());
    }
    let req = decode_submission(&body)?;
    Ok(Json(svc.submit(&task_id, &annotator, &req)?))
}

async fn review(
    State(svc): State<Arc<Service>>,
    headers: HeaderMap,
    Path(task_id): Path<String>,
) -> ApiResult<ReviewItem> {
    reviewer(&svc, &headers)?;
    Ok(Json(svc.read(|s| s.review(&task_id))?))
}

async fn finalize(
    State(svc): State<Arc<Service>>,
    headers: HeaderMap,
    Path(task_id): Path<String>,
    body: Bytes,
) -> ApiResult<FinalizeReceipt> {
    let who = reviewer(&svc, &headers)?;
    let req = decode_finalize(&body)?;
    Ok(Json(svc.finalize(&task_id, &who, &req)?))
}

async fn consistency_list(State(svc): State<Arc<Service>>, headers: HeaderMap) -> ApiResult<ConsistencyQueue> {
    reviewer(&svc, &headers)?;
    Ok(Json(svc.read(|s| s.consistency_queue())?))
}

async fn consistency_decide(
    State(svc): State<Arc<Service>>,
    headers: HeaderMap,
    body: Bytes,
) -> ApiResult<DecisionReceipt> {
    let who = reviewer(&svc, &headers)?;
    let req = decode_decision(&body)?;
    Ok(Json(svc.decide(&who, &req)?))
}

async fn corpus(State(svc): State<Arc<Service>>, headers: HeaderMap) -> Result<Response, ApiError> {
    reviewer(&svc, &headers)?;
    let text = svc.snapshot();
    Ok(([(header::CONTENT_TYPE, "text/plain; charset=utf-8")], text).into_response())
}

pub fn router(service: Arc<Service>) -> Router {
    Router::new()
        .route("/tasks", get(list_tasks))
        .route("/tasks/{id}", get(get_task))
        .route("/tasks/{id}/annotations/{annotator}", put(submit))
        .route("/tasks/{id}/review", get(review))
        .route("/tasks/{id}/finalize", post(finalize))
        .route("/consistency", get(consistency_list).post(consistency_decide))
        .route("/corpus", get(corpus))
        .with_state(service)
}
