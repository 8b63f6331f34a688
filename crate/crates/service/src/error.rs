use axum::http::StatusCode;
use axum::response::{IntoResponse, Response};
use axum::Json;
use orthomodel_core::annotations::{AnnotationError, DocumentError};
use orthomodel_core::pipeline::PipelineError;
use serde_json::json;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ServiceError {
    #[error("unknown session {0}")]
    UnknownSession(u64),
    #[error("{0}")]
    Invalid(String),
    #[error("stale revision {expected}, session is at {current}")]
    Stale { expected: u64, current: u64 },
    #[error("{0}")]
    Internal(String),
}

impl ServiceError {
    pub fn status(&self) -> StatusCode {
        match self {
            Self::UnknownSession(_) => StatusCode::GONE,
            Self::Invalid(_) => StatusCode::BAD_REQUEST,
            Self::Stale { .. } => StatusCode::CONFLICT,
            Self::Internal(_) => StatusCode::INTERNAL_SERVER_ERROR,
        }
    }

    fn kind(&self) -> &'static str {
        match self {
            Self::UnknownSession(_) => "unknown_session",
            Self::Invalid(_) => "invalid",
            Self::Stale { .. } => "stale_revision",
            Self::Internal(_) => "internal",
        }
    }
}

impl From<AnnotationError> for ServiceError {
    fn from(e: AnnotationError) -> Self {
        Self::Invalid(e.to_string())
    }
}

impl From<DocumentError> for ServiceError {
    fn from(e: DocumentError) -> Self {
        Self::Invalid(e.to_string())
    }
}

impl From<PipelineError> for ServiceError {
    fn from(e: PipelineError) -> Self {
        Self::Invalid(e.to_string())
    }
}

impl IntoResponse for ServiceError {
    fn into_response(self) -> Response {
        let body = json!({ "error": { "kind": self.kind(), "message": self.to_string() } });
        (self.status(), Json(body)).into_response()
    }
}
