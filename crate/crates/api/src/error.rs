use axum::http::StatusCode;
use axum::response::{IntoResponse, Response};
use mtcat_core::catalog::{Issue, LanguageError};
use mtcat_core::query::QueryError;
use mtcat_core::store::StoreError;
use mtcat_core::workflows::WorkflowError;
use serde::{Deserialize, Serialize};

use crate::json_response;

/// Every 4xx/5xx body has this shape.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ApiError {
    pub http_status: u16,
    pub code: String,
    pub message: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub details: Option<Vec<Issue>>,
}

impl ApiError {
    pub fn new(status: StatusCode, code: &str, message: impl Into<String>) -> Self {
        ApiError { http_status: status.as_u16(), code: code.to_string(), message: message.into(), details: None }
    }

    pub fn with_details(mut self, details: Vec<Issue>) -> Self {
        self.details = Some(details);
        self
    }

    pub fn status(&self) -> StatusCode {
        StatusCode::from_u16(self.http_status).unwrap_or(StatusCode::INTERNAL_SERVER_ERROR)
    }

    pub fn malformed_body(err: impl std::fmt::Display) -> Self {
        ApiError::new(StatusCode::BAD_REQUEST, "MalformedBody", err.to_string())
    }

    pub fn invalid_query(message: impl Into<String>) -> Self {
        ApiError::new(StatusCode::BAD_REQUEST, "InvalidQuery", message)
    }

    pub fn not_found(message: impl Into<String>) -> Self {
        ApiError::new(StatusCode::NOT_FOUND, "NotFound", message)
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        if self.status().is_server_error() {
            log::error!("{}: {}", self.code, self.message);
        }
        json_response(self.status(), &self)
    }
}

impl From<LanguageError> for ApiError {
    fn from(e: LanguageError) -> Self {
        let status = match e {
            LanguageError::NotIso6393Shape(_) => StatusCode::BAD_REQUEST,
            LanguageError::UnknownLanguage(_) => StatusCode::NOT_FOUND,
        };
        ApiError::new(status, e.code(), e.to_string())
    }
}

impl From<QueryError> for ApiError {
    fn from(e: QueryError) -> Self {
        ApiError::new(StatusCode::BAD_REQUEST, e.code(), e.to_string())
    }
}

impl From<StoreError> for ApiError {
    fn from(e: StoreError) -> Self {
        let status = match &e {
            StoreError::VersionConflict { .. } | StoreError::LeaseHeld(_) | StoreError::KindMismatch { .. } => {
                StatusCode::CONFLICT
            }
            StoreError::ValidationFailed { .. } | StoreError::SnapshotInvalid(_) => StatusCode::UNPROCESSABLE_ENTITY,
            StoreError::NotFound(_) => StatusCode::NOT_FOUND,
            StoreError::ReadOnly => StatusCode::SERVICE_UNAVAILABLE,
            _ => StatusCode::INTERNAL_SERVER_ERROR,
        };
        let api = ApiError::new(status, e.code(), e.to_string());
        match e {
            StoreError::ValidationFailed { report, .. } => api.with_details(report.into_issues()),
            _ => api,
        }
    }
}

impl From<WorkflowError> for ApiError {
    fn from(e: WorkflowError) -> Self {
        let e = match e {
            WorkflowError::Store(inner) => return ApiError::from(inner),
            other => other,
        };
        let status = match &e {
            WorkflowError::ValidationFailed(_) => StatusCode::UNPROCESSABLE_ENTITY,
            WorkflowError::NotFound(_) | WorkflowError::UnknownToken => StatusCode::NOT_FOUND,
            WorkflowError::TokenExpired | WorkflowError::TokenAlreadyUsed => StatusCode::GONE,
            WorkflowError::IllegalTransition { .. }
            | WorkflowError::DuplicateRecommendation(_)
            | WorkflowError::ExactDuplicate(_)
            | WorkflowError::NoMergeTarget => StatusCode::CONFLICT,
            WorkflowError::Store(_) => StatusCode::INTERNAL_SERVER_ERROR,
        };
        let api = ApiError::new(status, e.code(), e.to_string());
        match e {
            WorkflowError::ValidationFailed(report) => api.with_details(report.into_issues()),
            _ => api,
        }
    }
}
