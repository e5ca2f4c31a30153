use axum::http::StatusCode;
use axum::response::{IntoResponse, Response};
use axum::Json;
use embalign_core::dataset::Issue;
use serde_json::json;

/// An error response: a status code and a JSON body `{"error": ...}`,
/// plus the blocking issues when validation failed.
#[derive(Debug)]
pub struct ApiError {
    pub status: StatusCode,
    pub message: String,
    pub issues: Vec<Issue>,
}

impl ApiError {
    pub fn new(status: StatusCode, message: impl Into<String>) -> Self {
        Self { status, message: message.into(), issues: Vec::new() }
    }

    pub fn not_found(message: impl Into<String>) -> Self {
        Self::new(StatusCode::NOT_FOUND, message)
    }

    pub fn unprocessable(message: impl Into<String>) -> Self {
        Self::new(StatusCode::UNPROCESSABLE_ENTITY, message)
    }

    pub fn internal(message: impl Into<String>) -> Self {
        Self::new(StatusCode::INTERNAL_SERVER_ERROR, message)
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        let body = if self.issues.is_empty() {
            json!({ "error": self.message })
        } else {
            json!({ "error": self.message, "issues": self.issues })
        };
        (self.status, Json(body)).into_response()
    }
}
