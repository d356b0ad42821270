//! The error body every 4xx and 5xx response carries.

use axum::http::StatusCode;
use axum::response::{IntoResponse, Response};
use axum::Json;
use serde::{Deserialize, Serialize};

use rmech_core::chemgraph::SmilesError;
use rmech_core::pathway::PathwayError;
use rmech_core::predictor::PredictError;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ApiError {
    #[serde(skip)]
    pub status: StatusCode,
    /// Stable machine-readable code.
    pub code: String,
    pub message: String,
    /// Request field at fault, when one is.
    pub field: Option<String>,
    /// Character offset of a SMILES parse error.
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub position: Option<usize>,
}

impl ApiError {
    pub fn new(status: StatusCode, code: &str, message: impl Into<String>) -> Self {
        ApiError { status, code: code.into(), message: message.into(), field: None, position: None }
    }

    pub fn with_field(mut self, field: impl Into<String>) -> Self {
        self.field = Some(field.into());
        self
    }

    pub fn validation(field: impl Into<String>, message: impl Into<String>) -> Self {
        ApiError::new(StatusCode::BAD_REQUEST, "validation", message).with_field(field)
    }

    pub fn parse(field: impl Into<String>, smiles: &str, e: &SmilesError) -> Self {
        let mut err = ApiError::new(StatusCode::BAD_REQUEST, "parse_error", format!("`{smiles}`: {e}")).with_field(field);
        err.position = Some(e.position);
        err
    }

    pub fn node_budget(message: impl Into<String>) -> Self {
        ApiError::new(StatusCode::TOO_MANY_REQUESTS, "node_budget", message)
    }

    pub fn internal(message: impl Into<String>) -> Self {
        ApiError::new(StatusCode::INTERNAL_SERVER_ERROR, "internal", message)
    }
}

impl std::fmt::Display for ApiError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{} {}: {}", self.status.as_u16(), self.code, self.message)
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        (self.status, Json(self)).into_response()
    }
}

impl From<PredictError> for ApiError {
    fn from(e: PredictError) -> Self {
        match e {
            PredictError::InvalidOption { field, message } => ApiError::validation(field, message),
            PredictError::UnknownPipeline(name) => ApiError::validation("pipeline", format!("unknown pipeline `{name}`")),
            other => ApiError::internal(other.to_string()),
        }
    }
}

impl From<PathwayError> for ApiError {
    fn from(e: PathwayError) -> Self {
        match e {
            PathwayError::Config { field, message } => ApiError::validation(field, message),
            PathwayError::Smiles { smiles, source } => ApiError::parse("reactants", &smiles, &source),
            PathwayError::UnknownNode(id) => {
                ApiError::new(StatusCode::NOT_FOUND, "unknown_node", format!("no node {id}")).with_field("node")
            }
            e @ PathwayError::BeyondDepth { .. } => {
                ApiError::new(StatusCode::BAD_REQUEST, "beyond_depth", e.to_string()).with_field("node")
            }
            e @ PathwayError::Budget(_) => ApiError::node_budget(e.to_string()),
            PathwayError::Predict(p) => p.into(),
            other => ApiError::internal(other.to_string()),
        }
    }
}
