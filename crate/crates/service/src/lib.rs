//! HTTP API and operator CLI over the mechanism predictor.

pub mod api;
pub mod cli;
pub mod config;
pub mod error;
pub mod session;

pub use api::{router, AppState};
pub use error::ApiError;
