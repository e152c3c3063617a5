use thiserror::Error;

/// Errors raised by scoring, fitting and benchmark routines.
#[derive(Debug, Error)]
pub enum ScoreError {
    #[error("domain error: {0}")]
    Domain(String),

    #[error("invalid forecast: {0}")]
    InvalidForecast(String),

    #[error("numeric error: {0}")]
    Numeric(String),

    #[error("parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),

    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),
}

pub type Result<T> = std::result::Result<T, ScoreError>;

pub(crate) fn domain<T>(msg: impl Into<String>) -> Result<T> {
    Err(ScoreError::Domain(msg.into()))
}
