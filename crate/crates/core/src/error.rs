use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("configuration error: {0}")]
    Config(String),
    #[error("validation failed: {0}")]
    Validation(String),
    #[error("consistency error: {0}")]
    Consistency(String),
    #[error("parse failure: {0}")]
    Parse(String),
    #[error("transport exhausted after {attempts} attempt(s): {last_error}")]
    TransportExhausted { attempts: u32, last_error: String },
    #[error("training error: {0}")]
    Training(String),
    #[error("model schema mismatch: {0}")]
    Schema(String),
    #[error("regression error: {0}")]
    Regression(String),
    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),
}

impl Error {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// Errors that are the caller's fault (bad config, bad arguments) as
    /// opposed to failures while running a stage.
    pub fn is_validation(&self) -> bool {
        matches!(self, Error::Config(_) | Error::Validation(_))
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
