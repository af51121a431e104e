use std::io;
use std::path::{Path, PathBuf};

use thiserror::Error;

pub type Result<T> = std::result::Result<T, BenchError>;

#[derive(Debug, Error)]
pub enum BenchError {
    /// Invalid or inconsistent run configuration; `field` is a JSON path.
    #[error("config error at {field}: {message}")]
    Config { field: String, message: String },

    /// An explainer, metric or model failed while running.
    #[error(transparent)]
    Core(#[from] saliency_core::Error),

    #[error("i/o error on {path}: {source}")]
    Io { path: PathBuf, source: io::Error },

    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),

    #[error("png error: {0}")]
    Png(#[from] png::EncodingError),

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

impl BenchError {
    pub fn config(field: impl Into<String>, message: impl Into<String>) -> Self {
        BenchError::Config {
            field: field.into(),
            message: message.into(),
        }
    }

    pub fn io(path: &Path, source: io::Error) -> Self {
        BenchError::Io {
            path: path.to_path_buf(),
            source,
        }
    }

    /// 2 for configuration problems, 3 for everything that fails at run time.
    pub fn exit_code(&self) -> i32 {
        match self {
            BenchError::Config { .. } => 2,
            _ => 3,
        }
    }
}
