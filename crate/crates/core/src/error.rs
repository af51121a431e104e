use std::io;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    /// A zero-sized or otherwise unusable spatial extent.
    #[error("invalid dimension: {0}")]
    InvalidDimension(String),

    /// Input tensors whose shapes do not agree.
    #[error("shape mismatch: expected {expected}, got {actual}")]
    ShapeMismatch { expected: String, actual: String },

    /// A parameter outside its documented range.
    #[error("invalid argument: {0}")]
    Argument(String),

    /// Malformed SBT1 / SBM1 payload.
    #[error("format error at byte {offset}: {message}")]
    Format { offset: u64, message: String },

    /// The model does not fulfil a requirement of the caller (e.g. no logits).
    #[error("model contract violated: {0}")]
    Contract(String),

    /// Weighted least-squares system could not be factorized.
    #[error("singular surrogate system: {0}")]
    Singular(String),

    /// Correlation of a zero-variance input.
    #[error("correlation undefined for zero-variance input")]
    UndefinedCorrelation,

    #[error(transparent)]
    Io(#[from] io::Error),
}

impl Error {
    pub(crate) fn arg(msg: impl Into<String>) -> Self {
        Error::Argument(msg.into())
    }

    pub(crate) fn format(offset: u64, msg: impl Into<String>) -> Self {
        Error::Format { offset, message: msg.into() }
    }
}
