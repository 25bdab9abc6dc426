use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("validation error: {0}")]
    Validation(String),

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("buffer is empty")]
    EmptyBuffer,

    #[error("unknown context `{0}`")]
    UnknownContext(String),

    #[error("bug kind {kind} does not apply to this program: {reason}")]
    InapplicableMutation { kind: String, reason: String },

    #[error("unsupported checkpoint: {0}")]
    Checkpoint(String),

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn validation(msg: impl Into<String>) -> Error {
    Error::Validation(msg.into())
}
