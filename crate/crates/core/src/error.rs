use thiserror::Error;

/// Errors produced by constructions, verifiers and loaders.
#[derive(Debug, Error)]
pub enum HwdError {
    #[error("line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error("graph is disconnected: vertices {a} and {b} lie in different components")]
    Disconnected { a: usize, b: usize },
    #[error("invalid parameter: {0}")]
    Param(String),
    #[error("precondition violated: {0}")]
    Precondition(String),
    #[error("invariant violated: {0}")]
    Invariant(String),
    #[error("internal error: {0}")]
    Internal(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type HwdResult<T> = Result<T, HwdError>;

impl HwdError {
    pub fn param(msg: impl Into<String>) -> Self {
        HwdError::Param(msg.into())
    }
    pub fn invariant(msg: impl Into<String>) -> Self {
        HwdError::Invariant(msg.into())
    }
    pub fn pre(msg: impl Into<String>) -> Self {
        HwdError::Precondition(msg.into())
    }
    pub fn internal(msg: impl Into<String>) -> Self {
        HwdError::Internal(msg.into())
    }
}
