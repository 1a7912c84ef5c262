use thiserror::Error;

/// Errors raised by the engine. Each variant names the stage that failed.
#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("validation failed ({invariant}): {detail}")]
    Validation {
        invariant: &'static str,
        detail: String,
    },

    #[error("parse error at {location}: {detail}")]
    Parse { location: String, detail: String },

    #[error("linear program solver failed: {0}")]
    LinearProgram(String),

    #[error(
        "numeric conjugate did not converge after {iterations} iterations (best bound {best})"
    )]
    Indeterminate { iterations: usize, best: f64 },

    #[error("unsupported operation: {0}")]
    Unsupported(String),

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("io: {0}")]
    Io(#[from] std::io::Error),
}

impl Error {
    pub(crate) fn validation(invariant: &'static str, detail: impl Into<String>) -> Self {
        Error::Validation {
            invariant,
            detail: detail.into(),
        }
    }

    pub(crate) fn dimension(detail: impl Into<String>) -> Self {
        Error::Dimension(detail.into())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
