use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("edge {index} ({u}, {v}): {reason}")]
    InvalidEdge {
        index: usize,
        u: usize,
        v: usize,
        reason: &'static str,
    },

    #[error("invalid input: {0}")]
    Validation(String),

    #[error("complex too large for brute-force oracle: {size} exceeds bound {limit}")]
    ComplexityGuard { size: usize, limit: usize },

    #[error("oracle inconsistency: {0}")]
    OracleInconsistency(String),

    #[error("{path}:{line}: {message}")]
    Parse {
        path: String,
        line: usize,
        message: String,
    },

    #[error("{pointer}: {message}")]
    Schema { pointer: String, message: String },

    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn validation(msg: impl Into<String>) -> Self {
        Error::Validation(msg.into())
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
