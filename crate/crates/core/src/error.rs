use std::path::PathBuf;

use thiserror::Error;

/// Errors raised across the toolkit.
#[derive(Debug, Error)]
pub enum Error {
    /// A precondition on an input was violated (dimension mismatch, value
    /// out of range, unknown kind, ...).
    #[error("contract violation: {0}")]
    Contract(String),

    /// A matrix that must be inverted is singular or too badly conditioned.
    #[error("numerically singular {what} (condition number {cond:.3e})")]
    Singular { what: &'static str, cond: f64 },

    /// A filtered state no longer decodes to a valid box.
    #[error("degenerate state: {0}")]
    Degenerate(String),

    /// RANSAC could not find a model with enough support.
    #[error("affine estimation failed: {0}")]
    Estimation(String),

    /// A metric has no data to be computed on.
    #[error("undefined metric: {0}")]
    UndefinedMetric(&'static str),

    #[error("{path}:{line}: {msg}")]
    Parse {
        path: PathBuf,
        line: usize,
        msg: String,
    },

    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub(crate) fn contract(msg: impl Into<String>) -> Self {
        Error::Contract(msg.into())
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// Process exit code for the CLI: 2 for I/O and parse failures, 1 otherwise.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Io { .. } | Error::Parse { .. } => 2,
            _ => 1,
        }
    }
}
