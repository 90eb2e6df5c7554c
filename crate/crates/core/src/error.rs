use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    /// Invalid configuration or grid (resolution guard, grid mismatch, bad parameters).
    #[error("configuration error: {0}")]
    Config(String),

    /// A query outside the domain of an operation.
    #[error("domain error: {0}")]
    Domain(String),

    /// Pulse windows overlap or the rephasing condition is violated.
    #[error("schedule error: {0}")]
    Schedule(String),

    /// The propagation march became unstable or a consistency check failed.
    #[error("numerical failure: {0}")]
    Numerical(String),

    #[error("parse error in {path} at line {line}: {message}")]
    Parse {
        path: PathBuf,
        line: usize,
        message: String,
    },

    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// Process exit code used by the command-line front end.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Numerical(_) => 2,
            _ => 1,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
