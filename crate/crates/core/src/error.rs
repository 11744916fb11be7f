use std::path::PathBuf;

use thiserror::Error;

/// Errors produced by the field generator, the solvers and the harnesses.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    /// A conductivity sample that is zero, negative or not finite.
    #[error("invalid coefficient {value} at {location}")]
    InvalidCoefficient { location: String, value: f64 },

    #[error("singular matrix: {0}")]
    Singular(String),

    /// Iterative solve stopped before reaching the requested tolerance.
    #[error("no convergence after {iterations} iterations (relative residual {residual:.3e})")]
    NotConverged {
        iterations: usize,
        residual: f64,
        history: Vec<f64>,
    },

    #[error("GRW configuration error: {0}")]
    GrwConfig(String),

    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidArgument(msg.into())
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
