use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    /// Input violates a type invariant or an operation precondition.
    #[error("validation error: {0}")]
    Validation(String),

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    /// An iterative solver hit its iteration cap. `lower`/`upper` bracket
    /// the quantity being computed as well as the solver can tell.
    #[error("no convergence after {iterations} iterations (last bracket [{lower}, {upper}])")]
    NonConvergence {
        iterations: usize,
        lower: f64,
        upper: f64,
    },

    /// An exact enumeration was asked for beyond its size cap.
    #[error("{what} = {got} exceeds the cap of {cap}; {hint}")]
    CapExceeded {
        what: &'static str,
        got: usize,
        cap: usize,
        hint: &'static str,
    },

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("parse error: {0}")]
    Parse(String),
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

    /// Process exit code used by the command-line front end.
    pub fn exit_code(&self) -> u8 {
        match self {
            Error::NonConvergence { .. } => 3,
            _ => 2,
        }
    }
}
