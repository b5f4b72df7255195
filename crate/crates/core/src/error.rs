use std::path::PathBuf;

use thiserror::Error;

use crate::solver::SolveReport;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("invalid mesh: {0}")]
    InvalidMesh(String),

    #[error("{path}:{line}: {message}")]
    Parse {
        path: PathBuf,
        line: usize,
        message: String,
    },

    #[error("unsupported: {0}")]
    Capability(String),

    /// A local block could not be factorized.
    #[error("singular local system on element {element}: {what}")]
    Singular { element: usize, what: &'static str },

    #[error("linear solver failure: {0}")]
    Solver(String),

    #[error("Newton iteration did not converge after {} iterations (last relative residual {:.3e})", .report.iterations, .report.final_residual())]
    Diverged { report: Box<SolveReport> },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidArgument(msg.into())
    }
}
