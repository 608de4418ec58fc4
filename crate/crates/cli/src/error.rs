use std::path::PathBuf;

use agnostic_control::Error as CoreError;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error(transparent)]
    Core(#[from] CoreError),

    #[error("{0}")]
    Usage(String),

    #[error("cannot write {path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },

    #[error("{failed} of {total} grid points failed (more than 10%)")]
    TooManyFailures { failed: usize, total: usize },
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => 2,
            CliError::Io { .. } => 1,
            CliError::TooManyFailures { .. } => 4,
            CliError::Core(e) => match e {
                CoreError::Domain(_) | CoreError::Singularity(_) | CoreError::InvalidConfig(_) => 2,
                CoreError::BudgetExceeded { .. } => 3,
                CoreError::Quadrature { .. }
                | CoreError::NoRoot { .. }
                | CoreError::NonConvergence { .. }
                | CoreError::Certification(_)
                | CoreError::NonFinite { .. } => 4,
            },
        }
    }
}

pub type CliResult<T> = Result<T, CliError>;

pub fn io_err(path: impl Into<PathBuf>) -> impl FnOnce(std::io::Error) -> CliError {
    let path = path.into();
    move |source| CliError::Io { path, source }
}
