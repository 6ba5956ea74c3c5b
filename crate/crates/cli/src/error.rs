use std::io;
use std::path::PathBuf;

/// Failure of a command, grouped by the process exit code it maps to.
#[derive(Debug, thiserror::Error)]
pub enum CliError {
    /// Malformed invocation: unknown option or config key, missing argument.
    #[error("usage: {0}")]
    Usage(String),
    /// Inputs parsed but violate an invariant (config values, data files,
    /// task/checkpoint mismatch).
    #[error("{0}")]
    Validation(String),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: io::Error,
    },
    /// A numerical check failed or training diverged.
    #[error("numerical check failed: {0}")]
    Numerical(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => 1,
            CliError::Validation(_) | CliError::Io { .. } => 2,
            CliError::Numerical(_) => 3,
        }
    }

    pub fn io(path: impl Into<PathBuf>, source: io::Error) -> Self {
        CliError::Io {
            path: path.into(),
            source,
        }
    }
}

impl From<dsbn_core::Error> for CliError {
    fn from(e: dsbn_core::Error) -> Self {
        match e {
            dsbn_core::Error::Diverged(_) => CliError::Numerical(e.to_string()),
            other => CliError::Validation(other.to_string()),
        }
    }
}

pub type CliResult<T> = Result<T, CliError>;
