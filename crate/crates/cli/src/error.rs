use std::path::PathBuf;
use std::process::ExitCode;

use harvest_core::Error as CoreError;

/// Failure classes of the `harvest` binary, each with its own exit status.
#[derive(Debug, thiserror::Error)]
pub enum CliError {
    /// Unreadable or inconsistent configuration.
    #[error("configuration error: {0}")]
    Config(String),
    /// One or more validation checks failed.
    #[error("validation failed: {0}")]
    Validation(String),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    /// A required input (observation file, path start value) is absent.
    #[error("missing input: {0}")]
    MissingInput(String),
    /// The scheme produced a non-finite value.
    #[error("numerical failure: {0}")]
    Numerical(String),
}

impl CliError {
    pub fn exit_code(&self) -> ExitCode {
        ExitCode::from(match self {
            CliError::Config(_) => 2,
            CliError::Validation(_) => 3,
            CliError::Io { .. } => 4,
            CliError::MissingInput(_) => 5,
            CliError::Numerical(_) => 6,
        })
    }

    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        CliError::Io {
            path: path.into(),
            source,
        }
    }
}

impl From<CoreError> for CliError {
    fn from(e: CoreError) -> Self {
        match e {
            CoreError::Cfl { .. } => CliError::Validation(e.to_string()),
            CoreError::NonFinite { .. } => CliError::Numerical(e.to_string()),
            CoreError::Input(_) | CoreError::Parameter(_) | CoreError::NoFeasibleCandidate => {
                CliError::Config(e.to_string())
            }
        }
    }
}

pub type Result<T, E = CliError> = std::result::Result<T, E>;
