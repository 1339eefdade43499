use thiserror::Error;

use epac_core::Error as CoreError;

/// Failure classes, each with its own exit code.
#[derive(Debug, Error)]
pub enum CliError {
    #[error("config error: {0}")]
    Config(String),

    #[error("numerical failure: {0}")]
    Numerical(String),

    #[error("check failed: {0}")]
    Check(String),

    #[error("{context}: {source}")]
    Io { context: String, source: CoreError },
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => 2,
            CliError::Numerical(_) => 3,
            CliError::Check(_) => 4,
            CliError::Io { .. } => 1,
        }
    }

    /// Read/write failure on a named file.
    pub fn io(path: &std::path::Path) -> impl FnOnce(CoreError) -> CliError + '_ {
        move |source| CliError::Io {
            context: path.display().to_string(),
            source,
        }
    }
}

impl From<CoreError> for CliError {
    fn from(e: CoreError) -> Self {
        match e {
            CoreError::InvalidPotential(_) | CoreError::UnknownStrategy { .. } => {
                CliError::Config(e.to_string())
            }
            CoreError::Io(_) | CoreError::Csv(_) | CoreError::Json(_) => CliError::Io {
                context: "i/o".into(),
                source: e,
            },
            _ => CliError::Numerical(e.to_string()),
        }
    }
}
