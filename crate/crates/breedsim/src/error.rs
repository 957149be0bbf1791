use std::fmt;
use std::path::PathBuf;

/// Process exit codes.
pub mod exit {
    pub const OK: i32 = 0;
    pub const INPUT: i32 = 2;
    pub const NUMERICAL: i32 = 3;
    pub const INTERNAL: i32 = 4;
}

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{path}: {message}")]
    Config { path: PathBuf, message: String },

    #[error("invalid input: {0}")]
    Input(String),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{path}: {message}")]
    Format { path: PathBuf, message: String },

    #[error("numerical failure: {0}")]
    Numerical(breedsim_core::Error),

    #[error("internal error: {0}")]
    Internal(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config { .. } | CliError::Input(_) | CliError::Format { .. } => exit::INPUT,
            CliError::Io { .. } => exit::INPUT,
            CliError::Numerical(_) => exit::NUMERICAL,
            CliError::Internal(_) => exit::INTERNAL,
        }
    }

    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        CliError::Io {
            path: path.into(),
            source,
        }
    }

    pub fn format(path: impl Into<PathBuf>, message: impl fmt::Display) -> Self {
        CliError::Format {
            path: path.into(),
            message: message.to_string(),
        }
    }
}

/// Domain and shape problems are the caller's fault; anything that fails
/// while computing on valid input is numerical.
impl From<breedsim_core::Error> for CliError {
    fn from(e: breedsim_core::Error) -> Self {
        use breedsim_core::Error as E;
        match e {
            E::Domain { .. } | E::CutoffMismatch { .. } | E::Dimension { .. } | E::EmptyDataset => {
                CliError::Input(e.to_string())
            }
            E::Truncation { .. }
            | E::NotPhysical(_)
            | E::HeraldImpossible { .. }
            | E::UnderDetermined { .. }
            | E::BootstrapFailures { .. } => CliError::Numerical(e),
        }
    }
}

pub type CliResult<T> = Result<T, CliError>;
