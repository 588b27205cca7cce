use std::path::PathBuf;

use thiserror::Error;

/// Failures of a CLI run, each with its own exit status.
#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),

    #[error("{0}")]
    Validation(String),

    #[error("{0}")]
    Numeric(String),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl CliError {
    pub const USAGE: i32 = 2;
    pub const VALIDATION: i32 = 3;
    pub const NUMERIC: i32 = 4;
    pub const IO: i32 = 5;

    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => Self::USAGE,
            CliError::Validation(_) => Self::VALIDATION,
            CliError::Numeric(_) => Self::NUMERIC,
            CliError::Io { .. } => Self::IO,
        }
    }

    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        CliError::Io {
            path: path.into(),
            source,
        }
    }
}

impl From<nlswave::Error> for CliError {
    fn from(e: nlswave::Error) -> Self {
        use nlswave::Error as E;
        let msg = e.to_string();
        match e {
            E::Usage(_) => CliError::Usage(msg),
            E::InvalidParameter(_) | E::Validation(_) | E::Domain { .. } => CliError::Validation(msg),
            E::Singular(_) | E::Jacobian { .. } => CliError::Numeric(msg),
        }
    }
}

impl From<clap::Error> for CliError {
    fn from(e: clap::Error) -> Self {
        CliError::Usage(e.to_string())
    }
}

pub type CliResult<T> = Result<T, CliError>;
