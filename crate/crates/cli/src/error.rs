use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("configuration error: {0}")]
    Config(String),

    #[error("missing required key `{0}`")]
    Missing(&'static str),

    #[error("value out of range: {0}")]
    Range(String),

    #[error("numerical failure: {0}")]
    Numeric(rbm_core::Error),

    #[error("i/o error at {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{failed} of {total} checks failed")]
    VerifyFailed { failed: usize, total: usize },
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::VerifyFailed { .. } => 1,
            CliError::Config(_) => 2,
            CliError::Numeric(_) => 3,
            CliError::Io { .. } => 4,
            CliError::Range(_) => 5,
            CliError::Missing(_) => 6,
        }
    }

    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        CliError::Io {
            path: path.into(),
            source,
        }
    }
}

impl From<rbm_core::Error> for CliError {
    fn from(e: rbm_core::Error) -> Self {
        use rbm_core::Error as E;
        match e {
            E::InvalidParameter { .. }
            | E::TruncationTooSmall { .. }
            | E::EnumerationCap { .. }
            | E::OutOfRange { .. }
            | E::GenusTooLarge { .. }
            | E::InsufficientDegree { .. } => CliError::Range(e.to_string()),
            other => CliError::Numeric(other),
        }
    }
}

pub type CliResult<T> = std::result::Result<T, CliError>;
