use std::io;
use std::path::PathBuf;

use redundancy_core::Error as CoreError;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    /// Bad input: config keys, flags, parameter combinations.
    #[error("{0}")]
    Validation(String),

    /// A run started but could not complete.
    #[error("{0}")]
    Runtime(String),

    #[error("{path}: {source}")]
    Io { path: PathBuf, source: io::Error },

    #[error("self-test: {failed} of {total} checks failed")]
    SelftestFailed { failed: usize, total: usize },
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Validation(_) => 1,
            CliError::Runtime(_) | CliError::Io { .. } => 2,
            CliError::SelftestFailed { .. } => 3,
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>) -> impl FnOnce(io::Error) -> CliError {
        let path = path.into();
        move |source| CliError::Io { path, source }
    }
}

impl From<CoreError> for CliError {
    fn from(e: CoreError) -> Self {
        match e {
            CoreError::InvalidParameter { .. }
            | CoreError::Domain { .. }
            | CoreError::UndefinedForSingleCopy
            | CoreError::Unstable { .. }
            | CoreError::TooManyCopies { .. }
            | CoreError::InvalidWindow { .. } => CliError::Validation(e.to_string()),
            CoreError::Integration { .. }
            | CoreError::InvalidCurve(_)
            | CoreError::TooFewSamples { .. }
            | CoreError::EventOverflow { .. }
            | CoreError::Codec(_)
            | CoreError::Unrecoverable { .. } => CliError::Runtime(e.to_string()),
        }
    }
}

pub type Result<T, E = CliError> = std::result::Result<T, E>;
