use std::io;
use std::path::PathBuf;

use leaklab_core::LeakError;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{}: {source}", path.display())]
    Io { path: PathBuf, source: io::Error },

    /// Bad input: scenario files, overrides, axis specs, environment.
    #[error("{0}")]
    Invalid(String),

    #[error(transparent)]
    Core(#[from] LeakError),
}

impl CliError {
    pub fn io(path: impl Into<PathBuf>, source: io::Error) -> Self {
        Self::Io {
            path: path.into(),
            source,
        }
    }

    /// 2 for rejected input, 1 for everything else.
    pub fn exit_code(&self) -> u8 {
        match self {
            Self::Invalid(_) => 2,
            Self::Core(LeakError::InvalidConfig { .. } | LeakError::UnknownStrategy { .. }) => 2,
            Self::Core(LeakError::InvalidParameter { .. }) => 2,
            _ => 1,
        }
    }
}

pub type Result<T, E = CliError> = std::result::Result<T, E>;
