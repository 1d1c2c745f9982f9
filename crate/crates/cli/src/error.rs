//! Process-level error type and its exit-code mapping.
//!
//! Exit codes are part of the command contract:
//!
//! - `0` success
//! - `1` runtime failure (IO, malformed files, solver errors)
//! - `2` usage or configuration error (bad flags, out-of-range sizes,
//!   empty sweep grids, unparsable config)
//! - `3` numeric abort during optimization; artifacts produced up to the
//!   failing iteration are preserved on disk

use positivize_core::CoreError;
use std::path::{Path, PathBuf};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("usage error: {0}")]
    Usage(String),
    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{}: {message}", path.display())]
    Format { path: PathBuf, message: String },
    #[error(transparent)]
    Core(#[from] CoreError),
    #[error("optimization aborted: {0}")]
    Numeric(String),
}

pub type Result<T> = std::result::Result<T, CliError>;

impl CliError {
    pub fn usage(msg: impl Into<String>) -> Self {
        CliError::Usage(msg.into())
    }

    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        CliError::Io {
            path: path.into(),
            source,
        }
    }

    pub fn format(path: impl AsRef<Path>, msg: impl Into<String>) -> Self {
        CliError::Format {
            path: path.as_ref().to_path_buf(),
            message: msg.into(),
        }
    }

    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => 2,
            CliError::Core(CoreError::InvalidArgument(_)) => 2,
            CliError::Core(CoreError::SizeLimit(_)) => 2,
            CliError::Numeric(_) => 3,
            _ => 1,
        }
    }
}
