use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    /// Inputs disagree with each other or with a documented parameter range.
    #[error("configuration error: {0}")]
    Config(String),

    /// A point or transform cannot be used for the requested projection.
    #[error("invalid geometry: {0}")]
    InvalidGeometry(String),

    /// The estimation problem is degenerate (too few or collinear points).
    #[error("estimation error: {0}")]
    Estimation(String),

    #[error("integrity error in {}: {reason}", path.display())]
    Integrity { path: PathBuf, reason: String },

    #[error("unsupported dataset format version {found} (expected {expected})")]
    Migration { found: u32, expected: u32 },

    #[error("I/O error on {}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub(crate) fn config(msg: impl Into<String>) -> Self {
        Error::Config(msg.into())
    }

    pub(crate) fn integrity(path: impl Into<PathBuf>, reason: impl ToString) -> Self {
        Error::Integrity {
            path: path.into(),
            reason: reason.to_string(),
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// True for failures caused by the data on disk rather than by parameters.
    pub fn is_data_integrity(&self) -> bool {
        matches!(
            self,
            Error::Integrity { .. } | Error::Migration { .. } | Error::Io { .. }
        )
    }
}
