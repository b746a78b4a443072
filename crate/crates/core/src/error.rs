//! Error type shared by all modules.

use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    /// Malformed GraphML or otherwise unreadable topology document.
    #[error("parse error: {0}")]
    Parse(String),

    /// A node lacks usable coordinates.
    #[error("geo error: node `{node}`: {reason}")]
    Geo { node: String, reason: String },

    /// The graph is not connected, or a node cannot be reached.
    #[error("connectivity error: {0}")]
    Connectivity(String),

    /// Invalid scenario configuration; `key` names the offending entry.
    #[error("config error: `{key}`: {reason}")]
    Config { key: String, reason: String },

    /// The placement search space exceeds the configured cap.
    #[error(
        "capacity error: search space of {size} placements exceeds the cap of {cap}; \
         use smaller candidate sets or instance limits"
    )]
    Capacity { size: u128, cap: u64 },

    /// Input for which a quantity is undefined (e.g. zero requests).
    #[error("degenerate input: {0}")]
    Degenerate(String),

    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub(crate) fn config(key: impl Into<String>, reason: impl Into<String>) -> Self {
        Error::Config {
            key: key.into(),
            reason: reason.into(),
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
