use std::path::PathBuf;

use thiserror::Error;

/// Errors produced by the simulator.
#[derive(Debug, Error)]
pub enum GcoreError {
    /// An argument lies outside the domain of the operation.
    #[error("domain error: {0}")]
    Domain(String),

    /// A session could not be configured.
    #[error("config error: {0}")]
    Config(String),

    /// The transmitted streams or check data are inconsistent.
    #[error("protocol error: {0}")]
    Protocol(String),

    #[error("i/o error on {}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("serialization error: {0}")]
    Serde(String),
}

pub type Result<T> = std::result::Result<T, GcoreError>;

pub(crate) fn domain<T>(msg: impl Into<String>) -> Result<T> {
    Err(GcoreError::Domain(msg.into()))
}
