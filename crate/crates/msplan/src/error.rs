use std::path::PathBuf;

use thiserror::Error;

/// Errors produced anywhere in the planning stack.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    /// Query point lies outside the gridded distance field extent.
    #[error("point ({x}, {y}) is outside the distance field extent")]
    OutOfBounds { x: f64, y: f64 },

    /// A local solve failed (singular normal equations after damping
    /// escalation, indefinite marginalization block, ...). Carries the
    /// state index the failure occurred at.
    #[error("numerical failure at node {node}: {reason}")]
    Numerical { node: usize, reason: String },

    /// Factor graph violates the adjacent-binary-factor chain structure.
    #[error("factor graph structure violation: {0}")]
    Structure(String),

    /// Scenario file failed to parse or validate.
    #[error("scenario error: {0}")]
    Scenario(String),

    #[error("io error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidArgument(msg.into())
    }

    pub fn scenario(msg: impl Into<String>) -> Self {
        Error::Scenario(msg.into())
    }

    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io { path: path.into(), source }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
