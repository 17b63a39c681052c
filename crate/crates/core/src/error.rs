use std::path::PathBuf;

use thiserror::Error;

/// Errors raised anywhere in the offline/online pipeline.
#[derive(Debug, Error)]
pub enum RbError {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    /// A dense solve hit a pivot that is zero to working precision.
    #[error("singular system: pivot magnitude {pivot:e}")]
    Singular { pivot: f64 },

    #[error("invalid gram matrix: {0}")]
    InvalidGram(String),

    /// The snapshot adds no stable direction to the current reduced space.
    #[error("snapshot at mu = {mu:?} is numerically dependent on the reduced basis")]
    DependentSnapshot { mu: Vec<f64> },

    #[error("configuration error: {0}")]
    Config(String),

    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("malformed file {}: {reason}", path.display())]
    Format { path: PathBuf, reason: String },
}

impl RbError {
    /// Process exit status for the CLI: 2 configuration, 3 I/O, 4 numerical.
    pub fn exit_code(&self) -> i32 {
        match self {
            RbError::Config(_) | RbError::InvalidInput(_) => 2,
            RbError::Io { .. } | RbError::Format { .. } => 3,
            RbError::Singular { .. } | RbError::InvalidGram(_) | RbError::DependentSnapshot { .. } => 4,
        }
    }

    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        RbError::InvalidInput(msg.into())
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        RbError::Io { path: path.into(), source }
    }
}

pub type Result<T, E = RbError> = std::result::Result<T, E>;
