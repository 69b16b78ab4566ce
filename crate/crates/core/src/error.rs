use thiserror::Error;

/// Errors raised by the estimation engine, the models and the harness.
#[derive(Debug, Error)]
pub enum GckfError {
    #[error("index {index} out of range for dimension {dim}")]
    Index { index: usize, dim: usize },

    #[error("invalid argument: {0}")]
    Argument(String),

    #[error("numerical failure: {0}")]
    Numerical(String),

    #[error("capability missing: {0}")]
    Capability(String),

    #[error("protocol violation: {0}")]
    Protocol(String),

    #[error("unstable configuration: s = {s:.6} exceeds the limit {limit}")]
    Stability { s: f64, limit: f64 },

    #[error("CFL condition violated: courant number {courant:.6} > 1")]
    Cfl { courant: f64 },

    #[error("measurement error: {0}")]
    Measurement(String),

    #[error("config error: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl GckfError {
    pub(crate) fn arg(msg: impl Into<String>) -> Self {
        GckfError::Argument(msg.into())
    }

    pub(crate) fn numerical(msg: impl Into<String>) -> Self {
        GckfError::Numerical(msg.into())
    }

    pub(crate) fn protocol(msg: impl Into<String>) -> Self {
        GckfError::Protocol(msg.into())
    }

    /// True for errors that stem from configuration rather than arithmetic.
    pub fn is_config_error(&self) -> bool {
        matches!(
            self,
            GckfError::Config(_) | GckfError::Argument(_) | GckfError::Stability { .. } | GckfError::Cfl { .. }
        )
    }
}

pub type Result<T> = std::result::Result<T, GckfError>;
