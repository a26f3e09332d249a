use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    /// The jittered covariance was still not positive definite.
    #[error("covariance matrix not positive definite (last relative jitter {jitter:e})")]
    FactorizationFailure { jitter: f64 },

    #[error("value outside domain: {0}")]
    Domain(String),

    #[error("no point above the likelihood threshold found after {shrinks} shrinks")]
    PriorExhausted { shrinks: usize },

    #[error("every ML-II restart failed")]
    AllRestartsFailed,

    #[error("every predictive mixture component failed")]
    AllComponentsFailed,

    #[error("degenerate data: {0}")]
    DegenerateData(String),

    #[error("shape mismatch: {0}")]
    Shape(String),

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
}
