use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    Dimension { expected: usize, got: usize },

    #[error("invalid parameter `{field}`: {reason}")]
    InvalidParameter { field: &'static str, reason: String },

    #[error("ε must lie in (0,1), got {0}")]
    Epsilon(f64),

    #[error("arrival rates outside the capacity region: {0}")]
    Capacity(String),

    #[error("frequency outside the admissible domain: {0}")]
    Domain(String),

    #[error("nnls did not converge after {0} iterations")]
    NnlsNonConvergence(usize),

    #[error("empty ensemble")]
    EmptyEnsemble,

    #[error("no boundary samples for conditional estimator `{0}`")]
    NoBoundarySamples(&'static str),

    #[error("system mismatch: {0}")]
    SystemMismatch(String),

    #[error("malformed ensemble file: {0}")]
    Format(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn param(field: &'static str, reason: impl Into<String>) -> Self {
        Error::InvalidParameter {
            field,
            reason: reason.into(),
        }
    }
}
