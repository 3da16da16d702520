use thiserror::Error;

pub type Result<T> = std::result::Result<T, HsrError>;

#[derive(Debug, Error)]
pub enum HsrError {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("degenerate distribution: {0}")]
    DegenerateDistribution(String),

    #[error("insufficient support: {found} samples above threshold, need {needed}")]
    InsufficientSupport { found: usize, needed: usize },

    #[error("singular least-squares system (|r_{index}{index}| = {magnitude:e})")]
    SingularSystem { index: usize, magnitude: f64 },

    #[error("fitted log-surface is not concave (c3 = {c3}, c4 = {c4})")]
    NonConcaveFit { c3: f64, c4: f64 },

    #[error("input format: {0}")]
    InputFormat(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub(crate) fn invalid<T>(msg: impl Into<String>) -> Result<T> {
    Err(HsrError::InvalidArgument(msg.into()))
}
