use thiserror::Error;

/// Errors raised across the toolkit.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum RiskError {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("length mismatch: {left} vs {right}")]
    LengthMismatch { left: usize, right: usize },

    #[error("domain error: {0}")]
    Domain(String),

    #[error("infinite quantile at level {0}")]
    InfiniteQuantile(f64),

    #[error("infinite endpoint: support is unbounded")]
    InfiniteEndpoint,

    #[error("non-integrable under h: {0}")]
    NonIntegrable(String),

    #[error("non-integrable score: {0}")]
    NonIntegrableScore(String),

    #[error("bracket failure: optimum at grid boundary {boundary}")]
    BracketFailure { boundary: f64 },

    #[error("no convergence: {0}")]
    Convergence(String),

    #[error("degenerate series: {0}")]
    DegenerateSeries(String),

    #[error("parse error: {0}")]
    Parse(String),

    #[error("i/o error: {0}")]
    Io(String),
}

pub type Result<T> = std::result::Result<T, RiskError>;

pub(crate) fn invalid(msg: impl Into<String>) -> RiskError {
    RiskError::InvalidArgument(msg.into())
}

pub(crate) fn check_len(left: usize, right: usize) -> Result<()> {
    if left == right {
        Ok(())
    } else {
        Err(RiskError::LengthMismatch { left, right })
    }
}

pub(crate) fn check_prob(name: &str, p: f64) -> Result<()> {
    if (0.0..=1.0).contains(&p) {
        Ok(())
    } else {
        Err(invalid(format!("{name} must lie in [0,1], got {p}")))
    }
}
