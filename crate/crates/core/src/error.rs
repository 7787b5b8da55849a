use thiserror::Error;

/// Errors raised by the numerical routines.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),

    #[error("step mismatch: {0}")]
    StepMismatch(String),

    #[error("invalid input: {0}")]
    Invalid(String),

    #[error("dimension mismatch: expected {expected}, got {got}")]
    Dimension { expected: usize, got: usize },

    #[error("singular covariance: λ_min = {lambda_min:e} below floor {floor:e}")]
    SingularCovariance { lambda_min: f64, floor: f64 },

    #[error("observable '{name}' is only declared {declared}; {needed} required")]
    Smoothness {
        name: String,
        declared: &'static str,
        needed: &'static str,
    },

    #[error("singular fit: {0}")]
    SingularFit(String),

    #[error("refused: {0}")]
    Refused(String),

    #[error("fixed point iteration did not contract: {0}")]
    NonContraction(String),

    #[error("feedback evaluation failed: {0}")]
    Feedback(String),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
