use thiserror::Error;

/// Errors raised by the library.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("integral diverges at t = {t}: {reason}")]
    NonIntegrable { t: f64, reason: &'static str },

    #[error("kernel modulus vanishes at t = {t}")]
    DegenerateKernel { t: f64 },

    #[error("point {y} lies outside the admissible set of the density formula")]
    OffThetaSet { y: f64 },

    #[error("transform order {order} is not available for this regime")]
    UnsupportedOrder { order: f64 },

    #[error("unsupported combination: {0}")]
    UnsupportedCombination(String),

    #[error("atom at {location} has weight {weight}, jump theta*w = {jump} >= 1")]
    JumpTooLarge { location: f64, weight: f64, jump: f64 },

    #[error("quadrature tolerance not met: value {value}, error estimate {error:e}")]
    ToleranceNotMet { value: f64, error: f64 },

    #[error("coupling from the past did not coalesce within depth {depth}")]
    CoalescenceFailure { depth: u64 },

    #[error("invalid measure: {0}")]
    InvalidMeasure(String),

    #[error("invalid parameters: {0}")]
    InvalidParams(String),

    #[error("non-finite integrand value at t = {t}")]
    NonFinite { t: f64 },

    #[error("i/o error: {0}")]
    Io(String),

    #[error("json error: {0}")]
    Json(String),
}

pub type Result<T> = std::result::Result<T, Error>;

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

impl From<serde_json::Error> for Error {
    fn from(e: serde_json::Error) -> Self {
        Error::Json(e.to_string())
    }
}
