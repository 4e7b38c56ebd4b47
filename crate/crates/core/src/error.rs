use thiserror::Error;

/// Errors raised by the numerical kernels and experiment drivers.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("Bessel order {order} exceeds the configured cap {cap}")]
    OrderOverflow { order: i64, cap: i64 },
    #[error("invalid input: {0}")]
    InvalidInput(String),
    #[error("quadrature inconsistency: residual imaginary part {residual:e}")]
    QuadratureInconsistency { residual: f64 },
    #[error("domain error: {0}")]
    DomainError(String),
    #[error("index error: {0}")]
    IndexError(String),
    #[error("oracle budget exceeded: {0}")]
    OracleBudgetExceeded(String),
    #[error("power iteration did not converge after {0} iterations")]
    IterationLimit(usize),
    #[error("internal error: {0}")]
    InternalError(String),
    #[error("i/o error: {0}")]
    Io(String),
    #[error("parse error: {0}")]
    Parse(String),
}

pub type Result<T> = std::result::Result<T, Error>;

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

impl From<serde_json::Error> for Error {
    fn from(e: serde_json::Error) -> Self {
        Error::Parse(e.to_string())
    }
}

impl From<csv::Error> for Error {
    fn from(e: csv::Error) -> Self {
        Error::Io(e.to_string())
    }
}
