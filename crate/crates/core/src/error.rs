use thiserror::Error;

/// Errors raised by builders, numerics and the run front end.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("argument {value} outside domain [0, {horizon}]")]
    OutOfDomain { value: f64, horizon: f64 },

    #[error("negative cosine coefficient beta_{index} = {value:e}")]
    NegativeCoefficient { index: usize, value: f64 },

    #[error("no convergence: {0}")]
    Convergence(String),

    #[error("parse error: {0}")]
    Parse(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidParameter(msg.into())
    }

    /// True for failures of the numerical machinery (as opposed to bad input).
    pub fn is_numerical(&self) -> bool {
        matches!(self, Error::NegativeCoefficient { .. } | Error::Convergence(_))
    }
}

pub type Result<T> = std::result::Result<T, Error>;
