use thiserror::Error;

/// Errors raised by the library. The CLI maps each variant onto an exit code
/// through [`Error::class`].
#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("state outside the sample space: {0}")]
    OutsideSpace(String),

    #[error("matrix is singular or not positive definite: {0}")]
    Singular(String),

    #[error("rank deficient design: {0}")]
    RankDeficient(String),

    #[error("sweep pivot is not positive (r_det = {0:e})")]
    NonPositivePivot(f64),

    #[error("solver did not converge after {iterations} sweeps (kkt residual {residual:e})")]
    NotConverged {
        iterations: usize,
        residual: f64,
        best: Vec<f64>,
    },

    #[error("row-space constraint violated (residual {0:e})")]
    ConstraintViolated(f64),

    #[error("degenerate input: {0}")]
    Degenerate(String),

    #[error("unsupported: {0}")]
    Unsupported(String),

    #[error("malformed data: {0}")]
    Data(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

/// Coarse grouping used for process exit codes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorClass {
    Config,
    Data,
    Numerical,
}

impl Error {
    pub fn class(&self) -> ErrorClass {
        match self {
            Error::InvalidParameter(_) | Error::Unsupported(_) => ErrorClass::Config,
            Error::Dimension(_)
            | Error::OutsideSpace(_)
            | Error::Data(_)
            | Error::Io(_)
            | Error::Csv(_)
            | Error::Json(_) => ErrorClass::Data,
            Error::Singular(_)
            | Error::RankDeficient(_)
            | Error::NonPositivePivot(_)
            | Error::NotConverged { .. }
            | Error::ConstraintViolated(_)
            | Error::Degenerate(_) => ErrorClass::Numerical,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
