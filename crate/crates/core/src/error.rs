use thiserror::Error;

/// Errors produced by the analysis routines.
#[derive(Debug, Error)]
pub enum PtfError {
    #[error("dimension mismatch: expected {expected} coordinates, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("coordinate index {index} out of range for n = {n}")]
    IndexOutOfRange { index: usize, n: usize },

    #[error("{what} requires n <= {cap}, got n = {n}")]
    CapExceeded {
        what: &'static str,
        n: usize,
        cap: usize,
    },

    #[error("infeasible request: {0}")]
    Infeasible(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("operation is undefined for the zero polynomial")]
    ZeroPolynomial,

    #[error("operation is undefined for a constant polynomial")]
    ConstantPolynomial,

    #[error("malformed polynomial: {0}")]
    Format(String),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T, E = PtfError> = std::result::Result<T, E>;

pub(crate) fn invalid(msg: impl Into<String>) -> PtfError {
    PtfError::InvalidParameter(msg.into())
}

pub(crate) fn check_cap(what: &'static str, n: usize, cap: usize) -> Result<()> {
    if n > cap {
        Err(PtfError::CapExceeded { what, n, cap })
    } else {
        Ok(())
    }
}
