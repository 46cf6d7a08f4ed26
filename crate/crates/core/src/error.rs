use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("metric backend mismatch: {left} vs {right}")]
    BackendMismatch { left: &'static str, right: &'static str },
    #[error("dimension mismatch: {left} vs {right}")]
    DimensionMismatch { left: usize, right: usize },
    #[error("non-finite value in {0}")]
    NonFinite(&'static str),
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("index {index} out of range for length {len}")]
    IndexOutOfRange { index: usize, len: usize },
    #[error("empty input: {0}")]
    Empty(&'static str),
    #[error("exact transport size {rows}x{cols} exceeds cap {cap}; use the entropic solver")]
    SizeCapExceeded { rows: usize, cols: usize, cap: usize },
    #[error("weights do not sum to one (sum = {0})")]
    InfeasibleWeights(f64),
    #[error("point is not on the probability simplex")]
    NotOnSimplex,
    #[error("transport solver did not converge: {0}")]
    NoConvergence(String),
    #[error("parse error: {0}")]
    Parse(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

pub(crate) fn invalid(msg: impl Into<String>) -> Error {
    Error::InvalidParameter(msg.into())
}
