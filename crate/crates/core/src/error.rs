use alloc::boxed::Box;
use alloc::string::String;
use alloc::vec::Vec;

pub type Result<T, E = Error> = core::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("{what} would need {requested} entries, above the cap of {cap}")]
    CapExceeded { what: &'static str, requested: u128, cap: usize },
    #[error("integration failed at t = {t}: {reason}")]
    Integration { t: f64, reason: &'static str },
    #[error("model evaluation failed for sample {index} (xi = {xi:?}): {source}")]
    Sample { index: usize, xi: Vec<f64>, source: Box<Error> },
    #[error("solver stopped after {iterations} iterations without converging (residual {residual:e})")]
    NotConverged { iterations: usize, residual: f64 },
    #[error("degenerate result: {0}")]
    Degenerate(String),
    #[error("eigenvalue {value:e} is below the negativity threshold {threshold:e}")]
    NegativeEigenvalue { value: f64, threshold: f64 },
    #[error("ensemble is already centered")]
    AlreadyCentered,
    #[error("ensemble must be centered first")]
    NotCentered,
    #[error("t = {t} is not a grid node (nearest node is t = {nearest})")]
    OffGrid { t: f64, nearest: f64 },
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidArgument(msg.into())
    }

    pub(crate) fn mismatch(msg: impl Into<String>) -> Self {
        Error::DimensionMismatch(msg.into())
    }

    pub(crate) fn degenerate(msg: impl Into<String>) -> Self {
        Error::Degenerate(msg.into())
    }

    /// True for failures that come from evaluating a model (including ODE failures).
    pub fn is_model_failure(&self) -> bool {
        matches!(self, Error::Integration { .. } | Error::Sample { .. })
    }
}
