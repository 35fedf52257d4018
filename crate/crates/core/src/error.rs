use alloc::string::String;

/// Errors raised by the core algorithms.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("configuration error: {0}")]
    Config(String),
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("contract violation: {0}")]
    Contract(&'static str),
    #[error("non-finite fitness sample {0}")]
    NonFinite(f64),
    #[error("insufficient data: {found} points, at least {required} required")]
    InsufficientData { found: usize, required: usize },
    #[error("invalid metric value {0}")]
    InvalidMetric(f64),
    #[error("sharpness is zero, Holevo variance is infinite")]
    InfiniteVariance,
    #[error("no photons left in the state")]
    NoPhoton,
    #[error("invalid distribution parameter: {0}")]
    InvalidParameter(&'static str),
    #[error("retry cap of {attempts} attempts exhausted at N = {n}")]
    RetryCapExhausted { n: usize, attempts: usize },
}

pub type Result<T> = core::result::Result<T, Error>;

impl Error {
    pub(crate) fn config(msg: impl Into<String>) -> Self {
        Error::Config(msg.into())
    }
}
