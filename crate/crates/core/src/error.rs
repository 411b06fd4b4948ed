use alloc::string::String;

/// Errors raised by the numerical routines.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("invalid mixture: {0}")]
    InvalidMixture(String),
    #[error("{name} = {value} is outside {expected}")]
    OutOfRange {
        name: &'static str,
        value: f64,
        expected: &'static str,
    },
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("coupling tensor of order {order} needs {bytes} bytes, exceeding the cap of {cap} bytes")]
    Capacity { order: usize, bytes: u128, cap: u64 },
    #[error("point is not on the sphere with |x|^2 = {expected} (found {found})")]
    NotOnSphere { expected: f64, found: f64 },
    #[error("invalid measure: {0}")]
    InvalidMeasure(String),
    #[error("degenerate input: {0}")]
    Degenerate(String),
}

pub type Result<T> = core::result::Result<T, Error>;

pub(crate) fn out_of_range<T>(name: &'static str, value: f64, expected: &'static str) -> Result<T> {
    Err(Error::OutOfRange {
        name,
        value,
        expected,
    })
}
