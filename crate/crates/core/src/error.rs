use thiserror::Error;

/// Errors raised by the library.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("vector lies outside the domain cone (violation {violation:.3e})")]
    OutsideDomain { violation: f64 },

    #[error("metric tensor is not symmetric positive definite: {0}")]
    InvalidMetric(String),

    #[error("invalid parameter `{name}` = {value}: {reason}")]
    InvalidParameter { name: String, value: f64, reason: String },

    #[error("point {point:?} is not critical (vertical defect {defect:.3e})")]
    NotCritical { point: Vec<f64>, defect: f64 },

    #[error("{0}")]
    Usage(String),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn check_dim(expected: usize, found: usize) -> Result<()> {
    if expected == found {
        Ok(())
    } else {
        Err(Error::DimensionMismatch { expected, found })
    }
}
