use thiserror::Error;

/// Errors raised by the geometry, dyadic, weight, operator and experiment layers.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("point is outside the tubular neighbourhood (distance {distance:e} >= eps0 {eps0:e})")]
    OutsideTubularNeighborhood { distance: f64, eps0: f64 },

    #[error("iteration did not converge after {iterations} steps")]
    NoConvergence { iterations: usize },

    #[error("point is not on the boundary (|rho| = {residual:e}, tolerance {tolerance:e})")]
    NotOnBoundary { residual: f64, tolerance: f64 },

    #[error("operation `{operation}` is not defined for the {kind} domain")]
    WrongDomainKind {
        operation: &'static str,
        kind: &'static str,
    },

    #[error("bisection failed: {0}")]
    BisectionFailure(String),

    #[error("finest dyadic scale {finest:e} is below the boundary resolution {resolution:e}")]
    ResolutionExceeded { finest: f64, resolution: f64 },

    #[error("region has no positive measure")]
    EmptyRegion,

    #[error("sample {index} coincides with the weight singularity (distance {distance:e})")]
    SingularSample { index: usize, distance: f64 },

    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("io error: {0}")]
    Io(String),

    #[error("serialization error: {0}")]
    Serde(String),
}

impl Error {
    pub(crate) fn invalid(name: &'static str, reason: impl Into<String>) -> Self {
        Error::InvalidParameter {
            name,
            reason: reason.into(),
        }
    }
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

impl From<serde_json::Error> for Error {
    fn from(e: serde_json::Error) -> Self {
        Error::Serde(e.to_string())
    }
}

impl From<csv::Error> for Error {
    fn from(e: csv::Error) -> Self {
        Error::Serde(e.to_string())
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
