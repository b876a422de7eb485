use thiserror::Error;

/// Errors produced by protocol construction, expansion and classification.
#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("repeated target index {0}")]
    RepeatedTarget(usize),
    #[error("target index {index} out of range for layout with {count} subsystems")]
    TargetOutOfRange { index: usize, count: usize },
    #[error("matrix is not unitary (max deviation {deviation:e} exceeds tol {tol:e})")]
    NotUnitary { deviation: f64, tol: f64 },
    #[error("matrix is not a projector (max deviation {deviation:e} exceeds tol {tol:e})")]
    NotProjector { deviation: f64, tol: f64 },
    #[error("measurement outcomes do not resolve the identity (max deviation {0:e})")]
    IncompleteMeasurement(f64),
    #[error("invalid variant index {0}")]
    InvalidVariant(usize),
    #[error("invalid layout: {0}")]
    InvalidLayout(String),
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("unsupported computer family: {0}")]
    UnsupportedFamily(String),
    #[error("unknown outcome label '{label}' at measurement step {step}")]
    UnknownOutcome { step: usize, label: String },
    #[error("history tree leaf cap of {cap} exceeded")]
    LeafCapExceeded { cap: usize },
    #[error("invariant violation: {0}")]
    InvariantViolation(String),
    #[error("{0}")]
    InvalidProtocol(String),
}

pub type Result<T> = std::result::Result<T, Error>;
