//! Crate-wide error type.

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("invalid cone: {0}")]
    InvalidCone(String),

    #[error("cone has empty interior (or no interior witness was found)")]
    EmptyInterior,

    #[error("dual generators are not available for this cone")]
    DualUnavailable,

    #[error("vector is not in the dual cone (worst pairing {violation:.3e})")]
    NotInDualCone { violation: f64 },

    #[error("dynamics evaluation returned a non-finite value in coordinate {coordinate} while probing {context}")]
    EvalFailure { coordinate: usize, context: String },

    #[error("state lies outside the system's state domain")]
    OutsideDomain,

    #[error("control value outside the control set: {0}")]
    OutsideControlSet(String),

    #[error("time step {dt} does not divide the control grid spacing {spacing}")]
    StepMismatch { dt: f64, spacing: f64 },

    #[error("grids do not match: {0}")]
    GridMismatch(String),

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Serde(#[from] serde_json::Error),
}
