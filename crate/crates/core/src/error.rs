//! Error type shared by all modules.

use thiserror::Error;

pub type Result<T> = std::result::Result<T, CoreError>;

#[derive(Debug, Clone, Error)]
pub enum CoreError {
    #[error("invalid Fock dimension {dim}: {reason}")]
    InvalidDimension { dim: usize, reason: &'static str },

    #[error("dimension mismatch: expected {expected}, got {actual}")]
    DimensionMismatch { expected: usize, actual: usize },

    #[error("non-finite entries in {context}")]
    NonFinite { context: &'static str },

    #[error("invalid parameter {name}: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error(
        "truncation too small: codeword tail weight {tail:.3e} at dim {dim}; suggested dim {suggested}"
    )]
    Truncation { dim: usize, tail: f64, suggested: usize },

    #[error("unknown logical state label `{0}`")]
    UnknownLabel(String),

    #[error("integrator failure: {reason} (steps={steps}, trace drift={trace_drift:.3e}, negativity={negativity:.3e})")]
    IntegratorFailure {
        reason: &'static str,
        steps: usize,
        trace_drift: f64,
        negativity: f64,
    },

    #[error("sBs calibration failed; tried conventions: {tried}")]
    CalibrationFailed { tried: String },

    #[error("post-selection starved: success probability {success:.3e} below threshold")]
    PostSelectionStarved { success: f64 },

    #[error("SBS basis construction failed: {0}")]
    BasisConstruction(String),

    #[error("state is undecodable: projected trace {0:.3e}")]
    Undecodable(f64),
}
