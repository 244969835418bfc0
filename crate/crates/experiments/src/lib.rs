//! Experiment harness for the GKP Kerr magic-state simulator: parameter
//! sweeps over loss, the error-corrected preparation pipeline, Wigner-panel
//! emission and a realistic combined-noise scenario, with CSV/JSON/SVG
//! artifacts written deterministically.

pub mod config;
pub mod output;
pub mod runners;

pub use config::{DecoderKind, SweepConfig, WignerSpec};
pub use runners::{
    run_fig1, run_fig2a, run_fig2b, run_realistic, run_sbs_steady, validate, RunRecord,
    SweepPoint,
};

use thiserror::Error;

#[derive(Debug, Error)]
pub enum ExperimentError {
    #[error("config error: {0}")]
    Config(String),

    #[error(transparent)]
    Core(#[from] gkpsim_core::CoreError),

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, ExperimentError>;

/// Process exit code for an error, per the CLI contract:
/// 2 config, 3 numeric, 4 post-selection starved.
pub fn exit_code(err: &ExperimentError) -> i32 {
    match err {
        ExperimentError::Config(_) => 2,
        ExperimentError::Core(gkpsim_core::CoreError::PostSelectionStarved { .. }) => 4,
        ExperimentError::Core(_) => 3,
        ExperimentError::Io(_) => 3,
    }
}
