//! Experiments on top of `ergopt`: orbit locking under perturbation,
//! parameter sweeps over unimodal families, `γ` scaling, and the command
//! runners behind the `ergopt` binary.

pub mod commands;
pub mod config;
pub mod locking;
pub mod scaling;
pub mod sweep;

use ergopt::markov::MarkovError;
use ergopt::optimize::OptimizeError;
use ergopt::subaction::SubactionError;
use ergopt::{DynamicsError, ObservableError, OrbitError};

pub use config::{ExperimentConfig, Format};
pub use locking::{domination_constant, domination_spot_check, locking_experiment, LockingReport, LockingSetup};
pub use scaling::{gamma_scaling, GammaRow, ScalingReport};
pub use sweep::{tpo_sweep, SweepFamily, SweepReport, SweepRow};

#[derive(Debug, thiserror::Error)]
pub enum ExpError {
    #[error("config: {0}")]
    Config(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
    #[error(transparent)]
    Map(#[from] DynamicsError),
    #[error(transparent)]
    Observable(#[from] ObservableError),
    #[error(transparent)]
    Orbit(#[from] OrbitError),
    #[error(transparent)]
    Optimize(#[from] OptimizeError),
    #[error(transparent)]
    Subaction(#[from] SubactionError),
    #[error(transparent)]
    Markov(#[from] MarkovError),
    #[error("base observable is not maximized by the orbit: {0}")]
    BaseNotMaximized(String),
    #[error("no periodic orbits enumerated")]
    NoOrbits,
}

/// Formats a float for CSV output with 12 significant digits.
pub fn fmt_f64(x: f64) -> String {
    if x.is_finite() {
        format!("{x:.11e}")
    } else {
        x.to_string()
    }
}
