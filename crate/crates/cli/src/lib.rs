//! Scenario runner for weighted-density bubble clusters: parses scenario
//! files, evolves them, writes OBJ meshes, traces and metrics, compares two
//! metrics reports and sweeps the density exponent for triple bubbles.

pub mod compare;
pub mod run;
pub mod scenario;
pub mod sweep;

use bubblelab::{EvolveError, ShapeError, StopReason};
use thiserror::Error;

pub use compare::{compare_reports, Comparison, Verdict};
pub use run::{run_scenario, RunSummary};
pub use scenario::{load_scenarios, parse_scenarios, Overrides, Scenario};
pub use sweep::{sweep_vertex_separation, SweepRow};

pub const EXIT_OK: i32 = 0;
pub const EXIT_FAILURE: i32 = 1;
pub const EXIT_STALLED: i32 = 2;
pub const EXIT_CONSTRAINT: i32 = 3;
pub const EXIT_CONFIG: i32 = 4;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Config(String),
    #[error("{0}")]
    Constraint(String),
    #[error("{0}")]
    Io(#[from] std::io::Error),
    #[error("{0}")]
    Other(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => EXIT_CONFIG,
            CliError::Constraint(_) => EXIT_CONSTRAINT,
            CliError::Io(_) | CliError::Other(_) => EXIT_FAILURE,
        }
    }
}

impl From<EvolveError> for CliError {
    fn from(e: EvolveError) -> Self {
        let msg = e.to_string();
        match e {
            EvolveError::SingularGram { .. } | EvolveError::NoConvergence { .. } => CliError::Constraint(msg),
            EvolveError::InvalidConfig(_) => CliError::Config(msg),
            EvolveError::Seed(inner) => (*inner).into(),
            EvolveError::Density(_) | EvolveError::Mesh(_) => CliError::Other(msg),
        }
    }
}

impl From<ShapeError> for CliError {
    fn from(e: ShapeError) -> Self {
        let msg = e.to_string();
        match e {
            ShapeError::VolumeFit { .. } | ShapeError::Projection(_) => CliError::Constraint(msg),
            ShapeError::UnsupportedTopology(_)
            | ShapeError::VolumeCount { .. }
            | ShapeError::BadVolume(_)
            | ShapeError::Construction(_)
            | ShapeError::Density(_) => CliError::Config(msg),
            ShapeError::Mesh(_) => CliError::Other(msg),
        }
    }
}

/// Exit status of a finished evolution: 0 when converged, 2 otherwise.
pub fn stop_exit_code(stop: StopReason) -> i32 {
    match stop {
        StopReason::Converged => EXIT_OK,
        StopReason::Stalled | StopReason::MaxIterations => EXIT_STALLED,
    }
}
