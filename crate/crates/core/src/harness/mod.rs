//! Experiment harness: configuration, single trials, paired batches over a
//! common scene set, parameter sweeps, and persisted results.

mod batch;
mod config;
mod sweep;
mod trial;

use thiserror::Error;

use crate::analysis::AnalysisError;
use crate::physics2d::PhysicsError;
use crate::scene::SceneError;

pub use batch::{
    generate_scene_set, read_trials_csv, run_batch, write_batch_outputs, write_trials_csv, BatchOutput,
};
pub use config::{ExperimentConfig, SensorConfig, TaperConfig, OUTPUT_DIR_ENV};
pub use sweep::{run_sweep, write_sweep_outputs, SweepGrid, SweepOutput};
pub use trial::{run_trial, run_trial_in_world, trial_seed, TrialEvent, TrialEventKind, TrialOutcome};

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error("configuration error: {0}")]
    Config(String),
    #[error(transparent)]
    Scene(#[from] SceneError),
    #[error(transparent)]
    Physics(#[from] PhysicsError),
    #[error(transparent)]
    Analysis(#[from] AnalysisError),
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),
    #[error("{faulted} of {total} trials faulted, above the allowed rate {limit}")]
    FaultRateExceeded { faulted: usize, total: usize, limit: f64 },
}

fn thread_pool(workers: usize) -> Result<rayon::ThreadPool, HarnessError> {
    rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build()
        .map_err(|e| HarnessError::Config(format!("cannot start {workers} workers: {e}")))
}
