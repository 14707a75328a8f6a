//! Experiment runner and data-facing commands for `lpboot`.

pub mod config;
pub mod experiment;
pub mod infer;
pub mod plot;

pub use config::{Estimator, ExperimentSpec, LagRule};
pub use experiment::{execute, run_experiment, ExperimentOutput, RunOptions};

/// Process exit codes.
pub mod exit {
    pub const OK: i32 = 0;
    pub const INPUT: i32 = 2;
    pub const PARTIAL: i32 = 3;
}
