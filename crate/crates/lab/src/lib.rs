//! Experiment harness for `nls-core`: configuration parsing, initial data,
//! the experiment registry and output writing. The `nls-lab` binary is a
//! thin CLI over this library.

pub mod config;
pub mod data;
pub mod error;
pub mod experiments;
pub mod output;

pub use config::{ExperimentConfig, ExperimentKind};
pub use error::LabError;
pub use experiments::{run_experiment, ExperimentOutcome};
