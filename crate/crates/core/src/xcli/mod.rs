//! Experiment harness behind the `chaos-ent` binary.

pub mod config;
pub mod experiments;
pub mod table;
pub mod verify;

pub use config::{ExperimentConfig, OutputFormat, Overrides, DEFAULT_OUT, OUT_ENV};
pub use experiments::{find_experiment, registry, run_experiment, write_outputs, ExperimentInfo, RunOutput};
pub use table::{Cell, Column, ResultTable, RunMetadata};
pub use verify::{verify, CriterionReport, Scale};
