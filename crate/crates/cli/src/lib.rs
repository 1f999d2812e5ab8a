//! Experiment harness and file utilities for coded prediction serving.

pub mod commands;
pub mod config;
pub mod dataset;
pub mod experiment;
pub mod metrics;
pub mod model;

pub use config::{ExperimentConfig, Mode, Sweep};
pub use dataset::{Dataset, DatasetSpec};
pub use experiment::run_experiment;
pub use metrics::{CellSummary, MetricsRow};
pub use model::ModelSpec;
