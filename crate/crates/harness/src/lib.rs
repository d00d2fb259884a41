//! Experiment runner for `nearelastic-core`.
//!
//! A run reads one JSON [`config::ExperimentConfig`], executes its replicas
//! through a [`runner::Runner`], and produces [`report::ResultRecord`]s plus
//! raw data tables. [`io`] writes both to disk.

pub mod config;
pub mod experiments;
pub mod io;
pub mod report;
pub mod runner;

pub use config::ExperimentConfig;
pub use experiments::{run, RunOutput, Table};
pub use report::{Comparison, ResultRecord};
pub use runner::Runner;
