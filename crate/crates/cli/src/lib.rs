//! Batch driver: configuration parsing and experiment execution.

pub mod config;
pub mod run;

pub use config::{parse_config, parse_config_for, ConfigError, Experiment, RunConfig};
pub use run::{run, Status};
