//! Command-line front end of the pilotwave lab: TOML configs, experiment
//! runners and the on-disk artifact formats.

pub mod cli;
pub mod config;
pub mod error;
pub mod experiments;
pub mod io;
pub mod runner;

pub use config::{ExperimentConfig, ExperimentKind, EXPERIMENTS};
pub use error::CliError;
