//! Command-line driver for the `discflow` library: configuration parsing
//! and reproducible runs that write particle lists, reports, frames and
//! cylinder scenes.

pub mod config;
pub mod run;

pub use config::{Command, ConfigError, RunConfig};
pub use run::{run, RunError, RunOutcome, EXIT_FAIL, EXIT_INPUT, EXIT_PASS};
