//! Experiment harness around `lrvoter-core`: versioned configs, replicate
//! ensembles on per-replicate random streams, and CSV/JSON artifacts with a
//! provenance manifest. The `lrvoter` binary is a thin front end over
//! [`commands::run`].

pub mod commands;
pub mod config;
pub mod error;
pub mod experiments;
pub mod output;
pub mod runner;

pub use config::{Command, ExperimentConfig, TMaxPolicy, Thresholds};
pub use error::{LabError, Result};
pub use runner::Runner;

/// Exit statuses of the command line.
pub mod exit {
    pub const PASS: i32 = 0;
    pub const USAGE: i32 = 1;
    pub const ACCEPTANCE: i32 = 2;
    pub const CUTOFF: i32 = 3;
}
