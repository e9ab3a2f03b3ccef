//! File formats, configuration, parallel orchestration and the command-line
//! front end for the `fscl-core` solver.

pub mod config;
pub mod error;
pub mod execute;
pub mod output;
pub mod parallel;
pub mod snapshot;

pub use config::{parse_config, parse_str, ExperimentConfig, ExperimentKind};
pub use error::{exit, CliError, CliResult};
pub use execute::execute;
pub use output::{Check, Verdict};
