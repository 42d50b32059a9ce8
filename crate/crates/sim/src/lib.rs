//! Scenario configs, Monte Carlo sweeps, boundary probing and CSV output
//! on top of `rcmimo-core`.
//!
//! The `rcmimo` binary wraps this crate; see the README for the command
//! line and the config format.

pub mod codebook;
pub mod config;
pub mod experiment;
pub mod output;
pub mod probe;

pub use config::{ConfigError, Method, ScenarioConfig};
pub use experiment::{failure_rate, run_experiment, RunError, RunOptions};
pub use output::{emit_csv, parse_csv, ExperimentResult, Status};
