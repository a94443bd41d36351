//! Experiment harness: scenario configs, baselines and the subcommand
//! drivers behind the `dms` binary.

pub mod baselines;
pub mod config;
pub mod error;
pub mod output;
pub mod runner;
pub mod scenario;

pub use config::ScenarioConfig;
pub use error::{HarnessError, Result};
pub use runner::{run, Command, Overrides};
