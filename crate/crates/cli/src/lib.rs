//! Scenario runner for the `wentropy` verification battery: TOML configs,
//! the built-in scenarios, report and series output, and the command line.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod battery;
pub mod config;
pub mod error;
pub mod run;
pub mod scenarios;

pub use config::ScenarioConfig;
pub use error::CliError;
pub use run::{run_scenario, Outcome, RunReport};
