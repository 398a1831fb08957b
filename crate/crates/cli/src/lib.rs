//! Scenario-file front end for the `learnsel` library.
//!
//! A scenario is a JSON file fixing a [`learnsel::ProblemInstance`] and a
//! [`learnsel::LearningDynamic`]; each subcommand runs one analysis on it and
//! writes JSON or CSV. Feature numbers in all output are 1-based.

pub mod commands;
pub mod error;
pub mod output;
pub mod scenario;

pub use commands::{run, Cli, Command, Outcome};
pub use error::CliError;
pub use scenario::{load_scenario, parse_scenario, Scenario};
