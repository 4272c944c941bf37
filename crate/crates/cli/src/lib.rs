//! Command-line front end: subcommands per pipeline stage plus `run`,
//! which executes every stage from a single config file.

pub mod commands;
pub mod config;
pub mod error;
pub mod pipeline;
pub mod spec;

pub use commands::{execute, run_pipeline, Cli};
pub use error::{CliError, Result};
