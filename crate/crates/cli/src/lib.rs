//! Command-line front end: scenario files, CSV outputs and the subcommands.

pub mod commands;
pub mod config;
pub mod output;

pub use commands::{execute, Cli, Command};
