//! Command-line front end and HTTP session service for influence-diagram
//! decision support.

pub mod commands;
pub mod service;

pub use commands::{run, Cli, CliError, Command, EXIT_DOMAIN, EXIT_OK, EXIT_USAGE};
