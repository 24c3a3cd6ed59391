//! Command-line front end: configuration, run directories, manifests and the
//! `simulate`, `invariants`, `stability` and `converge` subcommands.

pub mod commands;
pub mod config;
pub mod error;
pub mod manifest;

pub use config::RunConfig;
pub use error::{CliError, CliResult};
