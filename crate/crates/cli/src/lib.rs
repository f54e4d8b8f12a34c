//! Command-line harness: configuration, run directories, plots and the
//! `solve`, `wave`, `selfsim`, `converge` and `verify` subcommands.

pub mod commands;
pub mod config;
pub mod error;
pub mod io;
pub mod plot;

pub use config::RunConfig;
pub use error::{CliError, CliResult};
