//! Command-line front end: ingestion, subcommands and serialized outputs.

pub mod commands;
pub mod error;
pub mod ingest;
pub mod output;

pub use error::{CliError, CliResult};
