//! Library half of the `masslab` command-line tool: configuration schema,
//! subcommand implementations and the SVG writer.

pub mod commands;
pub mod config;
pub mod error;
pub mod svg;

pub use error::{CliError, Result};
