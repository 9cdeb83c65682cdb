//! `cimxor` command-line front end.
//!
//! Every subcommand writes its tables plus a `manifest.json` holding the tool
//! version, the seed and the fully resolved scenario, which is enough to
//! regenerate the outputs byte for byte.

mod commands;
mod scenario;

pub use commands::{run, Cli, Command};
pub use scenario::{BnnFiles, Operation, OutputFormat, Scenario, DEFAULT_ARRAY_COLS};
