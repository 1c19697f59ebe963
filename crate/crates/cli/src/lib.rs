//! IO companion to `visreg-core`: dataset loaders, binary and text file
//! formats, experiment reports, and the command implementations behind
//! the `visreg` binary.

pub mod commands;
pub mod config;
pub mod error;
pub mod formats;
pub mod ingest;
pub mod report;

pub use error::{CliError, CliResult};
