//! Error type carrying the process exit class.
//!
//! Usage and validation problems exit with code 2, runtime and numeric
//! failures with code 1.

use std::fmt;

#[derive(Debug)]
pub enum CliError {
    /// Bad flags, malformed input files, inconsistent configuration.
    Usage(String),
    /// IO failures and numeric problems during a run.
    Runtime(String),
}

impl CliError {
    pub fn usage(msg: impl Into<String>) -> Self {
        CliError::Usage(msg.into())
    }

    pub fn runtime(msg: impl Into<String>) -> Self {
        CliError::Runtime(msg.into())
    }

    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Usage(_) => 2,
            CliError::Runtime(_) => 1,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Usage(msg) | CliError::Runtime(msg) => write!(f, "{msg}"),
        }
    }
}

impl std::error::Error for CliError {}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Runtime(e.to_string())
    }
}

impl From<visreg_core::Error> for CliError {
    fn from(e: visreg_core::Error) -> Self {
        match e {
            // a singular ridge system means the regularization flags do not
            // fit the data; same class as an invalid hyperparameter
            visreg_core::Error::SingularSystem { .. }
            | visreg_core::Error::InvalidHyperparam { .. } => CliError::Usage(e.to_string()),
            other => CliError::Runtime(other.to_string()),
        }
    }
}

pub type CliResult<T> = Result<T, CliError>;
