//! Failure classes and their exit codes. Config rejections and numerical
//! gate failures exit with distinct codes so callers can tell a bad input
//! from a computation that ran and missed its tolerance.

use std::fmt;
use std::process::ExitCode;

use crate::config::ConfigError;

pub const EXIT_IO: u8 = 1;
pub const EXIT_CONFIG: u8 = 2;
pub const EXIT_NUMERICAL: u8 = 3;

#[derive(Debug)]
pub enum Failure {
    /// The configuration could not be read, parsed, or validated.
    Config(String),
    /// A computation ran but a numerical precondition broke mid-flight.
    Numerical(String),
    /// Filesystem or serialization trouble unrelated to the mathematics.
    Io(String),
}

impl Failure {
    pub fn exit_code(&self) -> ExitCode {
        ExitCode::from(match self {
            Failure::Config(_) => EXIT_CONFIG,
            Failure::Numerical(_) => EXIT_NUMERICAL,
            Failure::Io(_) => EXIT_IO,
        })
    }
}

impl fmt::Display for Failure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Failure::Config(msg) => write!(f, "configuration error: {msg}"),
            Failure::Numerical(msg) => write!(f, "numerical failure: {msg}"),
            Failure::Io(msg) => write!(f, "{msg}"),
        }
    }
}

impl From<ConfigError> for Failure {
    fn from(e: ConfigError) -> Self {
        Failure::Config(e.to_string())
    }
}

impl From<bernstein::Error> for Failure {
    fn from(e: bernstein::Error) -> Self {
        Failure::Numerical(e.to_string())
    }
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Self {
        Failure::Io(e.to_string())
    }
}
