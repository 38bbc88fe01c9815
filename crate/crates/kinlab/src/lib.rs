//! Standard-library companion to `kinlab-core`: JSON configs, CSV/SVG/JSON
//! artifacts, a thread-pool driver for particle runs, and the canned
//! experiments behind the `kinlab` binary.
//!
//! The numerics live in `kinlab-core`; everything here is plumbing with one
//! hard promise: given the same config and seed, the primary CSV outputs are
//! byte-identical from run to run.

pub mod config;
pub mod experiments;
pub mod io;
pub mod parallel;
pub mod report;
pub mod runner;
pub mod svg;

use std::fmt;

/// Process-level failure classes, one per documented exit code.
#[derive(Debug)]
pub enum CliError {
    /// Bad config file or invalid problem description. Exit code 2.
    Config(String),
    /// An attached acceptance assertion failed. Exit code 3.
    Check(String),
    /// The computation itself failed (stability, convergence, I/O). Exit code 4.
    Numeric(String),
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Config(m) => write!(f, "config error: {m}"),
            CliError::Check(m) => write!(f, "acceptance failure: {m}"),
            CliError::Numeric(m) => write!(f, "numeric failure: {m}"),
        }
    }
}

impl std::error::Error for CliError {}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => 2,
            CliError::Check(_) => 3,
            CliError::Numeric(_) => 4,
        }
    }
}

/// Maps a core error to the exit-code class it belongs to: violated
/// preconditions read as config problems, runtime breakdowns as numeric ones.
impl From<kinlab_core::Error> for CliError {
    fn from(e: kinlab_core::Error) -> Self {
        use kinlab_core::Error as E;
        match e {
            E::Argument(_) | E::Domain(_) | E::Schedule(_) | E::Size { .. } => {
                CliError::Config(e.to_string())
            }
            _ => CliError::Numeric(e.to_string()),
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Numeric(format!("i/o: {e}"))
    }
}

pub type CliResult<T> = Result<T, CliError>;
