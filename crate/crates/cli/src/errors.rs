//! Error classification for the command line: every failure is sorted
//! into one of three classes, each with its own exit code, so scripts can
//! tell a bad flag from a missing file from a solver blow-up.

use std::fmt;

use quantgraph_core::Error as CoreError;

/// Exit code for configuration problems (bad flags, bad config files,
/// invalid problem setups). Matches the code clap uses for usage errors.
pub const EXIT_CONFIG: u8 = 2;
/// Exit code for file-system problems (unreadable inputs, unwritable
/// output directories).
pub const EXIT_IO: u8 = 3;
/// Exit code for solver failures at run time (diverged dynamics,
/// non-finite objectives).
pub const EXIT_SOLVER: u8 = 4;

#[derive(Debug)]
pub enum CliError {
    Config(String),
    Io(String),
    Solver(String),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Config(_) => EXIT_CONFIG,
            CliError::Io(_) => EXIT_IO,
            CliError::Solver(_) => EXIT_SOLVER,
        }
    }

    /// File-system error with the offending path in the message.
    pub fn io(path: &std::path::Path, err: impl fmt::Display) -> Self {
        CliError::Io(format!("{}: {err}", path.display()))
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Config(msg) => write!(f, "configuration error: {msg}"),
            CliError::Io(msg) => write!(f, "file error: {msg}"),
            CliError::Solver(msg) => write!(f, "solver error: {msg}"),
        }
    }
}

impl From<CoreError> for CliError {
    fn from(err: CoreError) -> Self {
        match err {
            // Failures decided before any search runs: the problem or its
            // options are malformed. The bare message is kept — this
            // type's Display adds the "configuration error:" prefix.
            CoreError::Config(msg) => CliError::Config(msg),
            CoreError::Shape(_)
            | CoreError::Weights { .. }
            | CoreError::Encoding { .. }
            | CoreError::Resource { .. }
            | CoreError::Graph(_)
            | CoreError::Serialization(_) => CliError::Config(err.to_string()),
            // Failures that surface mid-run.
            CoreError::Objective { .. } | CoreError::Divergence { .. } => {
                CliError::Solver(err.to_string())
            }
        }
    }
}
