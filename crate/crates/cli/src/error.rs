use std::fmt;
use std::process::ExitCode;

use sandpile_core::SandpileError;

#[derive(Debug)]
pub enum CliError {
    /// Bad flags or flag combinations. Exit 2.
    Usage(String),
    /// Unreadable or invalid input data. Exit 3.
    Input(String),
    /// A verification or oracle check failed. Exit 1.
    Mismatch(String),
}

impl CliError {
    pub fn exit_code(&self) -> ExitCode {
        ExitCode::from(match self {
            CliError::Mismatch(_) => 1,
            CliError::Usage(_) => 2,
            CliError::Input(_) => 3,
        })
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Usage(m) => write!(f, "usage error: {m}"),
            CliError::Input(m) => write!(f, "input error: {m}"),
            CliError::Mismatch(m) => write!(f, "mismatch: {m}"),
        }
    }
}

impl From<SandpileError> for CliError {
    fn from(e: SandpileError) -> Self {
        match e {
            SandpileError::InvalidArgument(_) | SandpileError::InvalidSquare(_) => CliError::Usage(e.to_string()),
            _ => CliError::Input(e.to_string()),
        }
    }
}

/// Failures writing outputs are reported as input-data errors: the output
/// location the user supplied is unusable.
pub fn io_error(path: &std::path::Path, e: impl fmt::Display) -> CliError {
    CliError::Input(format!("{}: {e}", path.display()))
}

pub type CliResult<T = ()> = Result<T, CliError>;
