//! Exit-code contract: 0 success, 1 numerical failure, 2 usage or input
//! failure. Clap's own usage errors already exit with 2.

use std::fmt;

use alpha_discrepancy::Error as CoreError;

#[derive(Debug)]
pub enum CliError {
    /// Bad flags, unreadable or malformed input files, violated preconditions.
    Usage(String),
    /// The computation itself failed (non-finite values, rank loss, ...).
    Numerical(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => 2,
            CliError::Numerical(_) => 1,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Usage(m) | CliError::Numerical(m) => f.write_str(m),
        }
    }
}

impl From<CoreError> for CliError {
    fn from(e: CoreError) -> Self {
        match e {
            CoreError::Domain(_)
            | CoreError::SupportMismatch
            | CoreError::UnsupportedLimit
            | CoreError::UnsupportedKernel(_)
            | CoreError::WeightsParse { .. } => CliError::Usage(e.to_string()),
            _ => CliError::Numerical(e.to_string()),
        }
    }
}

pub type CliResult<T> = Result<T, CliError>;
