use std::fmt;

/// Failure of a subcommand, carrying its exit code.
#[derive(Debug)]
pub enum CliError {
    /// Bad flags, config keys or values: exit 1.
    Usage(String),
    /// Unreadable, malformed or mismatched data: exit 2.
    Data(String),
    /// The hosted corrector failed and no fallback was allowed: exit 3.
    Remote(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => 1,
            CliError::Data(_) => 2,
            CliError::Remote(_) => 3,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Usage(m) => write!(f, "usage error: {m}"),
            CliError::Data(m) => write!(f, "data error: {m}"),
            CliError::Remote(m) => write!(f, "remote corrector failed: {m}"),
        }
    }
}

impl std::error::Error for CliError {}

impl From<signbridge::Error> for CliError {
    fn from(e: signbridge::Error) -> Self {
        CliError::Data(e.to_string())
    }
}

pub type CliResult<T> = std::result::Result<T, CliError>;
