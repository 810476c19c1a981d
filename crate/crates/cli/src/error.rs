use geb_core::GebError;
use std::fmt;

/// Error carrying the process exit code: 2 for bad input, 1 for numeric trouble.
#[derive(Debug)]
pub struct CliError {
    pub code: i32,
    pub message: String,
}

impl CliError {
    pub fn usage(message: impl Into<String>) -> Self {
        CliError {
            code: 2,
            message: message.into(),
        }
    }

    pub fn flag(flag: &str, message: impl fmt::Display) -> Self {
        Self::usage(format!("--{flag}: {message}"))
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.message)
    }
}

impl From<GebError> for CliError {
    fn from(e: GebError) -> Self {
        let code = match e {
            GebError::NumericFailure { .. } => 1,
            GebError::InvalidArgument(_) | GebError::InvalidConfig(_) => 2,
        };
        CliError {
            code,
            message: e.to_string(),
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        Self::usage(e.to_string())
    }
}

pub type CliResult<T> = Result<T, CliError>;
