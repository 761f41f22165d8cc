use std::fmt;

use semcom::Error;

/// Process exit status for each failure class.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ExitStatus {
    Success = 0,
    Usage = 1,
    Data = 2,
    Internal = 3,
}

#[derive(Debug)]
pub struct CliError {
    pub status: ExitStatus,
    pub message: String,
}

impl CliError {
    pub fn usage(message: impl Into<String>) -> Self {
        Self {
            status: ExitStatus::Usage,
            message: message.into(),
        }
    }

    pub fn data(message: impl Into<String>) -> Self {
        Self {
            status: ExitStatus::Data,
            message: message.into(),
        }
    }

    pub fn internal(message: impl Into<String>) -> Self {
        Self {
            status: ExitStatus::Internal,
            message: message.into(),
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.message)
    }
}

impl std::error::Error for CliError {}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        let status = match &e {
            Error::OutOfRange { .. } | Error::GuardExceeded(_) => ExitStatus::Usage,
            Error::NonMonotoneLeakage { .. }
            | Error::TuningFailed { .. }
            | Error::SandwichViolation { .. }
            | Error::Internal(_) => ExitStatus::Internal,
            _ => ExitStatus::Data,
        };
        Self {
            status,
            message: e.to_string(),
        }
    }
}

pub type CliResult<T> = Result<T, CliError>;
