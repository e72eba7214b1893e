use std::fmt;

use serde::Serialize;

/// Error classes with their process exit codes.
#[derive(Debug)]
pub enum CliError {
    /// Malformed scenario file or override (exit 2).
    Parse(String),
    /// Scenario parsed but is not runnable (exit 3).
    Validation(String),
    /// A verifier found a profitable deviation (exit 4). The report has
    /// already been written.
    Verification(String),
    /// Anything else, e.g. I/O (exit 1).
    Runtime(anyhow::Error),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Parse(_) => 2,
            CliError::Validation(_) => 3,
            CliError::Verification(_) => 4,
            CliError::Runtime(_) => 1,
        }
    }

    pub fn kind(&self) -> &'static str {
        match self {
            CliError::Parse(_) => "parse",
            CliError::Validation(_) => "validation",
            CliError::Verification(_) => "verification",
            CliError::Runtime(_) => "runtime",
        }
    }

    /// One-line JSON for stderr.
    pub fn to_json(&self) -> String {
        #[derive(Serialize)]
        struct Structured<'a> {
            error: &'a str,
            exit_code: i32,
            message: String,
        }
        serde_json::to_string(&Structured {
            error: self.kind(),
            exit_code: self.exit_code(),
            message: self.to_string(),
        })
        .expect("plain struct serializes")
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Parse(m) | CliError::Validation(m) | CliError::Verification(m) => f.write_str(m),
            CliError::Runtime(e) => write!(f, "{e:#}"),
        }
    }
}

impl std::error::Error for CliError {}

impl From<anyhow::Error> for CliError {
    fn from(e: anyhow::Error) -> Self {
        CliError::Runtime(e)
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Runtime(e.into())
    }
}

/// Core errors that mean "this scenario cannot run" map to validation;
/// everything else is a runtime failure.
impl From<ratcensor_core::CoreError> for CliError {
    fn from(e: ratcensor_core::CoreError) -> Self {
        use ratcensor_core::CoreError as E;
        match e {
            E::Io(_) | E::Csv(_) => CliError::Runtime(e.into()),
            _ => CliError::Validation(e.to_string()),
        }
    }
}

pub type CliResult<T> = Result<T, CliError>;
