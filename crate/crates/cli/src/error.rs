use puffer_core::PufferError;
use serde::Serialize;
use thiserror::Error;

pub const EXIT_OK: i32 = 0;
pub const EXIT_VERIFY_FAILED: i32 = 1;
pub const EXIT_INPUT: i32 = 2;
pub const EXIT_NUMERICAL: i32 = 3;

/// Where in the input file a parse error occurred. Rows count data records
/// from 1 (the header is not a row); `line` is the physical line number.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Location {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub row: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub line: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub column: Option<String>,
}

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{message}")]
    Parse { message: String, location: Location },

    #[error("{0}")]
    Usage(String),

    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },

    #[error(transparent)]
    Core(#[from] PufferError),
}

#[derive(Serialize)]
struct ErrorRecord<'a> {
    error: &'a str,
    message: String,
    exit_code: i32,
    #[serde(flatten)]
    location: Option<&'a Location>,
}

impl CliError {
    pub fn parse(message: impl Into<String>, row: Option<usize>, line: Option<u64>, column: Option<&str>) -> Self {
        CliError::Parse {
            message: message.into(),
            location: Location { row, line, column: column.map(str::to_string) },
        }
    }

    pub fn kind(&self) -> &'static str {
        match self {
            CliError::Parse { .. } => "parse",
            CliError::Usage(_) => "usage",
            CliError::Io { .. } => "io",
            CliError::Core(e) => e.kind(),
        }
    }

    /// Everything attributable to the data or the arguments is an input
    /// error, including rank deficiency; only solver kernel failures are
    /// numerical.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Core(PufferError::Numerical(_)) => EXIT_NUMERICAL,
            _ => EXIT_INPUT,
        }
    }

    /// Single-line JSON record for the diagnostic stream.
    pub fn record(&self) -> String {
        let location = match self {
            CliError::Parse { location, .. } => Some(location),
            _ => None,
        };
        let rec = ErrorRecord { error: self.kind(), message: self.to_string(), exit_code: self.exit_code(), location };
        serde_json::to_string(&rec).unwrap_or_else(|_| format!("{{\"error\":\"{}\"}}", self.kind()))
    }
}

pub type Result<T> = std::result::Result<T, CliError>;
