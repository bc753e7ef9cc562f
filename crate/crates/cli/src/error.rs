use serde::Serialize;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("parse error at line {line}, column {column}: {message}")]
    Parse {
        line: usize,
        column: usize,
        message: String,
        unknown_key: bool,
    },

    #[error("validation error: {0}")]
    Validation(String),

    #[error(transparent)]
    Core(otto_core::Error),

    #[error("i/o error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

impl CliError {
    pub fn from_json(e: serde_json::Error) -> Self {
        let message = e.to_string();
        CliError::Parse {
            line: e.line(),
            column: e.column(),
            unknown_key: message.starts_with("unknown field"),
            message,
        }
    }

    pub fn io(path: impl AsRef<std::path::Path>, source: std::io::Error) -> Self {
        CliError::Io {
            path: path.as_ref().display().to_string(),
            source,
        }
    }

    /// Process exit status: 2 when no allocation refrigerates, 1 otherwise.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Core(otto_core::Error::NoFeasibleRefrigerator { .. }) => 2,
            _ => 1,
        }
    }

    fn kind(&self) -> &'static str {
        match self {
            CliError::Parse {
                unknown_key: true, ..
            } => "unknown-key",
            CliError::Parse { .. } => "parse",
            CliError::Validation(_) => "validation",
            CliError::Core(otto_core::Error::NoFeasibleRefrigerator { .. }) => {
                "no-feasible-refrigerator"
            }
            CliError::Core(_) => "computation",
            CliError::Io { .. } => "io",
        }
    }

    /// Structured form written to the error stream.
    pub fn to_json(&self) -> serde_json::Value {
        #[derive(Serialize)]
        struct Body<'a> {
            kind: &'a str,
            message: String,
            #[serde(skip_serializing_if = "Option::is_none")]
            line: Option<usize>,
            #[serde(skip_serializing_if = "Option::is_none")]
            column: Option<usize>,
        }
        let (line, column) = match self {
            CliError::Parse { line, column, .. } => (Some(*line), Some(*column)),
            _ => (None, None),
        };
        serde_json::json!({
            "error": Body {
                kind: self.kind(),
                message: self.to_string(),
                line,
                column,
            }
        })
    }
}

impl From<otto_core::Error> for CliError {
    fn from(e: otto_core::Error) -> Self {
        match e {
            otto_core::Error::InvalidParameter { field, reason } => {
                CliError::Validation(format!("{field} {reason}"))
            }
            other => CliError::Core(other),
        }
    }
}
