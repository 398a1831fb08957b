use serde_json::{json, Value};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{path}:{line}:{column}: {message}")]
    Parse {
        path: String,
        line: usize,
        column: usize,
        message: String,
    },
    /// Bad flags, unreadable files, or a scenario that breaks a model rule.
    #[error("{0}")]
    Input(String),
    /// A check the command was asked to perform did not hold.
    #[error("{0}")]
    Validation(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Validation(_) => 1,
            CliError::Parse { .. } | CliError::Input(_) => 2,
        }
    }

    pub fn to_json(&self) -> Value {
        match self {
            CliError::Parse {
                path,
                line,
                column,
                message,
            } => json!({"error": {
                "kind": "parse", "path": path, "line": line, "column": column, "message": message,
            }}),
            CliError::Input(m) => json!({"error": {"kind": "input", "message": m}}),
            CliError::Validation(m) => json!({"error": {"kind": "validation", "message": m}}),
        }
    }
}

impl From<learnsel::Error> for CliError {
    fn from(e: learnsel::Error) -> Self {
        CliError::Input(e.to_string())
    }
}
