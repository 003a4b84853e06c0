use std::path::PathBuf;

use serde_json::{json, Value};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),

    #[error("{file}:{line}:{column}: {message}")]
    SchemaMismatch {
        file: PathBuf,
        line: u64,
        column: usize,
        message: String,
    },

    #[error("{file}:{line}: duplicate node id '{id}'")]
    DuplicateNodeId { file: PathBuf, line: u64, id: String },

    #[error("{file}:{line}:{column}: cell '{value}' is not a finite number")]
    NonNumericCell {
        file: PathBuf,
        line: u64,
        column: usize,
        value: String,
    },

    #[error("{path}: {message}")]
    Io { path: PathBuf, message: String },

    #[error(transparent)]
    Core(#[from] macnet::Error),
}

pub type CliResult<T> = Result<T, CliError>;

impl CliError {
    pub fn io(path: impl Into<PathBuf>, err: impl std::fmt::Display) -> Self {
        CliError::Io {
            path: path.into(),
            message: err.to_string(),
        }
    }

    /// 1 usage, 2 data, 3 numerical.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => 1,
            CliError::Core(e) if e.is_numerical() => 3,
            CliError::Core(macnet::Error::InvalidGamma(_) | macnet::Error::InvalidThreshold(_)) => 1,
            _ => 2,
        }
    }

    fn kind(&self) -> String {
        match self {
            CliError::Usage(_) => "Usage".into(),
            CliError::SchemaMismatch { .. } => "SchemaMismatch".into(),
            CliError::DuplicateNodeId { .. } => "DuplicateNodeId".into(),
            CliError::NonNumericCell { .. } => "NonNumericCell".into(),
            CliError::Io { .. } => "Io".into(),
            CliError::Core(e) => {
                let dbg = format!("{e:?}");
                dbg.split(|c: char| !c.is_alphanumeric()).next().unwrap_or("Error").to_string()
            }
        }
    }

    pub fn to_json(&self) -> Value {
        let mut v = json!({
            "error": self.kind(),
            "message": self.to_string(),
            "exit_code": self.exit_code(),
        });
        let extra = match self {
            CliError::SchemaMismatch { file, line, column, .. }
            | CliError::NonNumericCell { file, line, column, .. } => {
                json!({"file": file, "line": line, "column": column})
            }
            CliError::DuplicateNodeId { file, line, id } => json!({"file": file, "line": line, "id": id}),
            CliError::Io { path, .. } => json!({"file": path}),
            _ => Value::Null,
        };
        if let (Value::Object(map), Value::Object(more)) = (&mut v, extra) {
            map.extend(more);
        }
        v
    }
}
