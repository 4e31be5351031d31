use std::path::Path;

use slpm::SlpmError;

/// Failure categories, each with its own exit code.
#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("usage error: {0}")]
    Usage(String),
    #[error("input error: {path}, line {line}: {message}")]
    Format { path: String, line: usize, message: String },
    #[error("input error: {0}")]
    Input(String),
    #[error("I/O error: {path}: {source}")]
    Io { path: String, source: std::io::Error },
    #[error("model error: {0}")]
    Model(#[from] SlpmError),
}

impl CliError {
    pub fn io(path: &Path, source: std::io::Error) -> Self {
        CliError::Io { path: path.display().to_string(), source }
    }

    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Usage(_) => 2,
            CliError::Format { .. } | CliError::Input(_) => 3,
            CliError::Io { .. } => 4,
            CliError::Model(_) => 5,
        }
    }
}
