use std::path::PathBuf;

/// Harness failures, grouped by exit code.
#[derive(Debug, thiserror::Error)]
pub enum HarnessError {
    #[error("usage: {0}")]
    Usage(String),
    #[error("cannot read config {}: {source}", path.display())]
    ConfigRead {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("cannot parse config {}: {message}", path.display())]
    ConfigParse { path: PathBuf, message: String },
    /// `field` is a dotted path into the config document.
    #[error("invalid config: {field}: {message}")]
    ConfigInvalid { field: String, message: String },
    #[error("cannot write {}: {source}", path.display())]
    Output {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error(transparent)]
    Core(#[from] evocomm_core::Error),
    #[error("{0}")]
    Runtime(String),
}

impl HarnessError {
    pub(crate) fn invalid(field: impl Into<String>, message: impl Into<String>) -> Self {
        HarnessError::ConfigInvalid {
            field: field.into(),
            message: message.into(),
        }
    }

    /// 2 for usage and config problems, 1 for everything that fails while running.
    pub fn exit_code(&self) -> i32 {
        match self {
            HarnessError::Usage(_)
            | HarnessError::ConfigRead { .. }
            | HarnessError::ConfigParse { .. }
            | HarnessError::ConfigInvalid { .. } => 2,
            HarnessError::Output { .. } | HarnessError::Core(_) | HarnessError::Runtime(_) => 1,
        }
    }
}

pub type Result<T, E = HarnessError> = std::result::Result<T, E>;
