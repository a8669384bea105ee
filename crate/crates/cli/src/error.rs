use std::path::{Path, PathBuf};

/// Failures mapped onto the stable exit codes.
#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("invalid input: {0}")]
    Invalid(String),
    #[error("no convergence: {0}")]
    NotConverged(String),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            Self::Io { .. } => 1,
            Self::Invalid(_) => 2,
            Self::NotConverged(_) => 3,
        }
    }

    pub fn io(path: &Path, source: std::io::Error) -> Self {
        Self::Io {
            path: path.to_path_buf(),
            source,
        }
    }

    pub fn csv(path: &Path, e: csv::Error) -> Self {
        match e.into_kind() {
            csv::ErrorKind::Io(source) => Self::io(path, source),
            other => Self::Invalid(format!("{}: {other:?}", path.display())),
        }
    }
}

pub type Result<T> = std::result::Result<T, CliError>;
