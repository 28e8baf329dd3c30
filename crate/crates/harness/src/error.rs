use std::path::{Path, PathBuf};

#[derive(Debug, thiserror::Error)]
pub enum HarnessError {
    #[error("configuration error: {0}")]
    Config(String),
    #[error("invalid input {path}: {message}")]
    Schema { path: PathBuf, message: String },
    #[error("run diverged at step {step} (t = {time})")]
    Divergence { step: u64, time: f64 },
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}: {message}")]
    Format { path: PathBuf, message: String },
    #[error(transparent)]
    Core(#[from] mrsav_core::Error),
}

impl HarnessError {
    pub fn io(path: impl AsRef<Path>, source: std::io::Error) -> Self {
        HarnessError::Io {
            path: path.as_ref().to_path_buf(),
            source,
        }
    }

    pub fn schema(path: impl AsRef<Path>, message: impl Into<String>) -> Self {
        HarnessError::Schema {
            path: path.as_ref().to_path_buf(),
            message: message.into(),
        }
    }

    pub fn format(path: impl AsRef<Path>, message: impl Into<String>) -> Self {
        HarnessError::Format {
            path: path.as_ref().to_path_buf(),
            message: message.into(),
        }
    }

    /// Process exit status: 2 for bad configuration or input data,
    /// 3 for a diverged run, 4 for I/O and file-format failures.
    pub fn exit_code(&self) -> i32 {
        use mrsav_core::Error as E;
        match self {
            HarnessError::Config(_) | HarnessError::Schema { .. } => 2,
            HarnessError::Divergence { .. } => 3,
            HarnessError::Io { .. } | HarnessError::Format { .. } => 4,
            HarnessError::Core(e) => match e {
                E::Divergence { .. } | E::SingularScalarSolve { .. } | E::NumericFault(_) => 3,
                _ => 2,
            },
        }
    }
}

pub type Result<T> = std::result::Result<T, HarnessError>;
