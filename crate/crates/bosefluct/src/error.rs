use std::path::PathBuf;

use bosefluct_core::Error as CoreError;

#[derive(Debug, thiserror::Error)]
pub enum AppError {
    #[error("configuration error: {0}")]
    Config(String),
    #[error("{0}")]
    Numeric(#[from] CoreError),
    #[error("N = {n}, replica {replica}: {source}")]
    Replica {
        n: usize,
        replica: usize,
        #[source]
        source: CoreError,
    },
    #[error("{what}")]
    Statistics { what: String },
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}: {source}")]
    Csv {
        path: PathBuf,
        #[source]
        source: csv::Error,
    },
}

impl AppError {
    pub fn config(msg: impl Into<String>) -> Self {
        AppError::Config(msg.into())
    }

    /// Process exit code: 2 configuration (and unreadable or unwritable
    /// files), 3 numerical failure, 4 non-convergence.
    pub fn exit_code(&self) -> i32 {
        let core = match self {
            AppError::Config(_) | AppError::Io { .. } | AppError::Csv { .. } => return 2,
            AppError::Statistics { .. } => return 3,
            AppError::Numeric(e) | AppError::Replica { source: e, .. } => e,
        };
        match core {
            CoreError::NonConvergent { .. } => 4,
            _ => 3,
        }
    }
}

pub type AppResult<T> = Result<T, AppError>;
