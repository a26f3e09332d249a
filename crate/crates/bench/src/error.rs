use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum BenchError {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{path}:{line}: {message}")]
    Parse {
        path: PathBuf,
        line: usize,
        message: String,
    },

    #[error("{path}:{line}: duplicate input x = {x}")]
    DuplicateInput { path: PathBuf, line: usize, x: f64 },

    #[error("config: {0}")]
    Config(String),

    #[error(transparent)]
    Core(#[from] mgpns_core::Error),

    #[error("{path}: {source}")]
    Csv {
        path: PathBuf,
        #[source]
        source: csv::Error,
    },
}

pub type Result<T, E = BenchError> = std::result::Result<T, E>;
