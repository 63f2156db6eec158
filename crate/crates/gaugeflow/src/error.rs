use std::io;
use std::path::PathBuf;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: io::Error,
    },
    #[error("format error: {0}")]
    Format(String),
    #[error("truncated file: expected {expected} bytes, found {found}")]
    Truncated { expected: u64, found: u64 },
    #[error("dimension error: {0}")]
    Dimension(String),
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("baseline `{baseline}` has no {split} rows for n_dim = {n_dim}")]
    MissingBaseline {
        baseline: String,
        n_dim: usize,
        split: String,
    },
    #[error("unsupported model kind `{0}` for this operation")]
    UnsupportedKind(String),
    #[error("params column for {model} at n_dim = {n_dim} is {found}, expected {expected}")]
    ParamMismatch {
        model: String,
        n_dim: usize,
        expected: usize,
        found: usize,
    },
    #[error(transparent)]
    Core(#[from] gaugeflow_core::Error),
    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
