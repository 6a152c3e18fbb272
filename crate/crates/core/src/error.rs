use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("node {node} out of range for graph with {num_nodes} nodes")]
    NodeOutOfRange { node: usize, num_nodes: usize },

    #[error("push-sum weight of agent {agent} collapsed to {weight:e} at iteration {t}")]
    MassUnderflow { agent: usize, t: usize, weight: f64 },

    #[error("non-finite state on agent {agent} at iteration {t}")]
    Divergence { agent: usize, t: usize },

    #[error("numerical error: {0}")]
    Numerical(String),

    #[error("data error: {0}")]
    Data(String),

    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("feature index {index} at line {line} exceeds declared dimension {dim}")]
    Dimension { line: usize, index: usize, dim: usize },

    #[error("config error: {0}")]
    Config(String),

    #[error("dataset not found at {}; expected a libsvm text file (e.g. the a9a training set)", path.display())]
    DatasetMissing { path: PathBuf },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    pub(crate) fn arg(msg: impl Into<String>) -> Self {
        Error::InvalidArgument(msg.into())
    }
}
