use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("rank deficient: needed rank {needed}, achieved {achieved}")]
    RankDeficient { needed: usize, achieved: usize },

    #[error("numerical divergence at iteration {iteration}: {what} became non-finite")]
    NumericalDivergence {
        iteration: usize,
        what: &'static str,
    },

    #[error("dense oracle too large: N*d^2 = {size} exceeds {limit}")]
    OracleTooLarge { size: usize, limit: usize },

    #[error("infeasible synthetic spec: {0}")]
    Infeasible(String),

    #[error("{path}:{line}:{column}: {message}")]
    Parse {
        path: PathBuf,
        line: usize,
        column: usize,
        message: String,
    },

    #[error("{path}: header declares {rows}x{cols} = {expected} values, found {found}")]
    DimensionMismatch {
        path: PathBuf,
        rows: usize,
        cols: usize,
        expected: usize,
        found: usize,
    },

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
