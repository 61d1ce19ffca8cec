use std::path::PathBuf;

use thiserror::Error;

use crate::robust::FilterKind;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Error, Debug)]
pub enum Error {
    #[error("point cloud is empty")]
    EmptyCloud,

    #[error("missing column `{0}`")]
    MissingColumn(String),

    #[error("parse failure at line {line}: {message}")]
    ParseFailure { line: usize, message: String },

    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("every neighborhood is degenerate; normals are undefined")]
    DegenerateNeighborhood,

    #[error("cloud has no per-point densities")]
    MissingDensities,

    #[error("scale must be positive, got {0}")]
    NonPositiveScale(f64),

    #[error("filter `{0}` has no cost function")]
    UndefinedCost(FilterKind),

    #[error("error set is empty")]
    EmptyErrors,

    #[error("normal equations are singular (condition number {condition:e})")]
    SingularSystem { condition: f64 },

    #[error("need at least 6 weighted matches, found {found}")]
    InsufficientMatches { found: usize },

    #[error("filter `{0}` has no tunable parameter")]
    NoParameter(FilterKind),

    #[error("no L1 baseline records to compare against")]
    MissingBaseline,

    #[error("invalid filter spec `{spec}`: {reason}")]
    InvalidFilterSpec { spec: String, reason: String },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn parse(line: usize, message: impl Into<String>) -> Self {
        Error::ParseFailure {
            line,
            message: message.into(),
        }
    }
}
