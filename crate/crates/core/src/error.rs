use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("matrix is empty")]
    EmptyMatrix,
    #[error("input is empty: {0}")]
    EmptyInput(&'static str),
    #[error("entry ({row}, {col}) = {value} is not 0 or 1")]
    NonBinaryEntry { row: usize, col: usize, value: f64 },
    #[error("dimension mismatch in {context}: expected {expected}, found {found}")]
    DimensionMismatch {
        context: &'static str,
        expected: usize,
        found: usize,
    },
    #[error("bandwidth must be positive and finite, got {0}")]
    NonPositiveBandwidth(f64),
    #[error("kernel scale must be positive and finite, got {0}")]
    NonPositiveScale(f64),
    #[error("rho must be positive and finite, got {0}")]
    NonPositiveRho(f64),
    #[error("hyperedge {index} has negative weight {value}")]
    NegativeWeight { index: usize, value: f64 },
    #[error("gamma must be nonnegative and finite, got {0}")]
    NegativeGamma(f64),
    #[error("invalid value for {name}: {value}")]
    InvalidParameter { name: &'static str, value: f64 },
    #[error("system matrix is not positive definite")]
    SingularSystem,
    #[error("non-finite value in {0}")]
    NonFinite(&'static str),
    #[error("class {0} has no samples")]
    EmptyClass(usize),
    #[error("attribute prior {index} = {value} is outside (0, 1)")]
    PriorOutOfRange { index: usize, value: f64 },
    #[error("class {class} has {available} test samples, cannot move {requested}")]
    InsufficientSamples {
        class: usize,
        available: usize,
        requested: usize,
    },
    #[error("labels contain a single class, AUC is undefined")]
    DegenerateLabels,
    #[error("training and test classes overlap: {0:?}")]
    Overlap(Vec<usize>),
    #[error("invalid counts: {0}")]
    InvalidCounts(String),
    #[error("parse error at line {line}, column {column}: {message}")]
    Parse {
        line: usize,
        column: usize,
        message: String,
    },
    #[error("line {line} has {found} values, expected {expected}")]
    RaggedRow {
        line: usize,
        expected: usize,
        found: usize,
    },
    #[error("bad magic bytes")]
    MagicMismatch,
    #[error("unsupported format version {found} (expected {expected})")]
    VersionMismatch { found: u32, expected: u32 },
    #[error("corrupt file: {0}")]
    CorruptFile(String),
    #[error("configuration: {0}")]
    Config(String),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
}

/// Coarse classification used to pick a process exit code.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorKind {
    Validation,
    Data,
    Numerical,
}

impl Error {
    pub fn kind(&self) -> ErrorKind {
        use Error::*;
        match self {
            SingularSystem | NonFinite(_) => ErrorKind::Numerical,
            NonPositiveBandwidth(_)
            | NonPositiveScale(_)
            | NonPositiveRho(_)
            | NegativeGamma(_)
            | InvalidParameter { .. }
            | PriorOutOfRange { .. }
            | Overlap(_)
            | InvalidCounts(_)
            | Config(_) => ErrorKind::Validation,
            _ => ErrorKind::Data,
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}

pub(crate) fn check_dim(context: &'static str, expected: usize, found: usize) -> Result<()> {
    if expected == found {
        Ok(())
    } else {
        Err(Error::DimensionMismatch {
            context,
            expected,
            found,
        })
    }
}
