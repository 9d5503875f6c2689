use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

/// Coarse classification used by the CLI to pick an exit code.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorKind {
    Validation,
    Estimation,
    MissingArtifact,
    Io,
}

#[derive(Debug, Error)]
pub enum Error {
    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{path}:{line}: malformed record: {message}")]
    Malformed {
        path: PathBuf,
        line: usize,
        message: String,
    },

    #[error("record {id}: unparseable date {value:?}")]
    BadDate { id: String, value: String },

    #[error("series {series}: duplicate period {date}")]
    DuplicatePeriod { series: String, date: String },

    #[error("series {series}: dates not increasing at {date}")]
    NonMonotone { series: String, date: String },

    #[error("series {series}: date {date} is not a valid {expected} period start")]
    FrequencyMismatch {
        series: String,
        date: String,
        expected: &'static str,
    },

    #[error("series {series} line {line}: non-numeric value {value:?}")]
    NonNumeric {
        series: String,
        line: usize,
        value: String,
    },

    #[error("series have no dates in common")]
    EmptyIntersection,

    #[error("validation failed: {0}")]
    Validation(String),

    #[error("non-finite input: {0}")]
    NonFinite(String),

    #[error("{what}: need at least {needed} observations, got {got}")]
    InsufficientData {
        what: String,
        needed: usize,
        got: usize,
    },

    #[error("design matrix is rank deficient; collinear columns: {}", columns.join(", "))]
    RankDeficient { columns: Vec<String> },

    #[error("perfect separation detected in binary response")]
    PerfectSeparation,

    #[error("no convergence after {iterations} iterations (gradient norm {gradient_norm:.3e})")]
    NoConvergence {
        iterations: usize,
        gradient_norm: f64,
    },

    #[error("degenerate variance: {0}")]
    DegenerateVariance(String),

    #[error("total feature importance is zero")]
    ZeroImportance,

    #[error("zero denominator: {0}")]
    ZeroDenominator(String),

    #[error("topic {0:?} is not assigned to any metatopic")]
    TopicNotInMap(String),

    #[error("no pre-training attention available for backward projection")]
    NoBackwardData,

    #[error("missing upstream artifact {}", .0.display())]
    MissingArtifact(PathBuf),

    #[error("config error: {0}")]
    Config(String),
}

impl Error {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub fn kind(&self) -> ErrorKind {
        use Error::*;
        match self {
            Io { .. } => ErrorKind::Io,
            MissingArtifact(_) => ErrorKind::MissingArtifact,
            InsufficientData { .. }
            | RankDeficient { .. }
            | PerfectSeparation
            | NoConvergence { .. }
            | DegenerateVariance(_)
            | ZeroImportance
            | ZeroDenominator(_)
            | NoBackwardData
            | NonFinite(_) => ErrorKind::Estimation,
            _ => ErrorKind::Validation,
        }
    }
}
