use std::path::PathBuf;

use crate::month::Month;

/// Every failure the library can report.
///
/// Variants fall into two families: configuration problems (bad thresholds,
/// bad flags) and data problems (malformed files, degenerate series). The
/// CLI maps them to exit codes 2 and 1 respectively via [`Error::is_config`].
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("invalid matrix: {0}")]
    InvalidMatrix(String),

    #[error("column `{0}` has zero variance")]
    ZeroVarianceColumn(String),

    #[error("column `{label}` is not centered (mean {mean:e})")]
    NotCentered { label: String, mean: f64 },

    #[error("matrix is not symmetric: |a[{row},{col}] - a[{col},{row}]| = {gap:e}")]
    NotSymmetric { row: usize, col: usize, gap: f64 },

    #[error("Jacobi eigensolver did not converge within {0} sweeps")]
    NonConvergence(usize),

    #[error("vector has zero norm")]
    ZeroNormVector,

    #[error("length mismatch: {left} vs {right}")]
    LengthMismatch { left: usize, right: usize },

    #[error("split of cluster with {size} members would leave a child empty")]
    DegenerateSplit { size: usize },

    #[error("series of length {len} is too short for lag {lag}")]
    SeriesTooShort { len: usize, lag: usize },

    #[error("non-positive value {value} at {month}")]
    NonPositiveValue { month: Month, value: f64 },

    #[error("month axis of {available} months is shorter than the {required}-month window")]
    AxisTooShort { available: usize, required: usize },

    #[error("variable `{label}`: {source}")]
    Variable {
        label: String,
        #[source]
        source: Box<Error>,
    },

    #[error("window {start}..{end}: {source}")]
    Window {
        start: Month,
        end: Month,
        #[source]
        source: Box<Error>,
    },

    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("series `{label}` has a gap at {month}")]
    GapInSeries { label: String, month: Month },

    #[error("no metadata for variable `{0}`")]
    MissingMetadata(String),

    #[error("duplicate month {0}")]
    DuplicateMonth(Month),

    #[error("launch month {launch} is outside the axis {start}..{end}")]
    LaunchOutsideAxis { launch: Month, start: Month, end: Month },

    #[error("results cover different column sets ({0})")]
    UniverseMismatch(String),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{path}: {source}")]
    Json {
        path: PathBuf,
        #[source]
        source: serde_json::Error,
    },
}

impl Error {
    /// True for errors caused by the caller's configuration rather than data.
    pub fn is_config(&self) -> bool {
        match self {
            Error::InvalidConfig(_) => true,
            Error::Variable { source, .. } | Error::Window { source, .. } => source.is_config(),
            _ => false,
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn in_variable(self, label: &str) -> Self {
        Error::Variable {
            label: label.to_owned(),
            source: Box::new(self),
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
