use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = LvtError> = std::result::Result<T, E>;

/// Which field a diagnostic refers to.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FieldName {
    V,
    K,
    A,
    Mu,
}

impl std::fmt::Display for FieldName {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            FieldName::V => "V",
            FieldName::K => "K",
            FieldName::A => "A",
            FieldName::Mu => "mu",
        })
    }
}

#[derive(Debug, Error)]
pub enum LvtError {
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("grid shape mismatch: expected {expected:?}, got {got:?}")]
    ShapeMismatch {
        expected: (usize, usize),
        got: (usize, usize),
    },

    #[error("time step {dt} exceeds the stability bound; maximal admissible dt is {max_dt}")]
    UnstableTimeStep { dt: f64, max_dt: f64 },

    #[error("non-finite {field} at step {step}, cell ({i}, {j})")]
    NonFiniteGrid {
        field: FieldName,
        step: usize,
        i: usize,
        j: usize,
    },

    #[error("non-finite {field} on path {path} at step {step}")]
    NonFinitePath {
        field: FieldName,
        path: usize,
        step: usize,
    },

    #[error("no interior fixed point: alpha = {alpha} does not exceed theta = {theta}")]
    NoInteriorPoint { alpha: f64, theta: f64 },

    #[error("snapshots cover [{have_from}, {have_to}] but [{need_from}, {need_to}] is required")]
    InsufficientCoverage {
        have_from: f64,
        have_to: f64,
        need_from: f64,
        need_to: f64,
    },

    #[error("zero denominator in {0}")]
    ZeroDenominator(&'static str),

    #[error("empty input to {0}")]
    EmptyInput(&'static str),

    #[error("all {total} cells excluded from {what}")]
    AllExcluded { what: &'static str, total: usize },

    #[error("config: {0}")]
    Config(String),

    #[error("io error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),
}

impl LvtError {
    pub(crate) fn param(name: &'static str, reason: impl Into<String>) -> Self {
        LvtError::InvalidParameter {
            name,
            reason: reason.into(),
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        LvtError::Io {
            path: path.into(),
            source,
        }
    }
}
