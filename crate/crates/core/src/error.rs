use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("malformed url {url:?}: {reason}")]
    MalformedUrl { url: String, reason: String },

    #[error("resolver failed for feature {feature}: {reason}")]
    ResolverFailure { feature: String, reason: String },

    #[error("missing features: {}", .0.join(", "))]
    MissingFeature(Vec<String>),

    #[error("no `label` or `Result` column in {0}")]
    MissingLabelColumn(String),

    #[error("non-numeric cell {value:?} at row {row}, column {column:?}")]
    NonNumericCell {
        row: usize,
        column: String,
        value: String,
    },

    #[error("invalid label {value} at row {row} (column {column})")]
    InvalidLabel {
        row: usize,
        column: String,
        value: f64,
    },

    #[error("dataset is empty")]
    EmptyDataset,

    #[error("feature {feature:?} cannot be mapped in dataset {dataset:?}")]
    UnmappableFeature { dataset: String, feature: String },

    #[error("could not produce {requested} unique variants within {attempts} attempts (got {produced})")]
    ExhaustedRuleSpace {
        requested: usize,
        produced: usize,
        attempts: usize,
    },

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("training data contains a single class")]
    SingleClassDataset,

    #[error("loss became non-finite at iteration {iteration}; learning rate too high?")]
    NonFiniteLoss { iteration: usize },

    #[error("m = {m} out of range 1..={dim}")]
    InvalidM { m: usize, dim: usize },

    #[error("length mismatch: {left} labels vs {right} predictions")]
    LengthMismatch { left: usize, right: usize },

    #[error("empty input")]
    EmptyInput,

    #[error("ROC needs both classes present")]
    SingleClassInput,

    #[error("fold {fold}: {source}")]
    Fold {
        fold: usize,
        #[source]
        source: Box<Error>,
    },

    #[error("unknown feature {0:?}")]
    UnknownFeature(String),

    #[error("{got} features exceeds the exact-enumeration limit of {max}")]
    TooManyFeatures { got: usize, max: usize },

    #[error("all perturbations are identical")]
    DegeneratePerturbations,

    #[error("fusion produced empty IG and XAI feature sets")]
    EmptyFeatureSets,

    #[error("reference set is empty")]
    EmptyReferenceSet,

    #[error("context id mismatch: {0}")]
    IdMismatch(String),

    #[error("CIS baseline is zero")]
    ZeroBaseline,

    #[error("unsupported model file version {0}")]
    UnsupportedVersion(u32),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// True for errors caused by user input (files, flags, URLs) rather
    /// than a numerical or internal failure.
    pub fn is_input_error(&self) -> bool {
        match self {
            Error::Fold { source, .. } => source.is_input_error(),
            Error::NonFiniteLoss { .. }
            | Error::DegeneratePerturbations
            | Error::ZeroBaseline
            | Error::IdMismatch(_)
            | Error::LengthMismatch { .. }
            | Error::ResolverFailure { .. } => false,
            _ => true,
        }
    }

    pub(crate) fn in_fold(self, fold: usize) -> Self {
        Error::Fold {
            fold,
            source: Box::new(self),
        }
    }
}
