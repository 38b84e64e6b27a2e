use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("schema: missing required column(s): {}", .missing.join(", "))]
    Schema { missing: Vec<String> },

    #[error("csv: {0}")]
    Csv(String),

    #[error("record {row}: {message}")]
    Record { row: usize, message: String },

    #[error("empty output: {0}")]
    EmptyOutput(String),

    #[error("encoding: unseen level `{level}` in column `{column}`")]
    Encoding { column: String, level: String },

    #[error("sampling: stratum `{stratum}` has {available} rows, {requested} requested")]
    Sampling { stratum: String, available: usize, requested: usize },

    #[error("split: {0}")]
    Split(String),

    #[error("invalid hyperparameter `{name}`: {message}")]
    Hyperparam { name: String, message: String },

    #[error("training: {0}")]
    Training(String),

    #[error("degenerate leaf: hessian sum plus lambda is zero")]
    DegenerateLeaf,

    #[error("shape: expected {expected} values, got {got}")]
    Shape { expected: usize, got: usize },

    #[error("missing value for feature `{0}` at inference")]
    MissingValue(String),

    #[error("model file: {message} (line {line}, column {column})")]
    ModelFormat { message: String, line: usize, column: usize },

    #[error("model file: unsupported format version {found} (this build reads {supported})")]
    ModelVersion { found: u64, supported: u64 },

    #[error("metrics: {0}")]
    Metric(String),

    #[error("explain: {0}")]
    Explain(String),

    #[error("cluster: {0}")]
    Cluster(String),

    #[error("config: {0}")]
    Config(String),

    #[error("service: {0}")]
    Service(String),
}

impl Error {
    /// Stable short code printed as the prefix of CLI error messages.
    pub fn code(&self) -> &'static str {
        match self {
            Error::Io { .. } => "E-IO",
            Error::Schema { .. } | Error::Csv(_) | Error::Record { .. } => "E-DATA",
            Error::EmptyOutput(_) => "E-EMPTY",
            Error::Encoding { .. } => "E-ENCODE",
            Error::Sampling { .. } | Error::Split(_) => "E-SAMPLE",
            Error::Hyperparam { .. } => "E-PARAM",
            Error::Training(_) | Error::DegenerateLeaf => "E-TRAIN",
            Error::Shape { .. } | Error::MissingValue(_) => "E-SHAPE",
            Error::ModelFormat { .. } | Error::ModelVersion { .. } => "E-MODEL",
            Error::Metric(_) => "E-METRIC",
            Error::Explain(_) => "E-EXPLAIN",
            Error::Cluster(_) => "E-CLUSTER",
            Error::Config(_) => "E-CONFIG",
            Error::Service(_) => "E-SERVICE",
        }
    }

    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io { path: path.into(), source }
    }
}

impl From<csv::Error> for Error {
    fn from(e: csv::Error) -> Self {
        Error::Csv(e.to_string())
    }
}
