//! Error type shared across the library.

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("io error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },

    #[error("line {line}: expected {expected} comma-separated fields, found {found}")]
    MalformedLine {
        line: usize,
        expected: &'static str,
        found: usize,
    },

    #[error("line {line}: non-numeric value {value:?} in numeric feature {feature:?}")]
    NonNumericFeature {
        line: usize,
        feature: &'static str,
        value: String,
    },

    #[error("unknown attack label {label:?}; not in the family taxonomy")]
    UnknownAttackLabel { label: String },

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("data error: {0}")]
    Data(String),

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("schema fingerprint mismatch: model was fitted on {model}, data carries {data}")]
    SchemaMismatch { model: String, data: String },

    #[error("numeric failure: {0}")]
    Numeric(String),

    #[error("container format error: {0}")]
    Container(String),

    #[error("unsupported container version: found {found:?}, expected {expected:?}")]
    ContainerVersion { found: String, expected: String },

    /// Any failure inside an experiment pipeline, tagged with the stage
    /// that produced it.
    #[error("stage {stage}: {source}")]
    Stage {
        stage: &'static str,
        #[source]
        source: Box<Error>,
    },
}

impl Error {
    pub fn io(path: impl Into<String>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// Process exit code for the CLI: 1 usage/config, 2 data, 3 numeric.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Config(_) => 1,
            Error::Numeric(_) => 3,
            Error::Stage { source, .. } => source.exit_code(),
            _ => 2,
        }
    }
}
