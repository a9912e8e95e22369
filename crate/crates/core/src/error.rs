use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, AuditError>;

/// Coarse grouping of errors, used by front ends to pick exit codes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorFamily {
    Io,
    InvalidData,
    InsufficientData,
    InvalidConfig,
}

#[derive(Debug, Error)]
pub enum AuditError {
    #[error("missing file: {}", path.display())]
    MissingFile { path: PathBuf },

    #[error("i/o error on {}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("malformed row in {}:{line}: {reason}", file.display())]
    MalformedRow {
        file: PathBuf,
        line: u64,
        reason: String,
    },

    #[error("inconsistent channel count in {}: expected {expected}, found {found}", file.display())]
    InconsistentChannelCount {
        file: PathBuf,
        expected: usize,
        found: usize,
    },

    #[error("unknown class label `{label}` in {}", file.display())]
    UnknownClassLabel { file: PathBuf, label: String },

    #[error("trimming {removed} samples exceeds length {length} of trial `{trial}`")]
    TrimExceedsLength {
        trial: String,
        length: usize,
        removed: usize,
    },

    #[error("invalid synthetic spec: {0}")]
    InvalidSpec(String),

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("window of {len} samples is too short; at least {required} required")]
    WindowTooShort { len: usize, required: usize },

    #[error("class `{class}` has {rows} rows; at least {required} required")]
    TooFewRows {
        class: String,
        rows: usize,
        required: usize,
    },

    #[error("feature matrices have mismatched columns")]
    MismatchedColumns,

    #[error("at least 2 classes required, found {found}")]
    TooFewClasses { found: usize },

    #[error("sensor index {index} out of range for {channel_count} channels")]
    IndexOutOfRange { index: usize, channel_count: usize },

    #[error("ablation spec selects no classes or no sensor subsets")]
    EmptySpec,

    #[error("ring topology mismatch: {0}")]
    TopologyMismatch(String),

    #[error("training set is empty")]
    EmptyTrainingSet,

    #[error("training labels contain a single class")]
    SingleClassTraining,

    #[error("length mismatch: {left} vs {right}")]
    LengthMismatch { left: usize, right: usize },

    #[error("json error in {}: {source}", path.display())]
    Json {
        path: PathBuf,
        #[source]
        source: serde_json::Error,
    },
}

impl AuditError {
    pub fn family(&self) -> ErrorFamily {
        use AuditError::*;
        match self {
            MissingFile { .. } | Io { .. } => ErrorFamily::Io,
            MalformedRow { .. }
            | InconsistentChannelCount { .. }
            | UnknownClassLabel { .. }
            | TrimExceedsLength { .. }
            | WindowTooShort { .. }
            | MismatchedColumns
            | IndexOutOfRange { .. }
            | LengthMismatch { .. } => ErrorFamily::InvalidData,
            TooFewRows { .. }
            | TooFewClasses { .. }
            | EmptySpec
            | EmptyTrainingSet
            | SingleClassTraining => ErrorFamily::InsufficientData,
            InvalidSpec(_) | InvalidConfig(_) | TopologyMismatch(_) | Json { .. } => {
                ErrorFamily::InvalidConfig
            }
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        let path = path.into();
        if source.kind() == std::io::ErrorKind::NotFound {
            AuditError::MissingFile { path }
        } else {
            AuditError::Io { path, source }
        }
    }
}
