use std::fmt;
use std::io;
use std::path::PathBuf;

use sensaudit_core::{AuditError, ErrorFamily};
use thiserror::Error;

/// Process exit codes, one per error family.
pub mod exit {
    pub const OK: u8 = 0;
    pub const USAGE: u8 = 2;
    pub const IO: u8 = 3;
    pub const INVALID_DATA: u8 = 4;
    pub const INSUFFICIENT_DATA: u8 = 5;
    pub const OUTPUT_EXISTS: u8 = 6;
    pub const INVALID_CONFIG: u8 = 7;
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Stage {
    Config,
    Ingest,
    Segmentation,
    Features,
    Complexity,
    Ablation,
    Oracle,
}

impl fmt::Display for Stage {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Stage::Config => "config",
            Stage::Ingest => "ingest",
            Stage::Segmentation => "segmentation",
            Stage::Features => "features",
            Stage::Complexity => "complexity",
            Stage::Ablation => "ablation",
            Stage::Oracle => "oracle",
        })
    }
}

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{stage} stage failed: {source}")]
    Stage {
        stage: Stage,
        #[source]
        source: AuditError,
    },
    #[error("cannot read {}: {source}", path.display())]
    Read {
        path: PathBuf,
        #[source]
        source: io::Error,
    },
    #[error("invalid JSON in {}: {source}", path.display())]
    Config {
        path: PathBuf,
        #[source]
        source: serde_json::Error,
    },
    #[error("cannot write {}: {source}", path.display())]
    Write {
        path: PathBuf,
        #[source]
        source: io::Error,
    },
    #[error("{} already exists; pass --overwrite to replace it", path.display())]
    OutputExists { path: PathBuf },
    #[error("{0}")]
    Usage(String),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Stage { source, .. } => match source.family() {
                ErrorFamily::Io => exit::IO,
                ErrorFamily::InvalidData => exit::INVALID_DATA,
                ErrorFamily::InsufficientData => exit::INSUFFICIENT_DATA,
                ErrorFamily::InvalidConfig => exit::INVALID_CONFIG,
            },
            CliError::Read { .. } | CliError::Write { .. } => exit::IO,
            CliError::Config { .. } => exit::INVALID_CONFIG,
            CliError::OutputExists { .. } => exit::OUTPUT_EXISTS,
            CliError::Usage(_) => exit::USAGE,
        }
    }
}

/// Attaches the failing stage to a core error.
pub trait StageExt<T> {
    fn stage(self, stage: Stage) -> Result<T, CliError>;
}

impl<T> StageExt<T> for sensaudit_core::Result<T> {
    fn stage(self, stage: Stage) -> Result<T, CliError> {
        self.map_err(|source| CliError::Stage { stage, source })
    }
}
