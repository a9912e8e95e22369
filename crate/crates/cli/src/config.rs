use std::fs;
use std::path::{Path, PathBuf};

use sensaudit_core::ablation::AblationSpec;
use sensaudit_core::features::FeatureConfig;
use sensaudit_core::ingest::{SegmentationConfig, SyntheticSpec};
use sensaudit_core::oracle::OracleConfig;
use sensaudit_core::seed::derive_seed;
use serde::{Deserialize, Serialize};

use crate::args::{AuditArgs, CheckArgs, SourceArgs};
use crate::error::{CliError, Stage};

/// Contents of `--config`; every section is optional.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AuditConfig {
    pub seed: Option<u64>,
    pub oracle_repeats: Option<usize>,
    pub segmentation: SegmentationConfig,
    pub features: FeatureConfig,
    pub ablation: AblationSpec,
    pub oracle: OracleConfig,
}

impl AuditConfig {
    pub fn read(path: Option<&Path>) -> Result<Self, CliError> {
        let Some(path) = path else {
            return Ok(AuditConfig::default());
        };
        let text = read_text(path)?;
        serde_json::from_str(&text).map_err(|source| CliError::Config {
            path: path.to_path_buf(),
            source,
        })
    }
}

fn read_text(path: &Path) -> Result<String, CliError> {
    fs::read_to_string(path).map_err(|source| CliError::Read {
        path: path.to_path_buf(),
        source,
    })
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind", content = "path")]
pub enum DataSource {
    Dataset(PathBuf),
    Synthetic(PathBuf),
}

impl DataSource {
    pub fn from_args(args: &SourceArgs) -> Result<Self, CliError> {
        match (&args.data, &args.synthetic) {
            (Some(d), None) => Ok(DataSource::Dataset(d.clone())),
            (None, Some(s)) => Ok(DataSource::Synthetic(s.clone())),
            _ => Err(CliError::Usage(
                "exactly one of --data or --synthetic is required".into(),
            )),
        }
    }
}

/// Everything that determines an audit's results. Echoed into every JSON
/// artifact so a run can be reproduced from its outputs alone.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResolvedConfig {
    pub source: DataSource,
    /// Global seed every other seed derives from.
    pub seed: u64,
    /// Synthetic generator seed (the spec's own seed when it sets one).
    pub synthetic_seed: Option<u64>,
    pub include_rest: bool,
    pub oracle_repeats: usize,
    pub segmentation: SegmentationConfig,
    pub features: FeatureConfig,
    pub ablation: AblationSpec,
    /// `seed` here is the first repetition's seed.
    pub oracle: OracleConfig,
}

/// Seed of oracle repetition `r`.
pub fn oracle_seed(global: u64, repeat: usize) -> u64 {
    derive_seed(global, &format!("oracle/{repeat}"))
}

pub fn synthetic_seed(global: u64, spec: &SyntheticSpec) -> u64 {
    spec.seed
        .unwrap_or_else(|| derive_seed(global, "synthetic"))
}

pub fn read_synthetic_spec(path: &Path) -> Result<SyntheticSpec, CliError> {
    let text = read_text(path)?;
    SyntheticSpec::from_json(&text).map_err(|source| CliError::Config {
        path: path.to_path_buf(),
        source,
    })
}

impl ResolvedConfig {
    fn build(
        source: DataSource,
        file: AuditConfig,
        seed: Option<u64>,
        include_rest: bool,
    ) -> Result<(Self, Option<SyntheticSpec>), CliError> {
        let seed = seed.or(file.seed).unwrap_or(0);
        let spec = match &source {
            DataSource::Synthetic(p) => Some(read_synthetic_spec(p)?),
            DataSource::Dataset(_) => None,
        };
        let repeats = file.oracle_repeats.unwrap_or(1);
        let cfg = ResolvedConfig {
            synthetic_seed: spec.as_ref().map(|s| synthetic_seed(seed, s)),
            source,
            seed,
            include_rest,
            oracle_repeats: repeats,
            segmentation: file.segmentation,
            features: file.features,
            ablation: file.ablation,
            oracle: OracleConfig {
                seed: oracle_seed(seed, 0),
                ..file.oracle
            },
        };
        Ok((cfg, spec))
    }

    pub fn for_audit(args: &AuditArgs) -> Result<(Self, Option<SyntheticSpec>), CliError> {
        let file = AuditConfig::read(args.config.as_deref())?;
        let source = DataSource::from_args(&args.source)?;
        let (mut cfg, spec) = Self::build(source, file, args.seed, args.include_rest)?;
        if let Some(m) = args.metric {
            cfg.ablation.shift_metric = m;
        }
        if let Some(d) = args.depth {
            cfg.ablation.combinatorial_depth = d;
        }
        if let Some(r) = args.repeats {
            cfg.oracle_repeats = r;
        }
        cfg.validate()?;
        Ok((cfg, spec))
    }

    pub fn for_check(args: &CheckArgs) -> Result<(Self, Option<SyntheticSpec>), CliError> {
        let file = AuditConfig::read(args.config.as_deref())?;
        let source = DataSource::from_args(&args.source)?;
        let (cfg, spec) = Self::build(source, file, args.seed, args.include_rest)?;
        cfg.validate()?;
        Ok((cfg, spec))
    }

    pub fn validate(&self) -> Result<(), CliError> {
        let stage = |source| CliError::Stage {
            stage: Stage::Config,
            source,
        };
        self.segmentation.validate().map_err(stage)?;
        self.features.validate().map_err(stage)?;
        self.ablation.validate().map_err(stage)?;
        self.oracle.validate().map_err(stage)?;
        if self.oracle_repeats == 0 {
            return Err(CliError::Usage("oracle repeats must be at least 1".into()));
        }
        Ok(())
    }
}
