//! Stage orchestration. Everything here is pure computation; artifacts are
//! rendered and written by the caller once all stages have finished.

use std::collections::BTreeMap;

use sensaudit_core::ablation::{ablation_audit_from_matrices, AblationReport};
use sensaudit_core::features::{build_class_matrices, FeatureMatrix};
use sensaudit_core::ingest::{
    generate_synthetic, is_rest_class, load_dataset, segment, RecordingSet, SyntheticSpec,
};
use sensaudit_core::oracle::{run_oracle_audit, OracleConfig, OracleResult};
use sensaudit_core::separability::{pairwise_audit, AuditMode, PairwiseAudit};
use sensaudit_core::AuditError;
use serde::{Deserialize, Serialize};

use crate::config::{oracle_seed, DataSource, ResolvedConfig};
use crate::error::{CliError, Stage, StageExt};

/// Shape of the audited data after ingest and segmentation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DataSummary {
    pub sampling_rate_hz: f64,
    pub channel_count: usize,
    pub recordings: usize,
    pub window_len_samples: usize,
    /// Audited classes in report order.
    pub classes: Vec<String>,
    /// Classes present in the data but left out of the audit.
    pub excluded_classes: Vec<String>,
    pub windows_per_class: BTreeMap<String, usize>,
    /// Sample-entropy cells that hit the no-match cap, per class.
    pub capped_cells_per_class: BTreeMap<String, usize>,
}

pub struct Ingested {
    pub set: RecordingSet,
    pub excluded_classes: Vec<String>,
}

pub fn ingest(cfg: &ResolvedConfig, spec: Option<&SyntheticSpec>) -> Result<Ingested, CliError> {
    let set = match (&cfg.source, spec) {
        (DataSource::Dataset(root), _) => load_dataset(root).stage(Stage::Ingest)?,
        (DataSource::Synthetic(_), Some(spec)) => {
            spec.validate_for(&cfg.segmentation).stage(Stage::Ingest)?;
            let seed = cfg
                .synthetic_seed
                .expect("synthetic seed resolved with the spec");
            generate_synthetic(spec, seed).stage(Stage::Ingest)?
        }
        (DataSource::Synthetic(_), None) => unreachable!("synthetic source without a spec"),
    };
    let excluded_classes: Vec<String> = if cfg.include_rest {
        Vec::new()
    } else {
        set.class_names
            .iter()
            .filter(|c| is_rest_class(c))
            .cloned()
            .collect()
    };
    let set = if excluded_classes.is_empty() {
        set
    } else {
        set.without_classes(is_rest_class)
    };
    Ok(Ingested {
        set,
        excluded_classes,
    })
}

pub struct Prepared {
    pub summary: DataSummary,
    pub matrices: BTreeMap<String, FeatureMatrix>,
}

pub fn prepare(cfg: &ResolvedConfig, data: Ingested) -> Result<Prepared, CliError> {
    let windows = segment(&data.set, &cfg.segmentation).stage(Stage::Segmentation)?;
    // a class that windows to nothing would otherwise vanish from every table
    for class in &data.set.class_names {
        let rows = windows.iter().filter(|w| &w.class_label == class).count();
        if rows < 2 {
            return Err(AuditError::TooFewRows {
                class: class.clone(),
                rows,
                required: 2,
            })
            .stage(Stage::Segmentation);
        }
    }
    let fs = data.set.sampling_rate_hz;
    let matrices = build_class_matrices(&windows, &cfg.features, fs).stage(Stage::Features)?;
    let summary = DataSummary {
        sampling_rate_hz: fs,
        channel_count: data.set.channel_count,
        recordings: data.set.recordings.len(),
        window_len_samples: cfg.segmentation.window_len_samples,
        classes: matrices.keys().cloned().collect(),
        excluded_classes: data.excluded_classes,
        windows_per_class: matrices
            .iter()
            .map(|(k, m)| (k.clone(), m.rows()))
            .collect(),
        capped_cells_per_class: matrices
            .iter()
            .map(|(k, m)| (k.clone(), m.capped_cells.len()))
            .collect(),
    };
    Ok(Prepared { summary, matrices })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComplexityResults {
    pub one_vs_one: PairwiseAudit,
    pub one_vs_rest: PairwiseAudit,
}

pub fn complexity(p: &Prepared) -> Result<ComplexityResults, CliError> {
    Ok(ComplexityResults {
        one_vs_one: pairwise_audit(&p.matrices, AuditMode::OneVsOne).stage(Stage::Complexity)?,
        one_vs_rest: pairwise_audit(&p.matrices, AuditMode::OneVsRest).stage(Stage::Complexity)?,
    })
}

pub fn ablation(cfg: &ResolvedConfig, p: &Prepared) -> Result<AblationReport, CliError> {
    ablation_audit_from_matrices(
        &p.matrices,
        p.summary.window_len_samples,
        &cfg.ablation,
        &cfg.features,
        p.summary.sampling_rate_hz,
    )
    .stage(Stage::Ablation)
}

/// One row per class pair joining separability with oracle performance.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ValidationRow {
    pub class_a: String,
    pub class_b: String,
    pub raw_fdr: f64,
    pub normalized_fdr: f64,
    /// Mean over oracle repetitions.
    pub mcc: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OracleResults {
    /// Every repetition's results, repetition-major, pairs in lexicographic order.
    pub runs: Vec<OracleResult>,
    pub validation: Vec<ValidationRow>,
}

pub fn oracle(
    cfg: &ResolvedConfig,
    p: &Prepared,
    complexity: &ComplexityResults,
) -> Result<OracleResults, CliError> {
    let mut runs = Vec::new();
    for r in 0..cfg.oracle_repeats {
        let ocfg = OracleConfig {
            seed: oracle_seed(cfg.seed, r),
            ..cfg.oracle.clone()
        };
        runs.extend(run_oracle_audit(&p.matrices, &ocfg).stage(Stage::Oracle)?);
    }
    let mut validation = Vec::new();
    for entry in &complexity.one_vs_one.entries {
        let mccs: Vec<f64> = runs
            .iter()
            .filter(|o| o.class_a == entry.target && o.class_b == entry.reference)
            .map(|o| o.mcc)
            .collect();
        validation.push(ValidationRow {
            class_a: entry.target.clone(),
            class_b: entry.reference.clone(),
            raw_fdr: entry.raw_fdr,
            normalized_fdr: entry.normalized_fdr,
            mcc: mccs.iter().sum::<f64>() / mccs.len() as f64,
        });
    }
    Ok(OracleResults { runs, validation })
}
