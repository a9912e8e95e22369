//! Sensor ablation audit.
//!
//! A sensor failure is simulated by zero-filling its channels before feature
//! extraction. For each class, the separability between the intact
//! ("baseline") and ablated feature distributions measures how much the
//! class depends on the removed sensors.

use std::collections::BTreeMap;

use ndarray::s;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{AuditError, Result};
use crate::features::{build_matrix, channel_features, FeatureConfig, FeatureMatrix};
use crate::ingest::WindowedSample;
use crate::separability::separability_values;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ShiftMetric {
    #[default]
    F1,
    F2,
    F3,
}

impl ShiftMetric {
    pub fn name(self) -> &'static str {
        match self {
            ShiftMetric::F1 => "f1",
            ShiftMetric::F2 => "f2",
            ShiftMetric::F3 => "f3",
        }
    }

    /// Shift magnitude from a raw score: F2 falls as the shift grows.
    pub fn magnitude(self, raw: f64) -> f64 {
        match self {
            ShiftMetric::F2 => 1.0 - raw,
            _ => raw,
        }
    }
}

impl std::str::FromStr for ShiftMetric {
    type Err = AuditError;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "f1" => Ok(ShiftMetric::F1),
            "f2" => Ok(ShiftMetric::F2),
            "f3" => Ok(ShiftMetric::F3),
            other => Err(AuditError::InvalidConfig(format!(
                "unknown shift metric `{other}`"
            ))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AblationSpec {
    /// Explicit subsets; all subsets up to `combinatorial_depth` when absent.
    /// Singletons for every sensor are always evaluated.
    pub sensor_subsets: Option<Vec<Vec<usize>>>,
    pub combinatorial_depth: usize,
    pub shift_metric: ShiftMetric,
    /// Classes to audit, in report order. Empty means every class present.
    pub classes: Vec<String>,
    /// Cyclic sensor order; index order when absent.
    pub ring_topology: Option<Vec<usize>>,
    pub redundancy_threshold: f64,
    pub criticality_threshold: f64,
}

impl Default for AblationSpec {
    fn default() -> Self {
        AblationSpec {
            sensor_subsets: None,
            combinatorial_depth: 1,
            shift_metric: ShiftMetric::F1,
            classes: Vec::new(),
            ring_topology: None,
            redundancy_threshold: 0.3,
            criticality_threshold: 0.8,
        }
    }
}

/// Every subset of `0..sensors` with 1 to `depth` members, ordered by size
/// then lexicographically.
pub fn enumerate_subsets(sensors: usize, depth: usize) -> Vec<Vec<usize>> {
    fn extend(
        start: usize,
        n: usize,
        size: usize,
        cur: &mut Vec<usize>,
        out: &mut Vec<Vec<usize>>,
    ) {
        if cur.len() == size {
            out.push(cur.clone());
            return;
        }
        for i in start..n {
            cur.push(i);
            extend(i + 1, n, size, cur, out);
            cur.pop();
        }
    }
    let mut out = Vec::new();
    for size in 1..=depth.min(sensors) {
        extend(0, sensors, size, &mut Vec::new(), &mut out);
    }
    out
}

fn subset_order(a: &Vec<usize>, b: &Vec<usize>) -> std::cmp::Ordering {
    a.len().cmp(&b.len()).then_with(|| a.cmp(b))
}

impl AblationSpec {
    pub fn validate(&self) -> Result<()> {
        if self.combinatorial_depth == 0 {
            return Err(AuditError::InvalidConfig(
                "combinatorial_depth must be positive".into(),
            ));
        }
        for (name, v) in [
            ("redundancy_threshold", self.redundancy_threshold),
            ("criticality_threshold", self.criticality_threshold),
        ] {
            if !(0.0..=1.0).contains(&v) {
                return Err(AuditError::InvalidConfig(format!(
                    "{name} must lie in [0, 1], got {v}"
                )));
            }
        }
        Ok(())
    }

    pub fn resolve_subsets(&self, channel_count: usize) -> Result<Vec<Vec<usize>>> {
        let mut subsets = match &self.sensor_subsets {
            None => enumerate_subsets(channel_count, self.combinatorial_depth),
            Some(explicit) => {
                let mut all: Vec<Vec<usize>> = (0..channel_count).map(|i| vec![i]).collect();
                for subset in explicit {
                    if subset.is_empty() {
                        return Err(AuditError::InvalidConfig("empty sensor subset".into()));
                    }
                    if let Some(&index) = subset.iter().find(|&&i| i >= channel_count) {
                        return Err(AuditError::IndexOutOfRange {
                            index,
                            channel_count,
                        });
                    }
                    let mut s = subset.clone();
                    s.sort_unstable();
                    s.dedup();
                    all.push(s);
                }
                all
            }
        };
        subsets.sort_by(subset_order);
        subsets.dedup();
        if subsets.is_empty() {
            return Err(AuditError::EmptySpec);
        }
        Ok(subsets)
    }

    pub fn resolve_topology(&self, channel_count: usize) -> Result<Vec<usize>> {
        let topo = self
            .ring_topology
            .clone()
            .unwrap_or_else(|| (0..channel_count).collect());
        validate_topology(&topo, channel_count)?;
        Ok(topo)
    }
}

fn validate_topology(topo: &[usize], channel_count: usize) -> Result<()> {
    let mut sorted = topo.to_vec();
    sorted.sort_unstable();
    if sorted != (0..channel_count).collect::<Vec<_>>() {
        return Err(AuditError::TopologyMismatch(format!(
            "ring {topo:?} is not a permutation of 0..{channel_count}"
        )));
    }
    Ok(())
}

/// Copy of `sample` with the listed channels zero-filled.
pub fn nullify(sample: &WindowedSample, sensors: &[usize]) -> Result<WindowedSample> {
    let channel_count = sample.channel_count();
    let mut out = sample.clone();
    for &index in sensors {
        if index >= channel_count {
            return Err(AuditError::IndexOutOfRange {
                index,
                channel_count,
            });
        }
        out.data.row_mut(index).fill(0.0);
    }
    Ok(out)
}

fn require_rows(class: &str, rows: usize) -> Result<()> {
    if rows < 2 {
        return Err(AuditError::TooFewRows {
            class: class.to_string(),
            rows,
            required: 2,
        });
    }
    Ok(())
}

fn metric_value(metric: ShiftMetric, baseline: &FeatureMatrix, ablated: &FeatureMatrix) -> f64 {
    let s = separability_values(baseline.values.view(), ablated.values.view());
    match metric {
        ShiftMetric::F1 => s.f1,
        ShiftMetric::F2 => s.f2,
        ShiftMetric::F3 => s.f3,
    }
}

/// Raw shift score between the intact and ablated feature distributions of
/// one class. Nullifies each sample and re-extracts every feature.
pub fn ablated_shift(
    class_samples: &[WindowedSample],
    sensors: &[usize],
    fcfg: &FeatureConfig,
    fs: f64,
    metric: ShiftMetric,
) -> Result<f64> {
    let label = class_samples.first().map_or("", |s| s.class_label.as_str());
    require_rows(label, class_samples.len())?;
    let nullified = class_samples
        .iter()
        .map(|s| nullify(s, sensors))
        .collect::<Result<Vec<_>>>()?;
    let intact: Vec<&WindowedSample> = class_samples.iter().collect();
    let ablated: Vec<&WindowedSample> = nullified.iter().collect();
    let baseline = build_matrix(label, &intact, fcfg, fs)?;
    let ablated = build_matrix(label, &ablated, fcfg, fs)?;
    Ok(metric_value(metric, &baseline, &ablated))
}

/// Ablated matrix built from a baseline by overwriting the nullified
/// channels' column blocks with the features of an all-zero channel.
/// Extraction is per channel, so the untouched blocks equal a full
/// re-extraction bit for bit.
fn ablate_matrix(
    baseline: &FeatureMatrix,
    sensors: &[usize],
    zero_features: &[f64],
) -> FeatureMatrix {
    let per = zero_features.len();
    let mut ablated = baseline.clone();
    ablated
        .capped_cells
        .retain(|&(_, c)| !sensors.contains(&(c / per)));
    let block = ndarray::ArrayView1::from(zero_features);
    for &ch in sensors {
        for mut row in ablated.values.rows_mut() {
            row.slice_mut(s![ch * per..(ch + 1) * per]).assign(&block);
        }
    }
    ablated
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SubsetShift {
    pub subset: Vec<usize>,
    pub raw_shift: f64,
    /// Per-class normalized criticality; singletons only.
    pub normalized: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassAblation {
    pub class: String,
    pub shifts: Vec<SubsetShift>,
    /// Normalized criticality per sensor index.
    pub criticality: Vec<f64>,
    /// Sensors below the redundancy threshold.
    pub redundant_sensors: Vec<usize>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Verdict {
    Compensated,
    Uncompensated,
}

impl Verdict {
    pub fn name(self) -> &'static str {
        match self {
            Verdict::Compensated => "compensated",
            Verdict::Uncompensated => "uncompensated",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CompensationNote {
    pub class: String,
    pub sensor: usize,
    pub criticality: f64,
    pub left_neighbour: usize,
    pub left_criticality: f64,
    pub right_neighbour: usize,
    pub right_criticality: f64,
    pub verdict: Verdict,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RankedSensor {
    pub sensor: usize,
    pub mean_criticality: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AblationReport {
    pub shift_metric: ShiftMetric,
    pub combinatorial_depth: usize,
    pub channel_count: usize,
    pub redundancy_threshold: f64,
    pub criticality_threshold: f64,
    pub ring_topology: Vec<usize>,
    pub classes: Vec<ClassAblation>,
    /// Sensors by descending mean criticality across classes.
    pub ranking: Vec<RankedSensor>,
    pub neighbour_compensation: Vec<CompensationNote>,
}

impl AblationReport {
    pub fn class(&self, label: &str) -> Option<&ClassAblation> {
        self.classes.iter().find(|c| c.class == label)
    }
}

/// Neighbour annotations for every sensor at or above the report's
/// criticality threshold. A critical sensor is `uncompensated` when both
/// ring neighbours fall below the redundancy threshold.
pub fn neighbour_compensation(
    report: &AblationReport,
    topology: &[usize],
) -> Result<Vec<CompensationNote>> {
    validate_topology(topology, report.channel_count)?;
    let n = topology.len();
    let mut notes = Vec::new();
    for class in &report.classes {
        if class.criticality.len() != n {
            return Err(AuditError::TopologyMismatch(format!(
                "class `{}` has {} sensors, ring has {n}",
                class.class,
                class.criticality.len()
            )));
        }
        for (pos, &sensor) in topology.iter().enumerate() {
            let crit = class.criticality[sensor];
            if crit < report.criticality_threshold {
                continue;
            }
            let left = topology[(pos + n - 1) % n];
            let right = topology[(pos + 1) % n];
            let (lc, rc) = (class.criticality[left], class.criticality[right]);
            let verdict = if lc < report.redundancy_threshold && rc < report.redundancy_threshold {
                Verdict::Uncompensated
            } else {
                Verdict::Compensated
            };
            notes.push(CompensationNote {
                class: class.class.clone(),
                sensor,
                criticality: crit,
                left_neighbour: left,
                left_criticality: lc,
                right_neighbour: right,
                right_criticality: rc,
                verdict,
            });
        }
    }
    Ok(notes)
}

fn rank_sensors(classes: &[ClassAblation], channel_count: usize) -> Vec<RankedSensor> {
    let mut ranking: Vec<RankedSensor> = (0..channel_count)
        .map(|sensor| RankedSensor {
            sensor,
            mean_criticality: classes.iter().map(|c| c.criticality[sensor]).sum::<f64>()
                / classes.len() as f64,
        })
        .collect();
    ranking.sort_by(|a, b| {
        b.mean_criticality
            .total_cmp(&a.mean_criticality)
            .then(a.sensor.cmp(&b.sensor))
    });
    ranking
}

/// Nullifies every configured subset of sensors, one class at a time, and
/// measures how far each class's feature distribution moves.
pub fn run_ablation_audit(
    samples: &[WindowedSample],
    spec: &AblationSpec,
    fcfg: &FeatureConfig,
    fs: f64,
) -> Result<AblationReport> {
    fcfg.validate()?;
    let window_len = samples.first().map_or(0, |s| s.len());
    if samples.iter().any(|s| s.len() != window_len) {
        return Err(AuditError::InvalidConfig(
            "windows of differing lengths".into(),
        ));
    }
    let mut by_class: BTreeMap<&str, Vec<&WindowedSample>> = BTreeMap::new();
    for s in samples {
        by_class.entry(&s.class_label).or_default().push(s);
    }
    let mut matrices = BTreeMap::new();
    for (class, members) in by_class {
        if spec.classes.is_empty() || spec.classes.iter().any(|c| c == class) {
            matrices.insert(class.to_string(), build_matrix(class, &members, fcfg, fs)?);
        }
    }
    ablation_audit_from_matrices(&matrices, window_len, spec, fcfg, fs)
}

/// Same as [`run_ablation_audit`], starting from already extracted baseline
/// matrices whose rows came from windows of `window_len` samples.
pub fn ablation_audit_from_matrices(
    matrices: &BTreeMap<String, FeatureMatrix>,
    window_len: usize,
    spec: &AblationSpec,
    fcfg: &FeatureConfig,
    fs: f64,
) -> Result<AblationReport> {
    spec.validate()?;
    fcfg.validate()?;
    let per_channel = fcfg.features_per_channel();
    let cols = matrices.values().next().map_or(0, |m| m.cols());
    let channel_count = cols.checked_div(per_channel).unwrap_or(0);
    if channel_count == 0 {
        return Err(AuditError::EmptySpec);
    }
    if matrices.values().any(|m| m.cols() != cols) {
        return Err(AuditError::MismatchedColumns);
    }
    let subsets = spec.resolve_subsets(channel_count)?;
    let topology = spec.resolve_topology(channel_count)?;
    let classes: Vec<String> = if spec.classes.is_empty() {
        matrices.keys().cloned().collect()
    } else {
        spec.classes.clone()
    };
    if classes.is_empty() {
        return Err(AuditError::EmptySpec);
    }

    let zero_features = channel_features(&vec![0.0; window_len], fcfg, fs).0;
    let mut baselines = Vec::with_capacity(classes.len());
    for class in &classes {
        match matrices.get(class) {
            Some(m) => {
                require_rows(class, m.rows())?;
                baselines.push(m);
            }
            None => require_rows(class, 0)?,
        }
    }

    let jobs: Vec<(usize, usize)> = (0..classes.len())
        .flat_map(|c| (0..subsets.len()).map(move |s| (c, s)))
        .collect();
    let raw: Vec<f64> = jobs
        .par_iter()
        .map(|&(c, s)| {
            let ablated = ablate_matrix(baselines[c], &subsets[s], &zero_features);
            metric_value(spec.shift_metric, baselines[c], &ablated)
        })
        .collect();

    let mut class_reports = Vec::with_capacity(classes.len());
    for (c, class) in classes.iter().enumerate() {
        let scores = &raw[c * subsets.len()..(c + 1) * subsets.len()];
        let mut magnitude = vec![0.0; channel_count];
        for (subset, &score) in subsets.iter().zip(scores) {
            if let [sensor] = subset[..] {
                magnitude[sensor] = spec.shift_metric.magnitude(score);
            }
        }
        let max = magnitude.iter().copied().fold(0.0, f64::max);
        let criticality: Vec<f64> = magnitude
            .iter()
            .map(|&m| if max > 0.0 { m / max } else { 0.0 })
            .collect();
        let shifts = subsets
            .iter()
            .zip(scores)
            .map(|(subset, &raw_shift)| SubsetShift {
                subset: subset.clone(),
                raw_shift,
                normalized: (subset.len() == 1).then(|| criticality[subset[0]]),
            })
            .collect();
        let redundant_sensors = (0..channel_count)
            .filter(|&i| criticality[i] < spec.redundancy_threshold)
            .collect();
        class_reports.push(ClassAblation {
            class: class.clone(),
            shifts,
            criticality,
            redundant_sensors,
        });
    }

    let mut report = AblationReport {
        shift_metric: spec.shift_metric,
        combinatorial_depth: spec.combinatorial_depth,
        channel_count,
        redundancy_threshold: spec.redundancy_threshold,
        criticality_threshold: spec.criticality_threshold,
        ranking: rank_sensors(&class_reports, channel_count),
        classes: class_reports,
        ring_topology: topology.clone(),
        neighbour_compensation: Vec::new(),
    };
    report.neighbour_compensation = neighbour_compensation(&report, &topology)?;
    Ok(report)
}
