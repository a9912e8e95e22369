//! Data-complexity measures between two feature distributions.
//!
//! * F1: maximum per-feature Fisher discriminant ratio
//!   `(μ_t − μ_r)² / (σ²_t + σ²_r)` (population variances).
//! * F2: volume of the overlap of the two bounding boxes, as a fraction of
//!   their joint span, multiplied over dimensions.
//! * F3: largest per-dimension non-overlapping fraction.
//!
//! Dimensions where both distributions are constant are degenerate. They are
//! listed in `degenerate_dims`; F1 scores them 0 when the constants agree and
//! [`F1_CAP`] otherwise, and F2/F3 skip them when their joint range is zero.

use std::collections::BTreeMap;

use ndarray::{ArrayView1, ArrayView2};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{AuditError, Result};
use crate::features::FeatureMatrix;

/// F1 assigned to a dimension with zero variance in both distributions but different means.
pub const F1_CAP: f64 = 1.0e12;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DimensionScore {
    pub f1: f64,
    pub overlap: f64,
    pub range: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SeparabilityScore {
    pub f1: f64,
    pub f1_argmax: usize,
    pub f2: f64,
    pub f3: f64,
    /// `None` when every dimension has zero range.
    pub f3_argmax: Option<usize>,
    pub per_dimension: Vec<DimensionScore>,
    pub degenerate_dims: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FisherScore {
    pub f1: f64,
    pub argmax: usize,
    pub per_dimension: Vec<f64>,
    pub degenerate_dims: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct OverlapScore {
    pub f2: f64,
    /// `(overlap_k, range_k)` per dimension.
    pub per_dimension: Vec<(f64, f64)>,
    pub degenerate_dims: Vec<usize>,
}

#[derive(Debug, Clone, Copy)]
struct ColumnStats {
    mean: f64,
    var: f64,
    min: f64,
    max: f64,
}

fn column_stats(col: ArrayView1<'_, f64>) -> ColumnStats {
    let n = col.len() as f64;
    let (min, max) = col
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &x| {
            (lo.min(x), hi.max(x))
        });
    let mean = col.sum() / n;
    let var = if min == max {
        0.0
    } else {
        col.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / n
    };
    ColumnStats {
        mean,
        var,
        min,
        max,
    }
}

fn check_pair(target: &FeatureMatrix, reference: &FeatureMatrix, min_rows: usize) -> Result<()> {
    if target.column_index != reference.column_index || target.cols() != reference.cols() {
        return Err(AuditError::MismatchedColumns);
    }
    for m in [target, reference] {
        if m.rows() < min_rows {
            return Err(AuditError::TooFewRows {
                class: m.class_label.clone(),
                rows: m.rows(),
                required: min_rows,
            });
        }
    }
    Ok(())
}

fn fisher_ratio(t: &ColumnStats, r: &ColumnStats) -> (f64, bool) {
    let var_sum = t.var + r.var;
    let diff = t.mean - r.mean;
    if var_sum == 0.0 {
        let f1 = if t.min == r.min { 0.0 } else { F1_CAP };
        return (f1, true);
    }
    ((diff * diff / var_sum).min(F1_CAP), false)
}

fn overlap_range(t: &ColumnStats, r: &ColumnStats) -> (f64, f64) {
    let overlap = (t.max.min(r.max) - t.min.max(r.min)).max(0.0);
    let range = t.max.max(r.max) - t.min.min(r.min);
    (overlap, range)
}

fn argmax_first(values: impl Iterator<Item = (usize, f64)>) -> Option<(usize, f64)> {
    values.fold(None, |best, (i, v)| match best {
        Some((_, b)) if b >= v => best,
        _ => Some((i, v)),
    })
}

fn stats_pairs(
    target: ArrayView2<'_, f64>,
    reference: ArrayView2<'_, f64>,
) -> Vec<(ColumnStats, ColumnStats)> {
    target
        .columns()
        .into_iter()
        .zip(reference.columns())
        .map(|(t, r)| (column_stats(t), column_stats(r)))
        .collect()
}

fn f3_from(dims: &[(f64, f64)]) -> (f64, Option<usize>) {
    match argmax_first(
        dims.iter()
            .enumerate()
            .filter(|(_, (_, range))| *range > 0.0)
            .map(|(k, (overlap, range))| (k, 1.0 - overlap / range)),
    ) {
        Some((k, v)) => (v, Some(k)),
        None => (0.0, None),
    }
}

fn f2_from(dims: &[(f64, f64)]) -> f64 {
    dims.iter()
        .filter(|(_, range)| *range > 0.0)
        .map(|(overlap, range)| overlap / range)
        .product()
}

/// F1 over raw value matrices (rows = samples, equal column counts).
pub fn fisher_values(target: ArrayView2<'_, f64>, reference: ArrayView2<'_, f64>) -> FisherScore {
    let stats = stats_pairs(target, reference);
    let mut per_dimension = Vec::with_capacity(stats.len());
    let mut degenerate_dims = Vec::new();
    for (k, (t, r)) in stats.iter().enumerate() {
        let (f1, degenerate) = fisher_ratio(t, r);
        if degenerate {
            degenerate_dims.push(k);
        }
        per_dimension.push(f1);
    }
    let (argmax, f1) = argmax_first(per_dimension.iter().copied().enumerate()).unwrap_or((0, 0.0));
    FisherScore {
        f1,
        argmax,
        per_dimension,
        degenerate_dims,
    }
}

pub fn f1_max_fisher(target: &FeatureMatrix, reference: &FeatureMatrix) -> Result<FisherScore> {
    check_pair(target, reference, 2)?;
    Ok(fisher_values(target.values.view(), reference.values.view()))
}

pub fn f2_overlap_volume(
    target: &FeatureMatrix,
    reference: &FeatureMatrix,
) -> Result<OverlapScore> {
    check_pair(target, reference, 1)?;
    let dims: Vec<(f64, f64)> = stats_pairs(target.values.view(), reference.values.view())
        .iter()
        .map(|(t, r)| overlap_range(t, r))
        .collect();
    Ok(OverlapScore {
        f2: f2_from(&dims),
        degenerate_dims: dims
            .iter()
            .enumerate()
            .filter(|(_, d)| d.1 == 0.0)
            .map(|(k, _)| k)
            .collect(),
        per_dimension: dims,
    })
}

pub fn f3_feature_efficiency(
    target: &FeatureMatrix,
    reference: &FeatureMatrix,
) -> Result<(f64, Option<usize>)> {
    let overlap = f2_overlap_volume(target, reference)?;
    Ok(f3_from(&overlap.per_dimension))
}

/// All three measures over raw value matrices.
pub fn separability_values(
    target: ArrayView2<'_, f64>,
    reference: ArrayView2<'_, f64>,
) -> SeparabilityScore {
    let stats = stats_pairs(target, reference);
    let mut per_dimension = Vec::with_capacity(stats.len());
    let mut degenerate_dims = Vec::new();
    let mut dims = Vec::with_capacity(stats.len());
    for (k, (t, r)) in stats.iter().enumerate() {
        let (f1, degenerate) = fisher_ratio(t, r);
        let (overlap, range) = overlap_range(t, r);
        if degenerate || range == 0.0 {
            degenerate_dims.push(k);
        }
        dims.push((overlap, range));
        per_dimension.push(DimensionScore { f1, overlap, range });
    }
    let (f1_argmax, f1) =
        argmax_first(per_dimension.iter().map(|d| d.f1).enumerate()).unwrap_or((0, 0.0));
    let (f3, f3_argmax) = f3_from(&dims);
    SeparabilityScore {
        f1,
        f1_argmax,
        f2: f2_from(&dims),
        f3,
        f3_argmax,
        per_dimension,
        degenerate_dims,
    }
}

pub fn separability(
    target: &FeatureMatrix,
    reference: &FeatureMatrix,
) -> Result<SeparabilityScore> {
    check_pair(target, reference, 2)?;
    Ok(separability_values(
        target.values.view(),
        reference.values.view(),
    ))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum AuditMode {
    OneVsOne,
    OneVsRest,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PairEntry {
    pub target: String,
    pub reference: String,
    pub raw_fdr: f64,
    pub normalized_fdr: f64,
    pub score: SeparabilityScore,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PairwiseAudit {
    pub mode: AuditMode,
    pub entries: Vec<PairEntry>,
}

impl PairwiseAudit {
    pub fn class_pairs(&self) -> Vec<(&str, &str)> {
        self.entries
            .iter()
            .map(|e| (e.target.as_str(), e.reference.as_str()))
            .collect()
    }

    pub fn entry(&self, a: &str, b: &str) -> Option<&PairEntry> {
        self.entries
            .iter()
            .find(|e| (e.target == a && e.reference == b) || (e.target == b && e.reference == a))
    }
}

/// Label of the pooled reference in one-vs-rest audits. Distinct from the
/// dataset's rest/control class so both can appear in one report.
pub const POOLED_LABEL: &str = "others";

/// One-vs-one audits every unordered pair `(a, b)` with `a < b`; one-vs-rest
/// audits each class against the unweighted pool of all other rows.
/// `normalized_fdr` divides each raw FDR by the largest in the audit.
pub fn pairwise_audit(
    matrices: &BTreeMap<String, FeatureMatrix>,
    mode: AuditMode,
) -> Result<PairwiseAudit> {
    if matrices.len() < 2 {
        return Err(AuditError::TooFewClasses {
            found: matrices.len(),
        });
    }
    let classes: Vec<&String> = matrices.keys().collect();
    let jobs: Vec<(String, FeatureMatrix, FeatureMatrix)> = match mode {
        AuditMode::OneVsOne => {
            let mut jobs = Vec::new();
            for (i, a) in classes.iter().enumerate() {
                for b in &classes[i + 1..] {
                    jobs.push(((*b).clone(), matrices[*a].clone(), matrices[*b].clone()));
                }
            }
            jobs
        }
        AuditMode::OneVsRest => classes
            .iter()
            .map(|c| {
                let rest: Vec<&FeatureMatrix> = matrices
                    .iter()
                    .filter(|(k, _)| k != c)
                    .map(|(_, m)| m)
                    .collect();
                Ok((
                    POOLED_LABEL.to_string(),
                    matrices[*c].clone(),
                    FeatureMatrix::pooled(POOLED_LABEL, &rest)?,
                ))
            })
            .collect::<Result<_>>()?,
    };
    let scored = jobs
        .par_iter()
        .map(|(reference_label, t, r)| {
            Ok(PairEntry {
                target: t.class_label.clone(),
                reference: reference_label.clone(),
                raw_fdr: 0.0,
                normalized_fdr: 0.0,
                score: separability(t, r)?,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let mut entries = scored;
    let max = entries.iter().map(|e| e.score.f1).fold(0.0, f64::max);
    for e in &mut entries {
        e.raw_fdr = e.score.f1;
        e.normalized_fdr = if max > 0.0 { e.raw_fdr / max } else { 0.0 };
    }
    Ok(PairwiseAudit { mode, entries })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::features::{ColumnId, FeatureKind};
    use ndarray::Array2;
    use proptest::prelude::*;

    pub(crate) fn matrix(label: &str, rows: Vec<Vec<f64>>) -> FeatureMatrix {
        let cols = rows.first().map_or(0, Vec::len);
        let flat: Vec<f64> = rows.iter().flatten().copied().collect();
        FeatureMatrix {
            values: Array2::from_shape_vec((rows.len(), cols), flat).unwrap(),
            class_label: label.into(),
            column_index: (0..cols)
                .map(|k| ColumnId {
                    channel: k,
                    feature: FeatureKind::Rms,
                })
                .collect(),
            row_provenance: Vec::new(),
            capped_cells: Vec::new(),
        }
    }

    fn col(label: &str, v: &[f64]) -> FeatureMatrix {
        matrix(label, v.iter().map(|&x| vec![x]).collect())
    }

    #[test]
    fn f1_one_dimensional_fixture() {
        // mean 0 var 1 vs mean 2 var 1 (population)
        let t = col("t", &[-1.0, 1.0]);
        let r = col("r", &[1.0, 3.0]);
        let s = f1_max_fisher(&t, &r).unwrap();
        assert_eq!(s.f1, 2.0);
        assert_eq!(s.argmax, 0);
    }

    #[test]
    fn f1_identical_is_zero_and_max_rule() {
        let t = matrix("t", vec![vec![1.0, 2.0], vec![3.0, 5.0]]);
        assert_eq!(f1_max_fisher(&t, &t).unwrap().f1, 0.0);

        // per-dim ratios 0.5, 2.0, 1.0: each dim has both classes at var 1
        let t = matrix("t", vec![vec![-1.0, -1.0, -1.0], vec![1.0, 1.0, 1.0]]);
        let r = matrix(
            "r",
            vec![
                vec![0.0, 1.0, 2f64.sqrt() - 1.0],
                vec![2.0, 3.0, 2f64.sqrt() + 1.0],
            ],
        );
        let s = f1_max_fisher(&t, &r).unwrap();
        assert!((s.per_dimension[0] - 0.5).abs() < 1e-15);
        assert!((s.per_dimension[2] - 1.0).abs() < 1e-15);
        assert_eq!(s.f1, 2.0);
        assert_eq!(s.argmax, 1);
    }

    #[test]
    fn f2_f3_interval_fixture() {
        let t = col("t", &[0.0, 2.0]);
        let r = col("r", &[1.0, 3.0]);
        let f2 = f2_overlap_volume(&t, &r).unwrap();
        assert_eq!(f2.per_dimension, vec![(1.0, 3.0)]);
        assert!((f2.f2 - 1.0 / 3.0).abs() < 1e-12);
        let (f3, arg) = f3_feature_efficiency(&t, &r).unwrap();
        assert!((f3 - 2.0 / 3.0).abs() < 1e-12);
        assert_eq!(arg, Some(0));
    }

    #[test]
    fn identical_and_disjoint() {
        let t = matrix("t", vec![vec![0.0, 5.0], vec![1.0, 7.0], vec![0.5, 6.0]]);
        assert_eq!(f2_overlap_volume(&t, &t).unwrap().f2, 1.0);
        assert_eq!(f3_feature_efficiency(&t, &t).unwrap().0, 0.0);
        let r = matrix("r", vec![vec![0.2, 8.0], vec![0.9, 9.0]]);
        let s = separability(&t, &r).unwrap();
        assert_eq!(s.f2, 0.0);
        assert_eq!(s.f3, 1.0);
        assert_eq!(s.f3_argmax, Some(1));
    }

    #[test]
    fn f3_picks_max_complement() {
        // dim 0 ratio 1/3, dim 1 ratio 1
        let t = matrix("t", vec![vec![0.0, 0.0], vec![2.0, 4.0]]);
        let r = matrix("r", vec![vec![1.0, 0.0], vec![3.0, 4.0]]);
        let (f3, arg) = f3_feature_efficiency(&t, &r).unwrap();
        assert!((f3 - 2.0 / 3.0).abs() < 1e-12);
        assert_eq!(arg, Some(0));
    }

    #[test]
    fn degenerate_dimensions() {
        // dim 0 constant and equal, dim 1 constant but different, dim 2 regular
        let t = matrix("t", vec![vec![1.0, 2.0, 0.0], vec![1.0, 2.0, 1.0]]);
        let r = matrix("r", vec![vec![1.0, 3.0, 0.5], vec![1.0, 3.0, 2.0]]);
        let s = separability(&t, &r).unwrap();
        assert_eq!(s.degenerate_dims, vec![0, 1]);
        assert_eq!(s.per_dimension[0].f1, 0.0);
        assert_eq!(s.per_dimension[1].f1, F1_CAP);
        assert_eq!(s.f1, F1_CAP);
        assert_eq!(s.f1_argmax, 1);
        // dim 0 has zero range and is skipped; dim 1 is disjoint
        assert_eq!(s.f2, 0.0);
        assert_eq!(s.f3, 1.0);

        let all_const = col("t", &[4.0, 4.0]);
        let s = separability(&all_const, &all_const).unwrap();
        assert_eq!((s.f1, s.f2, s.f3, s.f3_argmax), (0.0, 1.0, 0.0, None));
    }

    #[test]
    fn errors() {
        let t = col("t", &[1.0]);
        let r = col("r", &[1.0, 2.0]);
        assert!(matches!(
            f1_max_fisher(&t, &r),
            Err(AuditError::TooFewRows { rows: 1, .. })
        ));
        assert!(f2_overlap_volume(&t, &r).is_ok());
        let wide = matrix("w", vec![vec![1.0, 2.0], vec![3.0, 4.0]]);
        assert!(matches!(
            separability(&r, &wide),
            Err(AuditError::MismatchedColumns)
        ));
    }

    #[test]
    fn pairwise_two_classes_self_normalizes() {
        let mut m = BTreeMap::new();
        m.insert("a".to_string(), col("a", &[0.0, 1.0, 2.0]));
        m.insert("b".to_string(), col("b", &[2.0, 3.0, 4.0]));
        let audit = pairwise_audit(&m, AuditMode::OneVsOne).unwrap();
        assert_eq!(audit.entries.len(), 1);
        assert_eq!(audit.entries[0].normalized_fdr, 1.0);
        assert_eq!(audit.class_pairs(), vec![("a", "b")]);

        m.remove("b");
        assert!(matches!(
            pairwise_audit(&m, AuditMode::OneVsOne),
            Err(AuditError::TooFewClasses { found: 1 })
        ));
    }

    #[test]
    fn one_vs_rest_pools_other_classes() {
        let mut m = BTreeMap::new();
        m.insert("a".to_string(), col("a", &[0.0, 1.0]));
        m.insert("b".to_string(), col("b", &[0.5, 1.5]));
        m.insert("c".to_string(), col("c", &[10.0, 11.0]));
        let audit = pairwise_audit(&m, AuditMode::OneVsRest).unwrap();
        assert_eq!(audit.entries.len(), 3);
        let c = audit.entries.iter().find(|e| e.target == "c").unwrap();
        assert_eq!(c.reference, POOLED_LABEL);
        let pooled = col("others", &[0.0, 1.0, 0.5, 1.5]);
        assert_eq!(c.score, separability(&m["c"], &pooled).unwrap());
        assert_eq!(c.normalized_fdr, 1.0);
        assert!(audit
            .entries
            .iter()
            .filter(|e| e.target != "c")
            .all(|e| e.raw_fdr < c.raw_fdr));
    }

    fn arb_pair() -> impl Strategy<Value = (Vec<Vec<f64>>, Vec<Vec<f64>>)> {
        (1usize..=5, 2usize..=20, 2usize..=20).prop_flat_map(|(d, n1, n2)| {
            (
                proptest::collection::vec(proptest::collection::vec(-50.0f64..50.0, d), n1),
                proptest::collection::vec(proptest::collection::vec(-50.0f64..50.0, d), n2),
            )
        })
    }

    proptest! {
        #[test]
        fn symmetric_and_bounded((a, b) in arb_pair()) {
            let (t, r) = (matrix("t", a), matrix("r", b));
            let ab = separability(&t, &r).unwrap();
            let ba = separability(&r, &t).unwrap();
            prop_assert_eq!(&ab, &ba);
            prop_assert!(ab.f1 >= 0.0);
            prop_assert!((0.0..=1.0).contains(&ab.f2));
            prop_assert!((0.0..=1.0).contains(&ab.f3));
            if ab.f2 == 0.0 {
                prop_assert_eq!(ab.f3, 1.0);
            }
        }

        #[test]
        fn affine_invariance(
            (a, b) in arb_pair(),
            scale in prop_oneof![-20.0f64..-0.05, 0.05f64..20.0],
            shift in -100.0f64..100.0,
        ) {
            let (t, r) = (matrix("t", a), matrix("r", b));
            let before = separability(&t, &r).unwrap();
            let mut t2 = t.clone();
            let mut r2 = r.clone();
            t2.values.column_mut(0).mapv_inplace(|x| scale * x + shift);
            r2.values.column_mut(0).mapv_inplace(|x| scale * x + shift);
            let after = separability(&t2, &r2).unwrap();
            let close = |x: f64, y: f64| (x - y).abs() <= 1e-8 * x.abs().max(y.abs()).max(1e-1);
            prop_assert!(close(before.per_dimension[0].f1, after.per_dimension[0].f1));
            if scale > 0.0 {
                let ratio = |d: &DimensionScore| if d.range > 0.0 { d.overlap / d.range } else { 1.0 };
                prop_assert!((ratio(&before.per_dimension[0]) - ratio(&after.per_dimension[0])).abs() <= 1e-9);
                prop_assert!((before.f2 - after.f2).abs() <= 1e-9);
                prop_assert!((before.f3 - after.f3).abs() <= 1e-9);
            }
        }
    }
}
