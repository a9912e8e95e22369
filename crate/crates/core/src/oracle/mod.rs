//! Validation oracle: one small classifier per class pair, scored by MCC.
//!
//! If the separability audit is a good proxy for task difficulty, pairs
//! with a low Fisher ratio should also be the pairs a trained model
//! confuses most.

mod metrics;
mod mlp;

use std::collections::BTreeMap;

use ndarray::{Array1, Array2, ArrayView2, Axis};
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{AuditError, Result};
use crate::features::FeatureMatrix;
use crate::seed::derive_seed;

pub use metrics::{evaluate_mcc, kendall_tau_b, Confusion, MccResult};
pub use mlp::{numeric_gradients, train_mlp, Gradients, Mlp, TrainedMlp};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OracleConfig {
    pub hidden_units: usize,
    pub epochs: usize,
    pub learning_rate: f64,
    pub batch_size: usize,
    pub test_fraction: f64,
    pub seed: u64,
}

impl Default for OracleConfig {
    fn default() -> Self {
        OracleConfig {
            hidden_units: 64,
            epochs: 200,
            learning_rate: 0.01,
            batch_size: 32,
            test_fraction: 0.2,
            seed: 0,
        }
    }
}

impl OracleConfig {
    pub fn validate(&self) -> Result<()> {
        if self.hidden_units == 0 || self.epochs == 0 || self.batch_size == 0 {
            return Err(AuditError::InvalidConfig(
                "hidden_units, epochs and batch_size must be positive".into(),
            ));
        }
        if !(self.learning_rate.is_finite() && self.learning_rate > 0.0) {
            return Err(AuditError::InvalidConfig(
                "learning_rate must be positive".into(),
            ));
        }
        if !(self.test_fraction > 0.0 && self.test_fraction < 1.0) {
            return Err(AuditError::InvalidConfig(
                "test_fraction must lie in (0, 1)".into(),
            ));
        }
        Ok(())
    }
}

/// Per-column z-scoring fitted on training rows.
#[derive(Debug, Clone, PartialEq)]
pub struct Standardizer {
    pub mean: Array1<f64>,
    /// Population standard deviation; 0 marks a constant column.
    pub scale: Array1<f64>,
}

impl Standardizer {
    pub fn fit(train: ArrayView2<'_, f64>) -> Result<Self> {
        if train.nrows() == 0 {
            return Err(AuditError::EmptyTrainingSet);
        }
        let n = train.nrows() as f64;
        let mean = train.sum_axis(Axis(0)) / n;
        let scale = Array1::from_iter(train.columns().into_iter().zip(&mean).map(|(c, &m)| {
            if c.iter().all(|&v| v == c[0]) {
                0.0
            } else {
                (c.iter().map(|v| (v - m) * (v - m)).sum::<f64>() / n).sqrt()
            }
        }));
        Ok(Standardizer { mean, scale })
    }

    pub fn transform(&self, x: ArrayView2<'_, f64>) -> Array2<f64> {
        let mut out = x.to_owned();
        for (mut col, (&m, &s)) in out
            .columns_mut()
            .into_iter()
            .zip(self.mean.iter().zip(&self.scale))
        {
            if s > 0.0 {
                col.mapv_inplace(|v| (v - m) / s);
            } else {
                col.fill(0.0);
            }
        }
        out
    }
}

/// Z-scores both splits with statistics of `train` only.
pub fn standardize(
    train: ArrayView2<'_, f64>,
    test: ArrayView2<'_, f64>,
) -> Result<(Array2<f64>, Array2<f64>, Standardizer)> {
    let s = Standardizer::fit(train)?;
    Ok((s.transform(train), s.transform(test), s))
}

/// Stratified split into ascending `(train, test)` index lists. Each label
/// with at least two rows contributes `round(n · test_fraction)` rows to the
/// test set, clamped to `[1, n − 1]`.
pub fn stratified_split(
    labels: &[bool],
    test_fraction: f64,
    rng: &mut ChaCha8Rng,
) -> (Vec<usize>, Vec<usize>) {
    let mut train = Vec::new();
    let mut test = Vec::new();
    for class in [false, true] {
        let mut idx: Vec<usize> = (0..labels.len()).filter(|&i| labels[i] == class).collect();
        idx.shuffle(rng);
        let n = idx.len();
        let n_test = if n >= 2 {
            ((n as f64 * test_fraction).round() as usize).clamp(1, n - 1)
        } else {
            0
        };
        test.extend_from_slice(&idx[..n_test]);
        train.extend_from_slice(&idx[n_test..]);
    }
    train.sort_unstable();
    test.sort_unstable();
    (train, test)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OracleResult {
    pub class_a: String,
    pub class_b: String,
    pub mcc: f64,
    pub accuracy: f64,
    pub confusion: Confusion,
    /// Seed of this pair's generator, derived from the global seed.
    pub seed: u64,
}

pub fn pair_seed(global: u64, a: &str, b: &str) -> u64 {
    derive_seed(global, &format!("oracle\u{0}{a}\u{0}{b}"))
}

/// Trains and scores one classifier separating `a` (negative) from `b` (positive).
pub fn evaluate_pair(
    a: &FeatureMatrix,
    b: &FeatureMatrix,
    cfg: &OracleConfig,
) -> Result<OracleResult> {
    if a.column_index != b.column_index {
        return Err(AuditError::MismatchedColumns);
    }
    for m in [a, b] {
        if m.rows() < 2 {
            return Err(AuditError::TooFewRows {
                class: m.class_label.clone(),
                rows: m.rows(),
                required: 2,
            });
        }
    }
    let seed = pair_seed(cfg.seed, &a.class_label, &b.class_label);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let x = ndarray::concatenate(Axis(0), &[a.values.view(), b.values.view()])
        .map_err(|_| AuditError::MismatchedColumns)?;
    let labels: Vec<bool> = (0..x.nrows()).map(|i| i >= a.rows()).collect();
    let (train_idx, test_idx) = stratified_split(&labels, cfg.test_fraction, &mut rng);
    let (train_x, test_x, _) = standardize(
        x.select(Axis(0), &train_idx).view(),
        x.select(Axis(0), &test_idx).view(),
    )?;
    let train_y: Vec<bool> = train_idx.iter().map(|&i| labels[i]).collect();
    let test_y: Vec<bool> = test_idx.iter().map(|&i| labels[i]).collect();

    let train_cfg = OracleConfig {
        seed: derive_seed(seed, "train"),
        ..cfg.clone()
    };
    let trained = train_mlp(train_x.view(), &train_y, &train_cfg)?;
    let scored = evaluate_mcc(&trained.model.predict(test_x.view()), &test_y)?;
    Ok(OracleResult {
        class_a: a.class_label.clone(),
        class_b: b.class_label.clone(),
        mcc: scored.mcc,
        accuracy: scored.accuracy,
        confusion: scored.confusion,
        seed,
    })
}

/// One classifier per unordered class pair, in lexicographic pair order.
pub fn run_oracle_audit(
    matrices: &BTreeMap<String, FeatureMatrix>,
    cfg: &OracleConfig,
) -> Result<Vec<OracleResult>> {
    cfg.validate()?;
    if matrices.len() < 2 {
        return Err(AuditError::TooFewClasses {
            found: matrices.len(),
        });
    }
    let classes: Vec<&FeatureMatrix> = matrices.values().collect();
    let mut pairs = Vec::new();
    for i in 0..classes.len() {
        for j in i + 1..classes.len() {
            pairs.push((classes[i], classes[j]));
        }
    }
    pairs
        .par_iter()
        .map(|(a, b)| evaluate_pair(a, b, cfg))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::features::{ColumnId, FeatureKind};
    use ndarray::array;
    use rand_distr::{Distribution, StandardNormal};

    fn gaussian_matrix(label: &str, rows: usize, mean: &[f64], seed: u64) -> FeatureMatrix {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let d = mean.len();
        FeatureMatrix {
            values: Array2::from_shape_fn((rows, d), |(_, k)| {
                mean[k] + Distribution::<f64>::sample(&StandardNormal, &mut rng)
            }),
            class_label: label.into(),
            column_index: (0..d)
                .map(|k| ColumnId {
                    channel: k,
                    feature: FeatureKind::Rms,
                })
                .collect(),
            row_provenance: Vec::new(),
            capped_cells: Vec::new(),
        }
    }

    #[test]
    fn standardize_examples() {
        let train = array![[1.0, 8.0], [1.0, 12.0]];
        let test = array![[5.0, 14.0]];
        let (tr, te, s) = standardize(train.view(), test.view()).unwrap();
        assert_eq!(s.mean[1], 10.0);
        assert_eq!(s.scale[1], 2.0);
        assert_eq!(te[[0, 1]], 2.0);
        assert_eq!(tr.column(0).to_vec(), vec![0.0, 0.0]);
        assert_eq!(te[[0, 0]], 0.0);

        let z = array![[-1.0], [1.0]];
        let (tr, _, _) = standardize(z.view(), z.view()).unwrap();
        assert!((&tr - &z).iter().all(|d| d.abs() < 1e-12));

        assert!(matches!(
            standardize(Array2::zeros((0, 2)).view(), test.view()),
            Err(AuditError::EmptyTrainingSet)
        ));
    }

    #[test]
    fn split_is_stratified_disjoint_and_exhaustive() {
        let labels: Vec<bool> = (0..53).map(|i| i % 3 == 0).collect();
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let (train, test) = stratified_split(&labels, 0.2, &mut rng);
        let mut all: Vec<usize> = train.iter().chain(&test).copied().collect();
        all.sort_unstable();
        assert_eq!(all, (0..53).collect::<Vec<_>>());
        let pos = labels.iter().filter(|&&l| l).count();
        let test_pos = test.iter().filter(|&&i| labels[i]).count();
        assert_eq!(test_pos, (pos as f64 * 0.2).round() as usize);
        assert_eq!(
            test.len() - test_pos,
            ((53 - pos) as f64 * 0.2).round() as usize
        );
    }

    #[test]
    fn two_classes_give_one_result() {
        let mut m = BTreeMap::new();
        m.insert("a".to_string(), gaussian_matrix("a", 60, &[0.0, 0.0], 1));
        m.insert("b".to_string(), gaussian_matrix("b", 60, &[4.0, 0.0], 2));
        let cfg = OracleConfig {
            epochs: 50,
            ..Default::default()
        };
        let r = run_oracle_audit(&m, &cfg).unwrap();
        assert_eq!(r.len(), 1);
        assert_eq!((r[0].class_a.as_str(), r[0].class_b.as_str()), ("a", "b"));
        assert_eq!(r[0].confusion.total(), 24);
        assert_eq!(r[0].mcc, r[0].confusion.mcc());
        assert!(r[0].mcc > 0.8);
        assert_eq!(run_oracle_audit(&m, &cfg).unwrap(), r);

        m.remove("b");
        assert!(matches!(
            run_oracle_audit(&m, &cfg),
            Err(AuditError::TooFewClasses { found: 1 })
        ));
    }

    #[test]
    fn permuted_labels_give_null_mcc() {
        let cfg = OracleConfig {
            epochs: 30,
            hidden_units: 16,
            ..Default::default()
        };
        let mut total = 0.0;
        for seed in 0..20u64 {
            // both "classes" drawn from the same distribution
            let a = gaussian_matrix("a", 60, &[0.0; 4], 1000 + seed);
            let b = gaussian_matrix("b", 60, &[0.0; 4], 2000 + seed);
            let r = evaluate_pair(
                &a,
                &b,
                &OracleConfig {
                    seed,
                    ..cfg.clone()
                },
            )
            .unwrap();
            total += r.mcc;
        }
        let mean = total / 20.0;
        assert!(mean.abs() <= 0.15, "{mean}");
    }
}
