//! One-hidden-layer perceptron with a logistic output, trained by
//! mini-batch gradient descent on binary cross-entropy.

use ndarray::{Array1, Array2, ArrayView2, Axis};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::OracleConfig;
use crate::error::{AuditError, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct Mlp {
    /// `hidden × inputs`
    pub w1: Array2<f64>,
    pub b1: Array1<f64>,
    pub w2: Array1<f64>,
    pub b2: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Gradients {
    pub w1: Array2<f64>,
    pub b1: Array1<f64>,
    pub w2: Array1<f64>,
    pub b2: f64,
}

fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

/// `−[y ln σ(z) + (1 − y) ln(1 − σ(z))]` without overflow.
fn bce_with_logit(z: f64, y: f64) -> f64 {
    z.max(0.0) - y * z + (-z.abs()).exp().ln_1p()
}

impl Mlp {
    /// Uniform initialization in `±1/√fan_in` per layer.
    pub fn init(inputs: usize, hidden: usize, rng: &mut ChaCha8Rng) -> Self {
        let b_in = 1.0 / (inputs as f64).sqrt();
        let b_hid = 1.0 / (hidden as f64).sqrt();
        let mut u = |bound: f64| rng.random_range(-bound..=bound);
        let w1 = Array2::from_shape_simple_fn((hidden, inputs), || u(b_in));
        let b1 = Array1::from_shape_simple_fn(hidden, || u(b_in));
        let w2 = Array1::from_shape_simple_fn(hidden, || u(b_hid));
        let b2 = u(b_hid);
        Mlp { w1, b1, w2, b2 }
    }

    fn hidden(&self, x: ArrayView2<'_, f64>) -> Array2<f64> {
        let mut z1 = x.dot(&self.w1.t());
        z1 += &self.b1;
        z1
    }

    /// Output logits, one per row.
    pub fn logits(&self, x: ArrayView2<'_, f64>) -> Array1<f64> {
        let h = self.hidden(x).mapv(|v| v.max(0.0));
        h.dot(&self.w2) + self.b2
    }

    pub fn predict_proba(&self, x: ArrayView2<'_, f64>) -> Array1<f64> {
        self.logits(x).mapv(sigmoid)
    }

    pub fn predict(&self, x: ArrayView2<'_, f64>) -> Vec<bool> {
        self.logits(x).iter().map(|&z| z >= 0.0).collect()
    }

    /// Mean cross-entropy over the rows of `x` against targets in {0, 1}.
    pub fn loss(&self, x: ArrayView2<'_, f64>, y: &[f64]) -> f64 {
        let z = self.logits(x);
        z.iter()
            .zip(y)
            .map(|(&z, &y)| bce_with_logit(z, y))
            .sum::<f64>()
            / y.len() as f64
    }

    /// Mean loss and its analytic gradient.
    pub fn loss_and_gradients(&self, x: ArrayView2<'_, f64>, y: &[f64]) -> (f64, Gradients) {
        let n = y.len() as f64;
        let z1 = self.hidden(x);
        let h = z1.mapv(|v| v.max(0.0));
        let z2 = h.dot(&self.w2) + self.b2;
        let loss = z2
            .iter()
            .zip(y)
            .map(|(&z, &y)| bce_with_logit(z, y))
            .sum::<f64>()
            / n;

        // dL/dz2 = σ(z2) − y, averaged over the batch
        let dz2 = Array1::from_iter(z2.iter().zip(y).map(|(&z, &y)| (sigmoid(z) - y) / n));
        let w2 = h.t().dot(&dz2);
        let b2 = dz2.sum();
        let mut dz1 = dz2
            .view()
            .insert_axis(Axis(1))
            .dot(&self.w2.view().insert_axis(Axis(0)));
        dz1.zip_mut_with(&z1, |d, &z| {
            if z <= 0.0 {
                *d = 0.0;
            }
        });
        let w1 = dz1.t().dot(&x);
        let b1 = dz1.sum_axis(Axis(0));
        (loss, Gradients { w1, b1, w2, b2 })
    }

    fn step(&mut self, g: &Gradients, lr: f64) {
        self.w1.scaled_add(-lr, &g.w1);
        self.b1.scaled_add(-lr, &g.b1);
        self.w2.scaled_add(-lr, &g.w2);
        self.b2 -= lr * g.b2;
    }
}

/// Central finite differences of the loss with respect to every parameter.
pub fn numeric_gradients(m: &Mlp, x: ArrayView2<'_, f64>, y: &[f64], h: f64) -> Gradients {
    let probe = |f: &dyn Fn(&mut Mlp)| {
        let mut p = m.clone();
        f(&mut p);
        p.loss(x, y)
    };
    let mut g = Gradients {
        w1: Array2::zeros(m.w1.raw_dim()),
        b1: Array1::zeros(m.b1.len()),
        w2: Array1::zeros(m.w2.len()),
        b2: 0.0,
    };
    for ((i, j), v) in g.w1.indexed_iter_mut() {
        *v = (probe(&|p| p.w1[[i, j]] += h) - probe(&|p| p.w1[[i, j]] -= h)) / (2.0 * h);
    }
    for (i, v) in g.b1.indexed_iter_mut() {
        *v = (probe(&|p| p.b1[i] += h) - probe(&|p| p.b1[i] -= h)) / (2.0 * h);
    }
    for (i, v) in g.w2.indexed_iter_mut() {
        *v = (probe(&|p| p.w2[i] += h) - probe(&|p| p.w2[i] -= h)) / (2.0 * h);
    }
    g.b2 = (probe(&|p| p.b2 += h) - probe(&|p| p.b2 -= h)) / (2.0 * h);
    g
}

impl Gradients {
    /// Largest elementwise `|a − b| / max(|a|, |b|, floor)`.
    pub fn max_relative_error(&self, other: &Gradients, floor: f64) -> f64 {
        self.w1
            .iter()
            .zip(&other.w1)
            .chain(self.b1.iter().zip(&other.b1))
            .chain(self.w2.iter().zip(&other.w2))
            .chain(std::iter::once((&self.b2, &other.b2)))
            .map(|(a, b)| (a - b).abs() / a.abs().max(b.abs()).max(floor))
            .fold(0.0, f64::max)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainedMlp {
    pub model: Mlp,
    /// Full training-set loss before training, then after each epoch.
    pub loss_history: Vec<f64>,
}

pub fn train_mlp(
    x: ArrayView2<'_, f64>,
    labels: &[bool],
    cfg: &OracleConfig,
) -> Result<TrainedMlp> {
    if x.nrows() != labels.len() {
        return Err(AuditError::LengthMismatch {
            left: x.nrows(),
            right: labels.len(),
        });
    }
    if labels.is_empty() {
        return Err(AuditError::EmptyTrainingSet);
    }
    if labels.iter().all(|&l| l) || labels.iter().all(|&l| !l) {
        return Err(AuditError::SingleClassTraining);
    }
    cfg.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut model = Mlp::init(x.ncols(), cfg.hidden_units, &mut rng);
    let y: Vec<f64> = labels.iter().map(|&l| if l { 1.0 } else { 0.0 }).collect();

    let mut loss_history = Vec::with_capacity(cfg.epochs + 1);
    loss_history.push(model.loss(x, &y));
    let mut order: Vec<usize> = (0..labels.len()).collect();
    for _ in 0..cfg.epochs {
        order.shuffle(&mut rng);
        for batch in order.chunks(cfg.batch_size) {
            let xb = x.select(Axis(0), batch);
            let yb: Vec<f64> = batch.iter().map(|&i| y[i]).collect();
            let (_, g) = model.loss_and_gradients(xb.view(), &yb);
            model.step(&g, cfg.learning_rate);
        }
        loss_history.push(model.loss(x, &y));
    }
    Ok(TrainedMlp {
        model,
        loss_history,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand_distr::{Distribution, StandardNormal};

    fn blobs(n: usize, seed: u64) -> (Array2<f64>, Vec<bool>) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut x = Array2::zeros((n, 2));
        let mut y = Vec::with_capacity(n);
        for i in 0..n {
            let positive = i % 2 == 0;
            let centre = if positive { 3.0 } else { -3.0 };
            for j in 0..2 {
                let e: f64 = StandardNormal.sample(&mut rng);
                x[[i, j]] = centre + e;
            }
            y.push(positive);
        }
        (x, y)
    }

    fn max_relative_gradient_error(seed: u64) -> f64 {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let inputs = rng.random_range(1..=6);
        let hidden = rng.random_range(1..=10);
        let n = rng.random_range(2..=20);
        let m = Mlp::init(inputs, hidden, &mut rng);
        let x = Array2::from_shape_simple_fn((n, inputs), || StandardNormal.sample(&mut rng));
        let y: Vec<f64> = (0..n)
            .map(|_| if rng.random::<bool>() { 1.0 } else { 0.0 })
            .collect();
        let (_, analytic) = m.loss_and_gradients(x.view(), &y);
        let numeric = numeric_gradients(&m, x.view(), &y, 1e-5);
        analytic.max_relative_error(&numeric, 1e-6)
    }

    #[test]
    fn gradients_match_finite_differences() {
        for seed in 0..20 {
            let err = max_relative_gradient_error(seed);
            assert!(err < 1e-4, "seed {seed}: {err}");
        }
    }

    #[test]
    fn separable_blobs_train_to_high_accuracy() {
        let (x, y) = blobs(200, 5);
        let cfg = OracleConfig::default();
        let trained = train_mlp(x.view(), &y, &cfg).unwrap();
        let pred = trained.model.predict(x.view());
        let acc = pred.iter().zip(&y).filter(|(p, t)| p == t).count() as f64 / y.len() as f64;
        assert!(acc >= 0.99, "{acc}");
        let h = &trained.loss_history;
        assert_eq!(h.len(), cfg.epochs + 1);
        assert!(
            h[h.len() - 1] < h[0] / 10.0,
            "{} -> {}",
            h[0],
            h[h.len() - 1]
        );
    }

    #[test]
    fn fixed_seed_reproduces_weights() {
        let (x, y) = blobs(60, 2);
        let cfg = OracleConfig {
            epochs: 20,
            seed: 11,
            ..Default::default()
        };
        let a = train_mlp(x.view(), &y, &cfg).unwrap();
        let b = train_mlp(x.view(), &y, &cfg).unwrap();
        assert_eq!(a, b);
        let c = train_mlp(x.view(), &y, &OracleConfig { seed: 12, ..cfg }).unwrap();
        assert_ne!(a.model, c.model);
    }

    #[test]
    fn training_errors() {
        let x = Array2::zeros((3, 2));
        let cfg = OracleConfig::default();
        assert!(matches!(
            train_mlp(x.view(), &[true; 3], &cfg),
            Err(AuditError::SingleClassTraining)
        ));
        assert!(matches!(
            train_mlp(Array2::zeros((0, 2)).view(), &[], &cfg),
            Err(AuditError::EmptyTrainingSet)
        ));
        assert!(matches!(
            train_mlp(x.view(), &[true], &cfg),
            Err(AuditError::LengthMismatch { .. })
        ));
    }

    #[test]
    fn bce_is_stable_for_large_logits() {
        assert!(bce_with_logit(800.0, 1.0).abs() < 1e-300);
        assert!((bce_with_logit(-800.0, 1.0) - 800.0).abs() < 1e-9);
        assert!((bce_with_logit(0.0, 0.0) - 2f64.ln()).abs() < 1e-15);
    }
}
