//! Amplitude and complexity features computed directly on the samples.

/// Histogram entropy in bits over `bins` equal-width bins spanning `[min, max]`.
pub fn shannon_entropy(signal: &[f64], bins: usize) -> f64 {
    if signal.is_empty() || bins == 0 {
        return 0.0;
    }
    let (min, max) = min_max(signal);
    let span = max - min;
    if span <= 0.0 {
        return 0.0;
    }
    let mut counts = vec![0usize; bins];
    for &x in signal {
        let b = ((x - min) / span * bins as f64) as usize;
        counts[b.min(bins - 1)] += 1;
    }
    let n = signal.len() as f64;
    let h: f64 = counts
        .iter()
        .filter(|&&c| c > 0)
        .map(|&c| {
            let p = c as f64 / n;
            -p * p.log2()
        })
        .sum();
    // normalizes a -0.0 from a single occupied bin
    h + 0.0
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SampleEntropy {
    pub value: f64,
    /// No template matches at length `m` or `m + 1`; `value` holds the cap.
    pub capped: bool,
}

/// `ln((W − m)(W − m − 1))`, returned when the match ratio is undefined.
pub fn sample_entropy_cap(len: usize, m: usize) -> f64 {
    (((len - m) * (len - m - 1)) as f64).ln()
}

/// Sample entropy with tolerance `r_coeff ×` the window's sample standard
/// deviation, Chebyshev distance and self-matches excluded.
///
/// Both template lengths use the same `W − m` starting positions.
/// Requires `signal.len() > m + 1`.
pub fn sample_entropy(signal: &[f64], m: usize, r_coeff: f64) -> SampleEntropy {
    let n = signal.len();
    debug_assert!(n > m + 1);
    let r = r_coeff * sample_std(signal);
    let templates = n - m;
    let mut b = 0u64;
    let mut a = 0u64;
    for i in 0..templates {
        for j in i + 1..templates {
            if (0..m).all(|k| (signal[i + k] - signal[j + k]).abs() <= r) {
                b += 1;
                if (signal[i + m] - signal[j + m]).abs() <= r {
                    a += 1;
                }
            }
        }
    }
    if a == 0 || b == 0 {
        return SampleEntropy {
            value: sample_entropy_cap(n, m),
            capped: true,
        };
    }
    SampleEntropy {
        value: -(a as f64 / b as f64).ln() + 0.0,
        capped: false,
    }
}

pub fn zero_crossings(signal: &[f64], threshold: f64) -> usize {
    signal
        .windows(2)
        .filter(|w| w[0] * w[1] < 0.0 && (w[0] - w[1]).abs() >= threshold)
        .count()
}

pub fn waveform_length(signal: &[f64]) -> f64 {
    signal.windows(2).map(|w| (w[1] - w[0]).abs()).sum()
}

pub fn rms(signal: &[f64]) -> f64 {
    if signal.is_empty() {
        return 0.0;
    }
    (signal.iter().map(|x| x * x).sum::<f64>() / signal.len() as f64).sqrt()
}

pub fn slope_sign_changes(signal: &[f64], threshold: f64) -> usize {
    signal
        .windows(3)
        .filter(|w| (w[1] - w[0]) * (w[1] - w[2]) > threshold)
        .count()
}

/// Values above this mark a curve whose Katz denominator is nonpositive.
pub const KATZ_FD_CAP: f64 = 1.0e3;

/// Katz fractal dimension of the planar curve `(i, x_i)`.
///
/// `L` is the curve length, `d` the largest distance from the first point
/// and `n = W − 1` the number of steps:
/// `FD = log10(n) / (log10(n) + log10(d / L))`, floored at 1.
pub fn fractal_dimension(signal: &[f64]) -> f64 {
    if signal.len() < 2 || is_constant(signal) {
        return 1.0;
    }
    let first = signal[0];
    let length: f64 = signal
        .windows(2)
        .map(|w| (1.0 + (w[1] - w[0]).powi(2)).sqrt())
        .sum();
    let extent = signal
        .iter()
        .enumerate()
        .map(|(i, &x)| ((i as f64).powi(2) + (x - first).powi(2)).sqrt())
        .fold(0.0, f64::max);
    let steps = (signal.len() - 1) as f64;
    let denom = steps.log10() + (extent / length).log10();
    if denom <= 0.0 {
        return KATZ_FD_CAP;
    }
    (steps.log10() / denom).clamp(1.0, KATZ_FD_CAP)
}

pub(crate) fn is_constant(signal: &[f64]) -> bool {
    signal.windows(2).all(|w| w[0] == w[1])
}

fn min_max(signal: &[f64]) -> (f64, f64) {
    signal
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &x| {
            (lo.min(x), hi.max(x))
        })
}

fn sample_std(signal: &[f64]) -> f64 {
    let n = signal.len();
    if n < 2 || is_constant(signal) {
        return 0.0;
    }
    let mean = signal.iter().sum::<f64>() / n as f64;
    let ss: f64 = signal.iter().map(|x| (x - mean).powi(2)).sum();
    (ss / (n - 1) as f64).sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn uniform_noise(seed: u64, n: usize) -> Vec<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        (0..n).map(|_| rng.random::<f64>()).collect()
    }

    /// Straightforward template counter: builds every template explicitly,
    /// counts unordered non-self pairs within tolerance.
    fn naive_sampen(x: &[f64], m: usize, r_coeff: f64) -> (u64, u64, f64) {
        let n = x.len();
        let mean = x.iter().sum::<f64>() / n as f64;
        let var = x.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n as f64 - 1.0);
        let r = r_coeff * var.sqrt();
        let count = |len: usize| -> u64 {
            let t: Vec<&[f64]> = (0..n - m).map(|i| &x[i..i + len]).collect();
            let mut c = 0;
            for i in 0..t.len() {
                for j in 0..t.len() {
                    if i == j {
                        continue;
                    }
                    let d = t[i]
                        .iter()
                        .zip(t[j])
                        .map(|(a, b)| (a - b).abs())
                        .fold(0.0, f64::max);
                    if d <= r {
                        c += 1;
                    }
                }
            }
            c / 2
        };
        let (b, a) = (count(m), count(m + 1));
        (a, b, -(a as f64 / b as f64).ln())
    }

    /// Katz computed step by step without shared helpers.
    fn naive_katz(x: &[f64]) -> f64 {
        let mut l = 0.0;
        for i in 1..x.len() {
            let dx = 1.0;
            let dy = x[i] - x[i - 1];
            l += (dx * dx + dy * dy).sqrt();
        }
        let mut d: f64 = 0.0;
        for (i, v) in x.iter().enumerate() {
            let dist = ((i * i) as f64 + (v - x[0]) * (v - x[0])).sqrt();
            if dist > d {
                d = dist;
            }
        }
        let n = (x.len() - 1) as f64;
        n.log10() / (n.log10() + (d / l).log10())
    }

    #[test]
    fn shannon_examples() {
        assert_eq!(shannon_entropy(&[3.0; 50], 128), 0.0);
        let alt: Vec<f64> = (0..100)
            .map(|i| if i % 2 == 0 { -1.5 } else { 2.0 })
            .collect();
        assert!((shannon_entropy(&alt, 128) - 1.0).abs() < 1e-15);
        let spread: Vec<f64> = (0..128).map(|i| i as f64).collect();
        assert!((shannon_entropy(&spread, 128) - 7.0).abs() < 1e-12);
    }

    #[test]
    fn sampen_constant_is_zero() {
        let s = sample_entropy(&[2.0; 40], 2, 0.2);
        assert_eq!(s.value, 0.0);
        assert!(!s.capped);
    }

    #[test]
    fn sampen_ramp_is_capped() {
        let ramp: Vec<f64> = (0..50).map(|i| i as f64).collect();
        // sd of 0..50 is ~14.6, so r = 0.05 * 14.6 < 1
        let s = sample_entropy(&ramp, 2, 0.05);
        assert!(s.capped);
        assert_eq!(s.value, (48.0f64 * 47.0).ln());
    }

    #[test]
    fn sampen_uniform_noise_matches_naive() {
        let x = uniform_noise(1, 400);
        let s = sample_entropy(&x, 2, 0.2);
        let (a, b, naive) = naive_sampen(&x, 2, 0.2);
        assert!(a > 0 && b > 0);
        assert!(!s.capped);
        assert!(s.value > 0.0 && s.value < sample_entropy_cap(400, 2));
        assert_eq!(s.value, naive);
    }

    #[test]
    fn sampen_matches_naive_over_seeds() {
        for seed in 0..50u64 {
            let mut rng = ChaCha8Rng::seed_from_u64(seed + 100);
            let n = rng.random_range(20..=200);
            let x = uniform_noise(seed, n);
            let s = sample_entropy(&x, 2, 0.2);
            let (a, b, naive) = naive_sampen(&x, 2, 0.2);
            if a == 0 || b == 0 {
                assert!(s.capped);
            } else {
                assert_eq!(s.value, naive, "seed {seed}");
            }
        }
    }

    #[test]
    fn zero_crossing_examples() {
        assert_eq!(zero_crossings(&[1.0, -1.0, 1.0, -1.0], 0.0), 3);
        assert_eq!(zero_crossings(&[4.0; 10], 0.0), 0);
        assert_eq!(zero_crossings(&[0.0; 10], 0.0), 0);
        // zeros do not count as crossings
        assert_eq!(zero_crossings(&[1.0, 0.0, -1.0], 0.0), 0);
        assert_eq!(zero_crossings(&[0.1, -0.1, 3.0, -3.0], 1.0), 2);
    }

    #[test]
    fn waveform_length_examples() {
        assert_eq!(waveform_length(&[5.0; 8]), 0.0);
        assert_eq!(waveform_length(&[0.0, 1.0, 0.0, 1.0]), 3.0);
        assert_eq!(waveform_length(&[0.0, 2.0]), 2.0);
    }

    #[test]
    fn rms_examples() {
        assert_eq!(rms(&[-2.5; 7]), 2.5);
        assert!((rms(&[3.0, -4.0]) - 12.5f64.sqrt()).abs() < 1e-15);
        assert!((rms(&[3.0, -4.0]) - 3.53553).abs() < 1e-5);
        assert_eq!(rms(&[0.0; 4]), 0.0);
    }

    #[test]
    fn slope_sign_change_examples() {
        let ramp: Vec<f64> = (0..20).map(f64::from).collect();
        assert_eq!(slope_sign_changes(&ramp, 0.0), 0);
        assert_eq!(slope_sign_changes(&[0.0, 1.0, 0.0, 1.0], 0.0), 2);
        assert_eq!(slope_sign_changes(&[1.0; 9], 0.0), 0);
    }

    #[test]
    fn katz_examples() {
        let ramp: Vec<f64> = (0..100).map(|i| 0.5 * i as f64 - 3.0).collect();
        assert!((fractal_dimension(&ramp) - 1.0).abs() < 1e-12);
        assert_eq!(fractal_dimension(&[7.0; 30]), 1.0);
        assert_eq!(fractal_dimension(&[0.0; 30]), 1.0);

        let x = uniform_noise(3, 400);
        let fd = fractal_dimension(&x);
        assert!(fd > 1.0 && fd < 2.0, "{fd}");
        assert!((fd - naive_katz(&x)).abs() <= 1e-12 * fd);
    }

    proptest! {
        #[test]
        fn counts_invariant_under_positive_scaling(
            x in proptest::collection::vec(-100.0f64..100.0, 3..64),
            scale in 1e-3f64..1e3,
        ) {
            let y: Vec<f64> = x.iter().map(|v| v * scale).collect();
            prop_assert_eq!(zero_crossings(&x, 0.0), zero_crossings(&y, 0.0));
            prop_assert_eq!(slope_sign_changes(&x, 0.0), slope_sign_changes(&y, 0.0));
        }

        #[test]
        fn amplitude_features_scale_linearly(
            x in proptest::collection::vec(-100.0f64..100.0, 2..64),
            scale in 1e-3f64..1e3,
        ) {
            let y: Vec<f64> = x.iter().map(|v| v * scale).collect();
            let close = |a: f64, b: f64| (a - b).abs() <= 1e-12 * a.abs().max(b.abs()).max(1e-300);
            prop_assert!(close(rms(&y), scale * rms(&x)));
            prop_assert!(close(waveform_length(&y), scale * waveform_length(&x)));
        }

        #[test]
        fn katz_at_least_one(x in proptest::collection::vec(-50.0f64..50.0, 2..64)) {
            prop_assert!(fractal_dimension(&x) >= 1.0);
        }
    }
}
