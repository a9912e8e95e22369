//! Frequency-domain and wavelet features.

use std::cell::RefCell;
use std::f64::consts::FRAC_1_SQRT_2;

use rustfft::num_complex::Complex;
use rustfft::FftPlanner;

use super::time_domain::is_constant;

thread_local! {
    static PLANNER: RefCell<FftPlanner<f64>> = RefCell::new(FftPlanner::new());
}

/// One-sided periodogram `|X_k|²` for `k = 1..=W/2` (DC excluded, rectangular
/// window). Interior bins are doubled to fold in negative frequencies.
pub fn periodogram(signal: &[f64]) -> Vec<f64> {
    let n = signal.len();
    if n < 2 {
        return Vec::new();
    }
    let mut buf: Vec<Complex<f64>> = signal.iter().map(|&x| Complex::new(x, 0.0)).collect();
    let fft = PLANNER.with(|p| p.borrow_mut().plan_fft_forward(n));
    fft.process(&mut buf);
    (1..=n / 2)
        .map(|k| {
            let p = buf[k].norm_sqr();
            if 2 * k == n {
                p
            } else {
                2.0 * p
            }
        })
        .collect()
}

/// Smallest frequency at which cumulative periodogram power reaches half
/// the total. Constant or zero-power signals return 0 Hz.
pub fn median_frequency(signal: &[f64], fs: f64) -> f64 {
    if signal.len() < 2 || is_constant(signal) {
        return 0.0;
    }
    let power = periodogram(signal);
    let total: f64 = power.iter().sum();
    if total <= 0.0 {
        return 0.0;
    }
    let mut cumulative = 0.0;
    for (i, p) in power.iter().enumerate() {
        cumulative += p;
        if cumulative >= 0.5 * total {
            return (i + 1) as f64 * fs / signal.len() as f64;
        }
    }
    (power.len()) as f64 * fs / signal.len() as f64
}

#[derive(Debug, Clone, PartialEq)]
pub struct HaarDecomposition {
    pub approximation: Vec<f64>,
    /// Detail coefficients, finest level first.
    pub details: Vec<Vec<f64>>,
}

/// Orthonormal multilevel Haar transform. An odd-length signal drops its
/// last sample before each level; decomposition stops early once fewer
/// than two samples remain.
pub fn haar_decompose(signal: &[f64], levels: usize) -> HaarDecomposition {
    let mut approx = signal.to_vec();
    let mut details = Vec::with_capacity(levels);
    for _ in 0..levels {
        if approx.len() < 2 {
            break;
        }
        let pairs = approx.len() / 2;
        let mut next = Vec::with_capacity(pairs);
        let mut detail = Vec::with_capacity(pairs);
        for p in approx.chunks_exact(2) {
            next.push((p[0] + p[1]) * FRAC_1_SQRT_2);
            detail.push((p[0] - p[1]) * FRAC_1_SQRT_2);
        }
        details.push(detail);
        approx = next;
    }
    HaarDecomposition {
        approximation: approx,
        details,
    }
}

/// Sum of squared detail coefficients over all levels.
pub fn wavelet_energy(signal: &[f64], levels: usize) -> f64 {
    haar_decompose(signal, levels)
        .details
        .iter()
        .flatten()
        .map(|d| d * d)
        .sum()
}
