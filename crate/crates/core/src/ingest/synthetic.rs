//! Synthetic recordings with controllable class separability.
//!
//! Each channel is a sum of a sinusoid and band-limited Gaussian noise,
//! both scaled by class-dependent gains, multiplied by a slow amplitude
//! envelope and a per-trial log-normal gain jitter, plus white sensor noise.
//! A channel whose gains are equal for every class is class-independent.

use std::f64::consts::PI;

use ndarray::Array2;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{segment::window_count, Recording, RecordingSet, SegmentationConfig};
use crate::error::{AuditError, Result};
use crate::seed::derive_seed;

const FILTER_WARMUP: usize = 256;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ChannelModel {
    /// Band-limited noise gain per class (same order as `classes`).
    pub noise_gain: Vec<f64>,
    /// Sinusoid amplitude per class; all zeros when absent.
    #[serde(default)]
    pub sinusoid_gain: Vec<f64>,
    #[serde(default = "default_sinusoid_hz")]
    pub sinusoid_hz: f64,
    #[serde(default = "default_band")]
    pub noise_band_hz: [f64; 2],
    #[serde(default = "default_modulation_hz")]
    pub modulation_hz: f64,
    #[serde(default)]
    pub modulation_depth: f64,
    /// Standard deviation of the log of the per-trial gain factor.
    #[serde(default = "default_jitter")]
    pub gain_jitter: f64,
}

fn default_sinusoid_hz() -> f64 {
    25.0
}
fn default_band() -> [f64; 2] {
    [20.0, 80.0]
}
fn default_modulation_hz() -> f64 {
    0.5
}
fn default_jitter() -> f64 {
    0.1
}

impl ChannelModel {
    /// Class-independent noise channel.
    pub fn noise(class_count: usize, gain: f64) -> Self {
        ChannelModel {
            noise_gain: vec![gain; class_count],
            sinusoid_gain: vec![0.0; class_count],
            sinusoid_hz: default_sinusoid_hz(),
            noise_band_hz: default_band(),
            modulation_hz: default_modulation_hz(),
            modulation_depth: 0.0,
            gain_jitter: default_jitter(),
        }
    }

    /// Noise channel whose gain depends on the class.
    pub fn graded(noise_gain: Vec<f64>) -> Self {
        let n = noise_gain.len();
        ChannelModel {
            noise_gain,
            ..ChannelModel::noise(n, 0.0)
        }
    }

    /// True when the channel's distribution depends on the class.
    pub fn is_informative(&self) -> bool {
        let differs = |v: &[f64]| v.windows(2).any(|w| w[0] != w[1]);
        differs(&self.noise_gain) || differs(&self.sinusoid_gain)
    }

    fn sinusoid_gain_for(&self, class: usize) -> f64 {
        self.sinusoid_gain.get(class).copied().unwrap_or(0.0)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SyntheticSpec {
    pub classes: Vec<String>,
    pub channels: Vec<ChannelModel>,
    #[serde(default = "default_fs")]
    pub sampling_rate_hz: f64,
    #[serde(default = "one")]
    pub participants: usize,
    #[serde(default = "one")]
    pub sessions: usize,
    /// Trials per class per session.
    pub trials_per_class: usize,
    pub samples_per_trial: usize,
    #[serde(default = "default_floor")]
    pub noise_floor: f64,
    /// Optional windows-per-class target, checked by [`SyntheticSpec::validate_for`].
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub windows_per_class: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
}

fn default_fs() -> f64 {
    200.0
}
fn one() -> usize {
    1
}
fn default_floor() -> f64 {
    0.01
}

impl SyntheticSpec {
    pub fn from_json(text: &str) -> std::result::Result<Self, serde_json::Error> {
        serde_json::from_str(text)
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(AuditError::InvalidSpec(msg));
        if self.classes.is_empty() {
            return bad("no classes".into());
        }
        for (i, c) in self.classes.iter().enumerate() {
            if c.is_empty() || c.contains(['/', '\\']) || self.classes[..i].contains(c) {
                return bad(format!("invalid or duplicate class name `{c}`"));
            }
        }
        if self.channels.is_empty() {
            return bad("no channels".into());
        }
        if self.participants == 0 || self.sessions == 0 || self.trials_per_class == 0 {
            return bad("participants, sessions and trials_per_class must be positive".into());
        }
        if self.samples_per_trial == 0 {
            return bad("samples_per_trial must be positive".into());
        }
        let fs = self.sampling_rate_hz;
        if !(fs.is_finite() && fs > 0.0) {
            return bad(format!("sampling rate must be positive, got {fs}"));
        }
        if !(self.noise_floor.is_finite() && self.noise_floor >= 0.0) {
            return bad("noise_floor must be nonnegative".into());
        }
        let k = self.classes.len();
        for (ch, m) in self.channels.iter().enumerate() {
            if m.noise_gain.len() != k {
                return bad(format!("channel {ch}: noise_gain needs {k} entries"));
            }
            if !m.sinusoid_gain.is_empty() && m.sinusoid_gain.len() != k {
                return bad(format!("channel {ch}: sinusoid_gain needs {k} entries"));
            }
            if m.noise_gain
                .iter()
                .chain(&m.sinusoid_gain)
                .any(|g| !(g.is_finite() && *g >= 0.0))
            {
                return bad(format!(
                    "channel {ch}: gains must be finite and nonnegative"
                ));
            }
            let [lo, hi] = m.noise_band_hz;
            if !(lo > 0.0 && lo < hi && hi < fs / 2.0) {
                return bad(format!(
                    "channel {ch}: noise band [{lo}, {hi}] must lie inside (0, fs/2)"
                ));
            }
            if !(m.modulation_depth >= 0.0 && m.modulation_depth <= 1.0) {
                return bad(format!("channel {ch}: modulation_depth must lie in [0, 1]"));
            }
            if !(m.gain_jitter.is_finite() && m.gain_jitter >= 0.0)
                || !m.modulation_hz.is_finite()
                || !m.sinusoid_hz.is_finite()
            {
                return bad(format!(
                    "channel {ch}: non-finite or negative model parameter"
                ));
            }
        }
        Ok(())
    }

    /// Windows per class produced by `cfg` on this spec's recordings.
    pub fn windows_per_class_under(&self, cfg: &SegmentationConfig) -> Result<usize> {
        let stride = cfg.stride()?;
        let head = super::trim_samples(cfg.trim_head_ms, self.sampling_rate_hz);
        let tail = super::trim_samples(cfg.trim_tail_ms, self.sampling_rate_hz);
        let trimmed = self.samples_per_trial.saturating_sub(head + tail);
        let per_session = if cfg.concat_trials_within_session {
            window_count(
                trimmed * self.trials_per_class,
                cfg.window_len_samples,
                stride,
            )
        } else {
            self.trials_per_class * window_count(trimmed, cfg.window_len_samples, stride)
        };
        Ok(per_session * self.sessions * self.participants)
    }

    /// Validates the spec and, when a windows-per-class target is set,
    /// checks that segmentation under `cfg` meets it.
    pub fn validate_for(&self, cfg: &SegmentationConfig) -> Result<()> {
        self.validate()?;
        if let Some(target) = self.windows_per_class {
            let got = self.windows_per_class_under(cfg)?;
            if got < target {
                return Err(AuditError::InvalidSpec(format!(
                    "layout yields {got} windows per class, below the target of {target}"
                )));
            }
        }
        Ok(())
    }
}

/// Second-order band-pass (constant 0 dB peak gain).
struct BandPass {
    b0: f64,
    b2: f64,
    a1: f64,
    a2: f64,
    x1: f64,
    x2: f64,
    y1: f64,
    y2: f64,
}

impl BandPass {
    fn new(lo: f64, hi: f64, fs: f64) -> Self {
        let f0 = (lo * hi).sqrt();
        let q = f0 / (hi - lo);
        let w0 = 2.0 * PI * f0 / fs;
        let alpha = w0.sin() / (2.0 * q);
        let a0 = 1.0 + alpha;
        BandPass {
            b0: alpha / a0,
            b2: -alpha / a0,
            a1: -2.0 * w0.cos() / a0,
            a2: (1.0 - alpha) / a0,
            x1: 0.0,
            x2: 0.0,
            y1: 0.0,
            y2: 0.0,
        }
    }

    /// Output variance for unit-variance white input: `Σ h[n]²` over the
    /// (decaying) impulse response.
    fn power_gain(lo: f64, hi: f64, fs: f64) -> f64 {
        let mut f = BandPass::new(lo, hi, fs);
        let mut total = f.step(1.0).powi(2);
        for _ in 0..1 << 14 {
            total += f.step(0.0).powi(2);
        }
        total
    }

    fn step(&mut self, x: f64) -> f64 {
        let y = self.b0 * x + self.b2 * self.x2 - self.a1 * self.y1 - self.a2 * self.y2;
        self.x2 = self.x1;
        self.x1 = x;
        self.y2 = self.y1;
        self.y1 = y;
        y
    }
}

fn gaussian(rng: &mut ChaCha8Rng) -> f64 {
    rng.sample::<f64, _>(StandardNormal)
}

fn generate_channel(
    model: &ChannelModel,
    class: usize,
    len: usize,
    fs: f64,
    noise_floor: f64,
    rng: &mut ChaCha8Rng,
) -> Vec<f64> {
    let [lo, hi] = model.noise_band_hz;
    // unit-variance output for unit-variance white input
    let norm = 1.0 / BandPass::power_gain(lo, hi, fs).sqrt();
    let gain = (model.gain_jitter * gaussian(rng) - 0.5 * model.gain_jitter.powi(2)).exp();
    let phase = rng.random::<f64>() * 2.0 * PI;
    let mod_phase = rng.random::<f64>() * 2.0 * PI;
    let sin_gain = model.sinusoid_gain_for(class);
    let noise_gain = model.noise_gain[class];

    let mut filter = BandPass::new(lo, hi, fs);
    for _ in 0..FILTER_WARMUP {
        filter.step(gaussian(rng));
    }
    (0..len)
        .map(|t| {
            let tt = t as f64 / fs;
            let band = filter.step(gaussian(rng)) * norm;
            let envelope = 1.0
                + model.modulation_depth * (2.0 * PI * model.modulation_hz * tt + mod_phase).sin();
            let tone = (2.0 * PI * model.sinusoid_hz * tt + phase).sin();
            gain * envelope * (sin_gain * tone + noise_gain * band) + noise_floor * gaussian(rng)
        })
        .collect()
}

/// Deterministic for a fixed `(spec, seed)`: each recording draws from its
/// own generator seeded from `seed` and the recording's identity.
pub fn generate_synthetic(spec: &SyntheticSpec, seed: u64) -> Result<RecordingSet> {
    spec.validate()?;
    let mut layout = Vec::new();
    for p in 0..spec.participants {
        for s in 0..spec.sessions {
            for class in 0..spec.classes.len() {
                for t in 0..spec.trials_per_class {
                    layout.push((p, s, class, t));
                }
            }
        }
    }
    let channels = spec.channels.len();
    let recordings = layout
        .par_iter()
        .map(|&(p, s, class, t)| {
            let participant_id = format!("p{:02}", p + 1);
            let session_id = format!("s{}", s + 1);
            let trial_id = format!("{:03}", t + 1);
            let label = &spec.classes[class];
            let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(
                seed,
                &format!("{participant_id}/{session_id}/{label}_{trial_id}"),
            ));
            let mut samples = Array2::zeros((channels, spec.samples_per_trial));
            for (ch, model) in spec.channels.iter().enumerate() {
                let values = generate_channel(
                    model,
                    class,
                    spec.samples_per_trial,
                    spec.sampling_rate_hz,
                    spec.noise_floor,
                    &mut rng,
                );
                samples
                    .row_mut(ch)
                    .assign(&ndarray::ArrayView1::from(&values));
            }
            Recording {
                samples,
                class_label: label.clone(),
                trial_id,
                session_id,
                participant_id,
            }
        })
        .collect();
    Ok(RecordingSet {
        recordings,
        sampling_rate_hz: spec.sampling_rate_hz,
        class_names: spec.classes.clone(),
        channel_count: channels,
    })
}
