//! Per-channel feature extraction and per-class feature matrices.
//!
//! Every window of `M` channels maps to a vector of `M × |features|`
//! values, laid out channel-major: all features of channel 0, then all
//! features of channel 1, and so on. A channel's columns are therefore a
//! contiguous block, which the ablation audit relies on.

mod spectral;
mod time_domain;

use std::collections::BTreeMap;
use std::fmt;

use ndarray::Array2;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{AuditError, Result};
use crate::ingest::{SampleId, WindowedSample};

pub use spectral::{
    haar_decompose, median_frequency, periodogram, wavelet_energy, HaarDecomposition,
};
pub use time_domain::{
    fractal_dimension, rms, sample_entropy, sample_entropy_cap, shannon_entropy,
    slope_sign_changes, waveform_length, zero_crossings, SampleEntropy, KATZ_FD_CAP,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FeatureKind {
    ShannonEntropy,
    SampleEntropy,
    ZeroCrossings,
    WaveformLength,
    Rms,
    SlopeSignChanges,
    MedianFrequency,
    WaveletEnergy,
    FractalDimension,
}

impl FeatureKind {
    pub const ALL: [FeatureKind; 9] = [
        FeatureKind::ShannonEntropy,
        FeatureKind::SampleEntropy,
        FeatureKind::ZeroCrossings,
        FeatureKind::WaveformLength,
        FeatureKind::Rms,
        FeatureKind::SlopeSignChanges,
        FeatureKind::MedianFrequency,
        FeatureKind::WaveletEnergy,
        FeatureKind::FractalDimension,
    ];

    pub fn name(self) -> &'static str {
        match self {
            FeatureKind::ShannonEntropy => "shannon_entropy",
            FeatureKind::SampleEntropy => "sample_entropy",
            FeatureKind::ZeroCrossings => "zero_crossings",
            FeatureKind::WaveformLength => "waveform_length",
            FeatureKind::Rms => "rms",
            FeatureKind::SlopeSignChanges => "slope_sign_changes",
            FeatureKind::MedianFrequency => "median_frequency",
            FeatureKind::WaveletEnergy => "wavelet_energy",
            FeatureKind::FractalDimension => "fractal_dimension",
        }
    }

    /// Value produced for a constant (e.g. nullified) channel.
    pub fn constant_signal_value(self) -> f64 {
        match self {
            FeatureKind::FractalDimension => 1.0,
            _ => 0.0,
        }
    }
}

impl fmt::Display for FeatureKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FeatureConfig {
    pub entropy_bins: usize,
    pub sampen_m: usize,
    /// Sample entropy tolerance as a fraction of the window's standard deviation.
    pub sampen_r_coeff: f64,
    pub zc_threshold: f64,
    pub ssc_threshold: f64,
    pub wavelet_levels: usize,
    pub enabled_features: Vec<FeatureKind>,
}

impl Default for FeatureConfig {
    fn default() -> Self {
        FeatureConfig {
            entropy_bins: 128,
            sampen_m: 2,
            sampen_r_coeff: 0.2,
            zc_threshold: 0.0,
            ssc_threshold: 0.0,
            wavelet_levels: 4,
            enabled_features: FeatureKind::ALL.to_vec(),
        }
    }
}

impl FeatureConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(AuditError::InvalidConfig(m.to_string()));
        if self.entropy_bins == 0 || self.sampen_m == 0 || self.wavelet_levels == 0 {
            return bad("entropy_bins, sampen_m and wavelet_levels must be positive");
        }
        if !(self.sampen_r_coeff.is_finite() && self.sampen_r_coeff > 0.0) {
            return bad("sampen_r_coeff must be positive");
        }
        if !(self.zc_threshold >= 0.0 && self.ssc_threshold >= 0.0) {
            return bad("thresholds must be nonnegative");
        }
        if self.enabled_features.is_empty() {
            return bad("no features enabled");
        }
        for (i, f) in self.enabled_features.iter().enumerate() {
            if self.enabled_features[..i].contains(f) {
                return bad(&format!("feature `{f}` enabled twice"));
            }
        }
        Ok(())
    }

    /// Shortest window every enabled extractor accepts.
    pub fn min_window_len(&self) -> usize {
        self.enabled_features
            .iter()
            .map(|f| match f {
                FeatureKind::SampleEntropy => self.sampen_m + 2,
                FeatureKind::SlopeSignChanges => 3,
                FeatureKind::ZeroCrossings | FeatureKind::MedianFrequency => 2,
                _ => 1,
            })
            .max()
            .unwrap_or(1)
    }

    pub fn features_per_channel(&self) -> usize {
        self.enabled_features.len()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct ColumnId {
    pub channel: usize,
    pub feature: FeatureKind,
}

impl ColumnId {
    /// Export name, e.g. `ch3_rms` (channels are 1-based, as in the input CSV).
    pub fn name(&self) -> String {
        format!("ch{}_{}", self.channel + 1, self.feature)
    }
}

pub fn column_layout(channels: usize, cfg: &FeatureConfig) -> Vec<ColumnId> {
    (0..channels)
        .flat_map(|channel| {
            cfg.enabled_features
                .iter()
                .map(move |&feature| ColumnId { channel, feature })
        })
        .collect()
}

/// Features of one channel in configured order, and which entries were capped.
pub fn channel_features(signal: &[f64], cfg: &FeatureConfig, fs: f64) -> (Vec<f64>, Vec<bool>) {
    let mut values = Vec::with_capacity(cfg.enabled_features.len());
    let mut capped = Vec::with_capacity(cfg.enabled_features.len());
    for &f in &cfg.enabled_features {
        let mut was_capped = false;
        let v = match f {
            FeatureKind::ShannonEntropy => shannon_entropy(signal, cfg.entropy_bins),
            FeatureKind::SampleEntropy => {
                let s = sample_entropy(signal, cfg.sampen_m, cfg.sampen_r_coeff);
                was_capped = s.capped;
                s.value
            }
            FeatureKind::ZeroCrossings => zero_crossings(signal, cfg.zc_threshold) as f64,
            FeatureKind::WaveformLength => waveform_length(signal),
            FeatureKind::Rms => rms(signal),
            FeatureKind::SlopeSignChanges => slope_sign_changes(signal, cfg.ssc_threshold) as f64,
            FeatureKind::MedianFrequency => median_frequency(signal, fs),
            FeatureKind::WaveletEnergy => wavelet_energy(signal, cfg.wavelet_levels),
            FeatureKind::FractalDimension => fractal_dimension(signal),
        };
        values.push(v);
        capped.push(was_capped);
    }
    (values, capped)
}

#[derive(Debug, Clone, PartialEq)]
pub struct FeatureVector {
    pub values: Vec<f64>,
    /// Columns holding a capped sample-entropy value.
    pub capped_columns: Vec<usize>,
}

pub fn extract_features(
    sample: &WindowedSample,
    cfg: &FeatureConfig,
    fs: f64,
) -> Result<FeatureVector> {
    let required = cfg.min_window_len();
    if sample.len() < required {
        return Err(AuditError::WindowTooShort {
            len: sample.len(),
            required,
        });
    }
    let per = cfg.features_per_channel();
    let mut values = Vec::with_capacity(sample.channel_count() * per);
    let mut capped_columns = Vec::new();
    for (ch, row) in sample.data.rows().into_iter().enumerate() {
        let signal = row.to_vec();
        let (v, c) = channel_features(&signal, cfg, fs);
        values.extend(v);
        capped_columns.extend(
            c.iter()
                .enumerate()
                .filter(|(_, &c)| c)
                .map(|(i, _)| ch * per + i),
        );
    }
    Ok(FeatureVector {
        values,
        capped_columns,
    })
}

/// Feature vectors of one class, one row per window.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureMatrix {
    pub values: Array2<f64>,
    pub class_label: String,
    pub column_index: Vec<ColumnId>,
    pub row_provenance: Vec<SampleId>,
    /// `(row, column)` cells holding a capped value.
    pub capped_cells: Vec<(usize, usize)>,
}

impl FeatureMatrix {
    pub fn rows(&self) -> usize {
        self.values.nrows()
    }

    pub fn cols(&self) -> usize {
        self.values.ncols()
    }

    /// Rows of all `parts` stacked in order under a new label.
    pub fn pooled(label: &str, parts: &[&FeatureMatrix]) -> Result<FeatureMatrix> {
        let Some(first) = parts.first() else {
            return Err(AuditError::TooFewRows {
                class: label.to_string(),
                rows: 0,
                required: 1,
            });
        };
        if parts.iter().any(|p| p.column_index != first.column_index) {
            return Err(AuditError::MismatchedColumns);
        }
        let views: Vec<_> = parts.iter().map(|p| p.values.view()).collect();
        let values = ndarray::concatenate(ndarray::Axis(0), &views)
            .map_err(|_| AuditError::MismatchedColumns)?;
        let mut capped_cells = Vec::new();
        let mut offset = 0;
        for p in parts {
            capped_cells.extend(p.capped_cells.iter().map(|&(r, c)| (r + offset, c)));
            offset += p.rows();
        }
        Ok(FeatureMatrix {
            values,
            class_label: label.to_string(),
            column_index: first.column_index.clone(),
            row_provenance: parts
                .iter()
                .flat_map(|p| p.row_provenance.iter().cloned())
                .collect(),
            capped_cells,
        })
    }
}

/// Extracts features for `samples` of a single class, preserving order.
pub fn build_matrix(
    label: &str,
    samples: &[&WindowedSample],
    cfg: &FeatureConfig,
    fs: f64,
) -> Result<FeatureMatrix> {
    let channels = samples.first().map_or(0, |s| s.channel_count());
    if samples.iter().any(|s| s.channel_count() != channels) {
        return Err(AuditError::MismatchedColumns);
    }
    let vectors = samples
        .par_iter()
        .map(|s| extract_features(s, cfg, fs))
        .collect::<Result<Vec<_>>>()?;
    let columns = column_layout(channels, cfg);
    let mut values = Array2::zeros((vectors.len(), columns.len()));
    let mut capped_cells = Vec::new();
    for (r, v) in vectors.into_iter().enumerate() {
        values
            .row_mut(r)
            .assign(&ndarray::ArrayView1::from(&v.values));
        capped_cells.extend(v.capped_columns.into_iter().map(|c| (r, c)));
    }
    Ok(FeatureMatrix {
        values,
        class_label: label.to_string(),
        column_index: columns,
        row_provenance: samples.iter().map(|s| SampleId::from(*s)).collect(),
        capped_cells,
    })
}

/// Groups samples by class label and extracts one matrix per class.
pub fn build_class_matrices(
    samples: &[WindowedSample],
    cfg: &FeatureConfig,
    fs: f64,
) -> Result<BTreeMap<String, FeatureMatrix>> {
    cfg.validate()?;
    let mut groups: BTreeMap<&str, Vec<&WindowedSample>> = BTreeMap::new();
    for s in samples {
        groups.entry(s.class_label.as_str()).or_default().push(s);
    }
    if let Some(ch) = samples.first().map(|s| s.channel_count()) {
        if samples.iter().any(|s| s.channel_count() != ch) {
            return Err(AuditError::MismatchedColumns);
        }
    }
    groups
        .into_iter()
        .map(|(label, members)| Ok((label.to_string(), build_matrix(label, &members, cfg, fs)?)))
        .collect()
}
