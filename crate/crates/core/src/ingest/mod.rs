//! Raw recordings: loading, trimming, windowing and synthetic generation.
//!
//! A [`RecordingSet`] holds every trial of a study as a `channels × T`
//! matrix. [`segment`] turns it into fixed-length [`WindowedSample`]s, the
//! unit from which feature vectors are extracted.

mod dataset;
mod segment;
mod synthetic;

use ndarray::Array2;
use serde::{Deserialize, Serialize};

use crate::error::{AuditError, Result};

pub use dataset::{load_dataset, write_dataset, DatasetManifest, MANIFEST_FILE};
pub use segment::{segment, trim, trim_samples, window, window_count, SegmentationConfig};
pub use synthetic::{generate_synthetic, ChannelModel, SyntheticSpec};

/// Label used for the resting/control class, excluded from audits by default.
pub const REST_CLASS: &str = "rest";

pub fn is_rest_class(label: &str) -> bool {
    label.eq_ignore_ascii_case(REST_CLASS)
}

/// One trial: `channels × T` amplitudes plus its labels.
#[derive(Debug, Clone, PartialEq)]
pub struct Recording {
    pub samples: Array2<f64>,
    pub class_label: String,
    pub trial_id: String,
    pub session_id: String,
    pub participant_id: String,
}

impl Recording {
    pub fn channel_count(&self) -> usize {
        self.samples.nrows()
    }

    pub fn len(&self) -> usize {
        self.samples.ncols()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.ncols() == 0
    }

    /// `participant/session/class_trial`, unique within a set.
    pub fn key(&self) -> String {
        format!(
            "{}/{}/{}_{}",
            self.participant_id, self.session_id, self.class_label, self.trial_id
        )
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RecordingSet {
    pub recordings: Vec<Recording>,
    pub sampling_rate_hz: f64,
    pub class_names: Vec<String>,
    pub channel_count: usize,
}

impl RecordingSet {
    pub fn validate(&self) -> Result<()> {
        if !(self.sampling_rate_hz.is_finite() && self.sampling_rate_hz > 0.0) {
            return Err(AuditError::InvalidConfig(format!(
                "sampling rate must be positive, got {}",
                self.sampling_rate_hz
            )));
        }
        if self.channel_count == 0 {
            return Err(AuditError::InvalidConfig(
                "channel_count must be positive".into(),
            ));
        }
        for rec in &self.recordings {
            let file = std::path::PathBuf::from(rec.key());
            if rec.channel_count() != self.channel_count {
                return Err(AuditError::InconsistentChannelCount {
                    file,
                    expected: self.channel_count,
                    found: rec.channel_count(),
                });
            }
            if !self.class_names.contains(&rec.class_label) {
                return Err(AuditError::UnknownClassLabel {
                    file,
                    label: rec.class_label.clone(),
                });
            }
            if rec.is_empty() {
                return Err(AuditError::MalformedRow {
                    file,
                    line: 2,
                    reason: "recording has no samples".into(),
                });
            }
            if rec.samples.iter().any(|v| !v.is_finite()) {
                return Err(AuditError::MalformedRow {
                    file,
                    line: 0,
                    reason: "non-finite amplitude".into(),
                });
            }
        }
        Ok(())
    }

    /// Copy of the set without the listed classes.
    pub fn without_classes(&self, drop: impl Fn(&str) -> bool) -> RecordingSet {
        RecordingSet {
            recordings: self
                .recordings
                .iter()
                .filter(|r| !drop(&r.class_label))
                .cloned()
                .collect(),
            sampling_rate_hz: self.sampling_rate_hz,
            class_names: self
                .class_names
                .iter()
                .filter(|c| !drop(c))
                .cloned()
                .collect(),
            channel_count: self.channel_count,
        }
    }
}

/// A fixed-length multi-channel segment of one (possibly concatenated) trial.
#[derive(Debug, Clone, PartialEq)]
pub struct WindowedSample {
    pub data: Array2<f64>,
    pub class_label: String,
    pub source_trial: String,
    pub start_index: usize,
}

impl WindowedSample {
    pub fn channel_count(&self) -> usize {
        self.data.nrows()
    }

    pub fn len(&self) -> usize {
        self.data.ncols()
    }

    pub fn is_empty(&self) -> bool {
        self.data.ncols() == 0
    }
}

/// Row provenance carried into feature matrices.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SampleId {
    pub trial: String,
    pub start: usize,
}

impl From<&WindowedSample> for SampleId {
    fn from(s: &WindowedSample) -> Self {
        SampleId {
            trial: s.source_trial.clone(),
            start: s.start_index,
        }
    }
}
