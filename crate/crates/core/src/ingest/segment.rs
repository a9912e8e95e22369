use ndarray::{concatenate, s, Array2, ArrayView2, Axis};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{Recording, RecordingSet, WindowedSample};
use crate::error::{AuditError, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SegmentationConfig {
    pub trim_head_ms: f64,
    pub trim_tail_ms: f64,
    pub window_len_samples: usize,
    pub overlap_fraction: f64,
    /// Concatenate same-class trials of a session (after trimming) before windowing.
    pub concat_trials_within_session: bool,
}

impl Default for SegmentationConfig {
    fn default() -> Self {
        SegmentationConfig {
            trim_head_ms: 600.0,
            trim_tail_ms: 600.0,
            window_len_samples: 400,
            overlap_fraction: 0.5,
            concat_trials_within_session: true,
        }
    }
}

impl SegmentationConfig {
    pub fn validate(&self) -> Result<()> {
        self.stride().map(|_| ())
    }

    /// `round(W · (1 − overlap))`, required to be at least one sample.
    pub fn stride(&self) -> Result<usize> {
        if self.window_len_samples == 0 {
            return Err(AuditError::InvalidConfig(
                "window_len_samples must be positive".into(),
            ));
        }
        if !(0.0..1.0).contains(&self.overlap_fraction) {
            return Err(AuditError::InvalidConfig(format!(
                "overlap_fraction must lie in [0, 1), got {}",
                self.overlap_fraction
            )));
        }
        for (name, v) in [
            ("trim_head_ms", self.trim_head_ms),
            ("trim_tail_ms", self.trim_tail_ms),
        ] {
            if !(v.is_finite() && v >= 0.0) {
                return Err(AuditError::InvalidConfig(format!(
                    "{name} must be nonnegative, got {v}"
                )));
            }
        }
        let stride = (self.window_len_samples as f64 * (1.0 - self.overlap_fraction) + 0.5).floor();
        if stride < 1.0 {
            return Err(AuditError::InvalidConfig(format!(
                "window {} with overlap {} gives a zero stride",
                self.window_len_samples, self.overlap_fraction
            )));
        }
        Ok(stride as usize)
    }
}

/// Milliseconds to whole samples, rounding half up.
pub fn trim_samples(ms: f64, fs: f64) -> usize {
    (ms * fs / 1000.0 + 0.5).floor().max(0.0) as usize
}

pub fn trim(recording: &Recording, cfg: &SegmentationConfig, fs: f64) -> Result<Recording> {
    let head = trim_samples(cfg.trim_head_ms, fs);
    let tail = trim_samples(cfg.trim_tail_ms, fs);
    let len = recording.len();
    if head + tail >= len {
        return Err(AuditError::TrimExceedsLength {
            trial: recording.key(),
            length: len,
            removed: head + tail,
        });
    }
    Ok(Recording {
        samples: recording.samples.slice(s![.., head..len - tail]).to_owned(),
        ..recording.clone()
    })
}

/// Number of windows emitted for a stream of `len` samples.
pub fn window_count(len: usize, window_len: usize, stride: usize) -> usize {
    if len < window_len || window_len == 0 || stride == 0 {
        0
    } else {
        (len - window_len) / stride + 1
    }
}

fn window_stream(
    data: ArrayView2<'_, f64>,
    label: &str,
    source: &str,
    window_len: usize,
    stride: usize,
) -> Vec<WindowedSample> {
    let n = window_count(data.ncols(), window_len, stride);
    (0..n)
        .map(|i| {
            let start = i * stride;
            WindowedSample {
                data: data.slice(s![.., start..start + window_len]).to_owned(),
                class_label: label.to_string(),
                source_trial: source.to_string(),
                start_index: start,
            }
        })
        .collect()
}

/// Slices an already trimmed recording into windows at ascending start indices.
pub fn window(recording: &Recording, cfg: &SegmentationConfig) -> Result<Vec<WindowedSample>> {
    let stride = cfg.stride()?;
    Ok(window_stream(
        recording.samples.view(),
        &recording.class_label,
        &recording.key(),
        cfg.window_len_samples,
        stride,
    ))
}

/// Trim, optionally concatenate within session, and window a whole set.
///
/// Output order follows the recording order of `set` (groups in order of
/// their first recording), then ascending start index.
pub fn segment(set: &RecordingSet, cfg: &SegmentationConfig) -> Result<Vec<WindowedSample>> {
    let stride = cfg.stride()?;
    let fs = set.sampling_rate_hz;
    let trimmed = set
        .recordings
        .par_iter()
        .map(|r| trim(r, cfg, fs))
        .collect::<Result<Vec<_>>>()?;

    if !cfg.concat_trials_within_session {
        let per: Vec<Vec<WindowedSample>> = trimmed
            .par_iter()
            .map(|r| {
                window_stream(
                    r.samples.view(),
                    &r.class_label,
                    &r.key(),
                    cfg.window_len_samples,
                    stride,
                )
            })
            .collect();
        return Ok(per.into_iter().flatten().collect());
    }

    // group key -> member indices, in order of first appearance
    let mut groups: Vec<(String, Vec<usize>)> = Vec::new();
    for (i, r) in trimmed.iter().enumerate() {
        let key = format!("{}/{}/{}", r.participant_id, r.session_id, r.class_label);
        match groups.iter_mut().find(|(k, _)| *k == key) {
            Some((_, members)) => members.push(i),
            None => groups.push((key, vec![i])),
        }
    }
    let per: Vec<Vec<WindowedSample>> = groups
        .par_iter()
        .map(|(key, members)| {
            let views: Vec<_> = members.iter().map(|&i| trimmed[i].samples.view()).collect();
            let stream: Array2<f64> =
                concatenate(Axis(1), &views).expect("channel counts validated on load");
            let label = &trimmed[members[0]].class_label;
            window_stream(stream.view(), label, key, cfg.window_len_samples, stride)
        })
        .collect();
    Ok(per.into_iter().flatten().collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::Array2;

    fn rec(channels: usize, len: usize) -> Recording {
        Recording {
            samples: Array2::from_shape_fn((channels, len), |(c, t)| (c * 10_000 + t) as f64),
            class_label: "rock".into(),
            trial_id: "1".into(),
            session_id: "s1".into(),
            participant_id: "p1".into(),
        }
    }

    fn cfg(window: usize, overlap: f64) -> SegmentationConfig {
        SegmentationConfig {
            trim_head_ms: 0.0,
            trim_tail_ms: 0.0,
            window_len_samples: window,
            overlap_fraction: overlap,
            concat_trials_within_session: false,
        }
    }

    #[test]
    fn trim_600ms_at_200hz() {
        let r = trim(&rec(8, 600), &SegmentationConfig::default(), 200.0).unwrap();
        assert_eq!(r.len(), 360);
        assert_eq!(r.samples[[0, 0]], 120.0);
        assert_eq!(r.samples[[0, 359]], 479.0);
    }

    #[test]
    fn trim_zero_is_identity() {
        let r = rec(2, 50);
        assert_eq!(trim(&r, &cfg(10, 0.0), 200.0).unwrap(), r);
    }

    #[test]
    fn trim_exceeding_length() {
        let err = trim(&rec(2, 200), &SegmentationConfig::default(), 200.0).unwrap_err();
        assert!(matches!(
            err,
            AuditError::TrimExceedsLength {
                length: 200,
                removed: 240,
                ..
            }
        ));
        // exactly consuming the trial is also rejected
        assert!(trim(&rec(2, 240), &SegmentationConfig::default(), 200.0).is_err());
    }

    #[test]
    fn trim_rounds_half_up() {
        assert_eq!(trim_samples(2.5, 1000.0), 3);
        assert_eq!(trim_samples(2.4, 1000.0), 2);
        assert_eq!(trim_samples(600.0, 200.0), 120);
    }

    #[test]
    fn window_examples() {
        let w = window(&rec(1, 400), &cfg(400, 0.5)).unwrap();
        assert_eq!(w.len(), 1);
        assert_eq!(w[0].start_index, 0);

        let w = window(&rec(1, 600), &cfg(400, 0.5)).unwrap();
        assert_eq!(
            w.iter().map(|s| s.start_index).collect::<Vec<_>>(),
            vec![0, 200]
        );
        assert_eq!(w[1].data[[0, 0]], 200.0);

        assert!(window(&rec(1, 399), &cfg(400, 0.5)).unwrap().is_empty());
    }

    #[test]
    fn zero_stride_rejected() {
        assert!(cfg(1, 0.75).stride().is_err());
        assert!(cfg(4, 1.0).stride().is_err());
        assert_eq!(cfg(400, 0.5).stride().unwrap(), 200);
        assert_eq!(cfg(50, 0.75).stride().unwrap(), 13);
    }

    #[test]
    fn window_count_matches_enumeration() {
        for &w in &[50usize, 400] {
            for &ov in &[0.0, 0.25, 0.5, 0.75] {
                let c = cfg(w, ov);
                let stride = c.stride().unwrap();
                for t in 1..=2000usize {
                    let mut enumerated = 0;
                    let mut start = 0;
                    while start + w <= t {
                        enumerated += 1;
                        start += stride;
                    }
                    assert_eq!(
                        window_count(t, w, stride),
                        enumerated,
                        "T={t} W={w} ov={ov}"
                    );
                }
            }
        }
    }

    #[test]
    fn non_overlapping_windows_reconstruct_prefix() {
        let r = rec(3, 1037);
        let w = window(&r, &cfg(100, 0.0)).unwrap();
        let parts: Vec<_> = w.iter().map(|s| s.data.view()).collect();
        let joined = concatenate(Axis(1), &parts).unwrap();
        assert_eq!(joined, r.samples.slice(s![.., ..1000]));
    }

    #[test]
    fn segment_concatenates_session_trials() {
        let mut a = rec(2, 600);
        let mut b = rec(2, 600);
        b.trial_id = "2".into();
        let mut other = rec(2, 600);
        other.class_label = "paper".into();
        a.samples.fill(1.0);
        b.samples.fill(2.0);
        let set = RecordingSet {
            recordings: vec![a, b, other],
            sampling_rate_hz: 200.0,
            class_names: vec!["paper".into(), "rock".into()],
            channel_count: 2,
        };
        let cfg = SegmentationConfig::default();
        let w = segment(&set, &cfg).unwrap();
        // rock: 720 concatenated samples -> floor(320/200)+1 = 2; paper: 360 -> 0
        assert_eq!(w.len(), 2);
        assert!(w
            .iter()
            .all(|s| s.class_label == "rock" && s.source_trial == "p1/s1/rock"));
        assert_eq!(w[1].start_index, 200);
        // second window straddles the trial boundary at 360
        assert_eq!(w[1].data[[0, 159]], 1.0);
        assert_eq!(w[1].data[[0, 160]], 2.0);

        let unconcat = SegmentationConfig {
            concat_trials_within_session: false,
            ..cfg
        };
        assert!(segment(&set, &unconcat).unwrap().is_empty());
    }
}
