//! On-disk layout: `<root>/<participant>/<session>/<class>_<trial>.csv`
//! with a `dataset.json` manifest at the root. Each CSV has the header
//! `t,ch1,...,chM` and one row per timestamp.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use ndarray::Array2;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{Recording, RecordingSet};
use crate::error::{AuditError, Result};

pub const MANIFEST_FILE: &str = "dataset.json";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetManifest {
    pub sampling_rate_hz: f64,
    pub class_names: Vec<String>,
    pub channel_count: usize,
}

impl DatasetManifest {
    pub fn read(root: &Path) -> Result<Self> {
        let path = root.join(MANIFEST_FILE);
        let text = fs::read_to_string(&path).map_err(|e| AuditError::io(&path, e))?;
        serde_json::from_str(&text).map_err(|source| AuditError::Json { path, source })
    }
}

fn sorted_entries(dir: &Path, want_dirs: bool) -> Result<Vec<PathBuf>> {
    let mut out = Vec::new();
    for entry in fs::read_dir(dir).map_err(|e| AuditError::io(dir, e))? {
        let entry = entry.map_err(|e| AuditError::io(dir, e))?;
        let path = entry.path();
        let wanted = if want_dirs {
            path.is_dir()
        } else {
            path.is_file() && path.extension().is_some_and(|e| e == "csv")
        };
        if wanted {
            out.push(path);
        }
    }
    out.sort();
    Ok(out)
}

fn file_name(p: &Path) -> String {
    p.file_name()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_default()
}

struct FileJob {
    path: PathBuf,
    participant: String,
    session: String,
    class_label: String,
    trial: String,
}

fn parse_csv(job: &FileJob, channel_count: usize) -> Result<Array2<f64>> {
    let malformed = |line: u64, reason: String| AuditError::MalformedRow {
        file: job.path.clone(),
        line,
        reason,
    };
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .flexible(true)
        .from_path(&job.path)
        .map_err(|e| match e.into_kind() {
            csv::ErrorKind::Io(io) => AuditError::io(&job.path, io),
            other => malformed(1, format!("{other:?}")),
        })?;

    let header = reader
        .headers()
        .map_err(|e| malformed(1, e.to_string()))?
        .clone();
    if header.get(0).map(str::trim) != Some("t") {
        return Err(malformed(1, "header must start with `t`".into()));
    }
    let found = header.len().saturating_sub(1);
    if found != channel_count {
        return Err(AuditError::InconsistentChannelCount {
            file: job.path.clone(),
            expected: channel_count,
            found,
        });
    }
    for (i, name) in header.iter().skip(1).enumerate() {
        if name.trim() != format!("ch{}", i + 1) {
            return Err(malformed(
                1,
                format!("expected column `ch{}`, found `{name}`", i + 1),
            ));
        }
    }

    let mut columns: Vec<f64> = Vec::new();
    let mut rows = 0usize;
    for record in reader.records() {
        let record = record.map_err(|e| {
            let line = e.position().map_or(0, |p| p.line());
            malformed(line, e.to_string())
        })?;
        let line = record.position().map_or(0, |p| p.line());
        if record.len() != channel_count + 1 {
            return Err(malformed(
                line,
                format!(
                    "expected {} cells, found {}",
                    channel_count + 1,
                    record.len()
                ),
            ));
        }
        for (i, cell) in record.iter().enumerate() {
            let v: f64 = cell
                .trim()
                .parse()
                .map_err(|_| malformed(line, format!("non-numeric cell `{cell}`")))?;
            if !v.is_finite() {
                return Err(malformed(line, format!("non-finite cell `{cell}`")));
            }
            if i > 0 {
                columns.push(v);
            }
        }
        rows += 1;
    }
    if rows == 0 {
        return Err(malformed(2, "recording has no samples".into()));
    }
    // rows were pushed timestamp-major; transpose into channels × T
    let by_time =
        Array2::from_shape_vec((rows, channel_count), columns).expect("row widths checked above");
    Ok(by_time.t().to_owned())
}

/// Loads every recording under `root`, in lexicographic path order.
pub fn load_dataset(root: &Path) -> Result<RecordingSet> {
    if !root.is_dir() {
        return Err(AuditError::MissingFile {
            path: root.to_path_buf(),
        });
    }
    let manifest = DatasetManifest::read(root)?;

    let mut jobs = Vec::new();
    for participant in sorted_entries(root, true)? {
        for session in sorted_entries(&participant, true)? {
            for path in sorted_entries(&session, false)? {
                let stem = path
                    .file_stem()
                    .map(|s| s.to_string_lossy().into_owned())
                    .unwrap_or_default();
                let Some((class_label, trial)) = stem.rsplit_once('_') else {
                    return Err(AuditError::UnknownClassLabel {
                        file: path,
                        label: stem,
                    });
                };
                if !manifest.class_names.iter().any(|c| c == class_label) {
                    return Err(AuditError::UnknownClassLabel {
                        label: class_label.to_string(),
                        file: path,
                    });
                }
                jobs.push(FileJob {
                    participant: file_name(&participant),
                    session: file_name(&session),
                    class_label: class_label.to_string(),
                    trial: trial.to_string(),
                    path,
                });
            }
        }
    }

    let recordings = jobs
        .par_iter()
        .map(|job| {
            Ok(Recording {
                samples: parse_csv(job, manifest.channel_count)?,
                class_label: job.class_label.clone(),
                trial_id: job.trial.clone(),
                session_id: job.session.clone(),
                participant_id: job.participant.clone(),
            })
        })
        .collect::<Result<Vec<_>>>()?;

    let set = RecordingSet {
        recordings,
        sampling_rate_hz: manifest.sampling_rate_hz,
        class_names: manifest.class_names,
        channel_count: manifest.channel_count,
    };
    set.validate()?;
    Ok(set)
}

/// Writes `set` in the layout read by [`load_dataset`]. Amplitudes use the
/// shortest round-trip decimal form, so a reload is bit-exact.
pub fn write_dataset(set: &RecordingSet, root: &Path) -> Result<()> {
    fs::create_dir_all(root).map_err(|e| AuditError::io(root, e))?;
    let manifest = DatasetManifest {
        sampling_rate_hz: set.sampling_rate_hz,
        class_names: set.class_names.clone(),
        channel_count: set.channel_count,
    };
    let manifest_path = root.join(MANIFEST_FILE);
    let json = serde_json::to_string_pretty(&manifest).map_err(|source| AuditError::Json {
        path: manifest_path.clone(),
        source,
    })?;
    fs::write(&manifest_path, json + "\n").map_err(|e| AuditError::io(&manifest_path, e))?;

    for rec in &set.recordings {
        let dir = root.join(&rec.participant_id).join(&rec.session_id);
        fs::create_dir_all(&dir).map_err(|e| AuditError::io(&dir, e))?;
        let path = dir.join(format!("{}_{}.csv", rec.class_label, rec.trial_id));
        let mut out = String::with_capacity(rec.samples.len() * 12);
        out.push('t');
        for c in 0..rec.channel_count() {
            out.push_str(&format!(",ch{}", c + 1));
        }
        out.push('\n');
        for t in 0..rec.len() {
            out.push_str(&t.to_string());
            for c in 0..rec.channel_count() {
                out.push(',');
                out.push_str(&rec.samples[[c, t]].to_string());
            }
            out.push('\n');
        }
        let mut file = fs::File::create(&path).map_err(|e| AuditError::io(&path, e))?;
        file.write_all(out.as_bytes())
            .map_err(|e| AuditError::io(&path, e))?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn write_manifest(root: &Path, classes: &[&str], channels: usize) {
        let m = DatasetManifest {
            sampling_rate_hz: 200.0,
            class_names: classes.iter().map(|s| s.to_string()).collect(),
            channel_count: channels,
        };
        fs::write(root.join(MANIFEST_FILE), serde_json::to_string(&m).unwrap()).unwrap();
    }

    fn write_trial(root: &Path, p: &str, s: &str, name: &str, channels: usize, rows: usize) {
        let dir = root.join(p).join(s);
        fs::create_dir_all(&dir).unwrap();
        let mut text = String::from("t");
        for c in 1..=channels {
            text.push_str(&format!(",ch{c}"));
        }
        text.push('\n');
        for t in 0..rows {
            text.push_str(&t.to_string());
            for c in 0..channels {
                text.push_str(&format!(",{}", (t * channels + c) as f64 * 0.5 - 3.0));
            }
            text.push('\n');
        }
        fs::write(dir.join(name), text).unwrap();
    }

    #[test]
    fn loads_two_trials() {
        let dir = tempfile::tempdir().unwrap();
        write_manifest(dir.path(), &["rock", "paper"], 8);
        write_trial(dir.path(), "p01", "s1", "rock_1.csv", 8, 600);
        write_trial(dir.path(), "p01", "s1", "rock_2.csv", 8, 600);
        let set = load_dataset(dir.path()).unwrap();
        assert_eq!(set.recordings.len(), 2);
        assert_eq!(set.channel_count, 8);
        let r = &set.recordings[0];
        assert_eq!(r.samples.dim(), (8, 600));
        assert_eq!(r.trial_id, "1");
        assert_eq!(r.samples[[3, 2]], (2 * 8 + 3) as f64 * 0.5 - 3.0);
    }

    #[test]
    fn non_numeric_cell_names_file_and_line() {
        let dir = tempfile::tempdir().unwrap();
        write_manifest(dir.path(), &["rock"], 2);
        let sess = dir.path().join("p01").join("s1");
        fs::create_dir_all(&sess).unwrap();
        fs::write(sess.join("rock_1.csv"), "t,ch1,ch2\n0,1,2\n1,abc,3\n").unwrap();
        match load_dataset(dir.path()).unwrap_err() {
            AuditError::MalformedRow { file, line, .. } => {
                assert!(file.ends_with("rock_1.csv"));
                assert_eq!(line, 3);
            }
            e => panic!("unexpected {e:?}"),
        }
    }

    #[test]
    fn nan_cells_are_rejected() {
        let dir = tempfile::tempdir().unwrap();
        write_manifest(dir.path(), &["rock"], 1);
        let sess = dir.path().join("p01").join("s1");
        fs::create_dir_all(&sess).unwrap();
        fs::write(sess.join("rock_1.csv"), "t,ch1\n0,1\n1,NaN\n").unwrap();
        assert!(matches!(
            load_dataset(dir.path()).unwrap_err(),
            AuditError::MalformedRow { line: 3, .. }
        ));
    }

    #[test]
    fn header_channel_count_must_match_manifest() {
        let dir = tempfile::tempdir().unwrap();
        write_manifest(dir.path(), &["rock"], 8);
        write_trial(dir.path(), "p01", "s1", "rock_1.csv", 7, 10);
        assert!(matches!(
            load_dataset(dir.path()).unwrap_err(),
            AuditError::InconsistentChannelCount {
                expected: 8,
                found: 7,
                ..
            }
        ));
    }

    #[test]
    fn unknown_class_and_missing_manifest() {
        let dir = tempfile::tempdir().unwrap();
        assert!(matches!(
            load_dataset(dir.path()).unwrap_err(),
            AuditError::MissingFile { .. }
        ));
        write_manifest(dir.path(), &["rock"], 2);
        write_trial(dir.path(), "p01", "s1", "lizard_1.csv", 2, 10);
        assert!(matches!(
            load_dataset(dir.path()).unwrap_err(),
            AuditError::UnknownClassLabel { label, .. } if label == "lizard"
        ));
    }

    #[test]
    fn roshambo_layout_yields_450_recordings() {
        let dir = tempfile::tempdir().unwrap();
        let classes = ["rock", "paper", "scissors"];
        write_manifest(dir.path(), &classes, 8);
        for p in 1..=10 {
            for s in 1..=3 {
                for c in classes {
                    for t in 1..=5 {
                        write_trial(
                            dir.path(),
                            &format!("p{p:02}"),
                            &format!("s{s}"),
                            &format!("{c}_{t}.csv"),
                            8,
                            4,
                        );
                    }
                }
            }
        }
        let set = load_dataset(dir.path()).unwrap();
        assert_eq!(set.recordings.len(), 450);
        // lexicographic file order
        assert_eq!(set.recordings[0].key(), "p01/s1/paper_1");
        assert_eq!(set.recordings[449].key(), "p10/s3/scissors_5");
    }
}
