//! End-to-end runs of the library: synthetic data through segmentation,
//! features, both audits and the oracle.

use std::collections::BTreeMap;

use sensaudit_core::ablation::{ablation_audit_from_matrices, run_ablation_audit, AblationSpec};
use sensaudit_core::features::{build_class_matrices, FeatureConfig, FeatureMatrix};
use sensaudit_core::ingest::{
    generate_synthetic, load_dataset, segment, write_dataset, ChannelModel, SegmentationConfig,
    SyntheticSpec, WindowedSample,
};
use sensaudit_core::oracle::{run_oracle_audit, OracleConfig};
use sensaudit_core::separability::{pairwise_audit, AuditMode};

fn graded_spec() -> SyntheticSpec {
    SyntheticSpec {
        classes: vec!["a".into(), "b".into(), "c".into()],
        channels: vec![
            ChannelModel::graded(vec![1.0, 1.1, 2.0]),
            ChannelModel::noise(3, 1.0),
            ChannelModel::noise(3, 1.0),
        ],
        sampling_rate_hz: 200.0,
        participants: 1,
        sessions: 2,
        trials_per_class: 6,
        samples_per_trial: 640,
        noise_floor: 0.01,
        windows_per_class: None,
        seed: None,
    }
}

fn segmentation() -> SegmentationConfig {
    SegmentationConfig {
        concat_trials_within_session: false,
        ..SegmentationConfig::default()
    }
}

fn windows(seed: u64) -> Vec<WindowedSample> {
    let set = generate_synthetic(&graded_spec(), seed).unwrap();
    segment(&set, &segmentation()).unwrap()
}

fn matrices(seed: u64) -> BTreeMap<String, FeatureMatrix> {
    build_class_matrices(&windows(seed), &FeatureConfig::default(), 200.0).unwrap()
}

#[test]
fn dataset_round_trips_through_disk() {
    let set = generate_synthetic(&graded_spec(), 11).unwrap();
    let dir = tempfile::tempdir().unwrap();
    write_dataset(&set, dir.path()).unwrap();
    let loaded = load_dataset(dir.path()).unwrap();
    assert_eq!(loaded, set);
}

#[test]
fn generation_is_seed_deterministic() {
    let spec = graded_spec();
    assert_eq!(
        generate_synthetic(&spec, 4).unwrap(),
        generate_synthetic(&spec, 4).unwrap()
    );
    assert_ne!(
        generate_synthetic(&spec, 4).unwrap(),
        generate_synthetic(&spec, 5).unwrap()
    );
}

#[test]
fn closest_pair_has_lowest_separability() {
    let m = matrices(3);
    // each 640-sample trial trims to 400 samples: one window per trial
    assert!(m.values().all(|x| x.rows() == 12 && x.cols() == 27));
    let audit = pairwise_audit(&m, AuditMode::OneVsOne).unwrap();
    assert_eq!(audit.entries.len(), 3);
    let ab = audit.entry("a", "b").unwrap();
    assert!(audit.entries.iter().all(|e| e.raw_fdr >= ab.raw_fdr));
    let top = audit
        .entries
        .iter()
        .map(|e| e.normalized_fdr)
        .fold(0.0, f64::max);
    assert_eq!(top, 1.0);
    let rest = pairwise_audit(&m, AuditMode::OneVsRest).unwrap();
    assert_eq!(rest.entries.len(), 3);
}

#[test]
fn cached_and_direct_ablation_agree() {
    let w = windows(8);
    let fcfg = FeatureConfig::default();
    let spec = AblationSpec {
        combinatorial_depth: 2,
        ..AblationSpec::default()
    };
    let direct = run_ablation_audit(&w, &spec, &fcfg, 200.0).unwrap();
    let m = build_class_matrices(&w, &fcfg, 200.0).unwrap();
    let cached = ablation_audit_from_matrices(&m, 400, &spec, &fcfg, 200.0).unwrap();
    assert_eq!(direct, cached);
    assert_eq!(direct.channel_count, 3);
    // three singletons and three pairs per class
    assert!(direct.classes.iter().all(|c| c.shifts.len() == 6));
    assert_eq!(direct.ranking.len(), 3);
}

#[test]
fn oracle_separates_the_distant_pair_and_is_reproducible() {
    let m = matrices(21);
    let cfg = OracleConfig {
        epochs: 80,
        hidden_units: 16,
        seed: 99,
        ..OracleConfig::default()
    };
    let first = run_oracle_audit(&m, &cfg).unwrap();
    assert_eq!(first, run_oracle_audit(&m, &cfg).unwrap());
    let pairs: Vec<_> = first
        .iter()
        .map(|r| (r.class_a.as_str(), r.class_b.as_str()))
        .collect();
    assert_eq!(pairs, [("a", "b"), ("a", "c"), ("b", "c")]);
    let ac = &first[1];
    assert!(ac.mcc > 0.5, "a vs c mcc {}", ac.mcc);
}
