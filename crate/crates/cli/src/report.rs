//! Artifact rendering. Every function here returns bytes; nothing touches
//! the filesystem. CSVs use `,`, `.` decimals and LF line endings; floats are
//! printed in shortest round-trip form.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use sensaudit_core::ablation::AblationReport;
use sensaudit_core::features::FeatureMatrix;
use sensaudit_core::oracle::OracleResult;
use sensaudit_core::separability::{PairEntry, PairwiseAudit};
use serde::{Deserialize, Serialize};

use crate::config::ResolvedConfig;
use crate::pipeline::{ComplexityResults, DataSummary, OracleResults, ValidationRow};

/// Bumped whenever a JSON artifact's structure changes.
pub const SCHEMA_VERSION: &str = "1.0.0";

pub struct Artifact {
    pub name: String,
    pub bytes: Vec<u8>,
}

fn csv_artifact(name: impl Into<String>, header: &[&str], rows: Vec<Vec<String>>) -> Artifact {
    let mut w = csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(Vec::new());
    w.write_record(header).expect("in-memory write");
    for row in rows {
        w.write_record(&row).expect("in-memory write");
    }
    Artifact {
        name: name.into(),
        bytes: w.into_inner().expect("in-memory flush"),
    }
}

fn json_artifact<T: Serialize>(name: impl Into<String>, value: &T) -> Artifact {
    let mut bytes = serde_json::to_vec_pretty(value).expect("artifact types serialize");
    bytes.push(b'\n');
    Artifact {
        name: name.into(),
        bytes,
    }
}

fn num(v: f64) -> String {
    format!("{v}")
}

/// File-name-safe rendering of a class label.
pub fn file_stem(label: &str) -> String {
    label
        .chars()
        .map(|c| {
            if c.is_ascii_alphanumeric() || c == '-' || c == '_' {
                c
            } else {
                '_'
            }
        })
        .collect()
}

pub fn ablation_plot_name(class: &str) -> String {
    format!("ablation_plot_{}.csv", file_stem(class))
}

#[derive(Serialize)]
struct RunConfigDoc<'a> {
    schema_version: &'a str,
    config: &'a ResolvedConfig,
}

pub fn run_config(cfg: &ResolvedConfig) -> Artifact {
    json_artifact(
        "run_config.json",
        &RunConfigDoc {
            schema_version: SCHEMA_VERSION,
            config: cfg,
        },
    )
}

// ---------------------------------------------------------------- complexity

fn column_name(columns: &[String], index: Option<usize>) -> String {
    index
        .and_then(|i| columns.get(i).cloned())
        .unwrap_or_default()
}

fn complexity_rows(audit: &PairwiseAudit, columns: &[String]) -> Vec<Vec<String>> {
    audit
        .entries
        .iter()
        .map(|e: &PairEntry| {
            vec![
                e.target.clone(),
                e.reference.clone(),
                num(e.score.f1),
                column_name(columns, Some(e.score.f1_argmax)),
                num(e.score.f2),
                num(e.score.f3),
                column_name(columns, e.score.f3_argmax),
                num(e.normalized_fdr),
            ]
        })
        .collect()
}

#[derive(Serialize)]
struct ComplexityDoc<'a> {
    schema_version: &'a str,
    config: &'a ResolvedConfig,
    columns: &'a [String],
    one_vs_one: &'a PairwiseAudit,
    one_vs_rest: &'a PairwiseAudit,
}

/// `complexity.csv` (one-vs-one rows, then one-vs-rest rows), the JSON
/// report, and the bar-chart table of normalized one-vs-one FDR.
pub fn complexity(
    cfg: &ResolvedConfig,
    columns: &[String],
    c: &ComplexityResults,
) -> Vec<Artifact> {
    let mut rows = complexity_rows(&c.one_vs_one, columns);
    rows.extend(complexity_rows(&c.one_vs_rest, columns));
    vec![
        csv_artifact(
            "complexity.csv",
            &[
                "target",
                "reference",
                "f1",
                "f1_argmax_column",
                "f2",
                "f3",
                "f3_argmax_column",
                "normalized_fdr",
            ],
            rows,
        ),
        json_artifact(
            "complexity.json",
            &ComplexityDoc {
                schema_version: SCHEMA_VERSION,
                config: cfg,
                columns,
                one_vs_one: &c.one_vs_one,
                one_vs_rest: &c.one_vs_rest,
            },
        ),
        csv_artifact(
            "complexity_plotdata.csv",
            &["pair", "normalized_fdr"],
            c.one_vs_one
                .entries
                .iter()
                .map(|e| {
                    vec![
                        format!("{} vs {}", e.target, e.reference),
                        num(e.normalized_fdr),
                    ]
                })
                .collect(),
        ),
    ]
}

// ------------------------------------------------------------------ ablation

/// A sensor that at least one class cannot do without.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CriticalSensor {
    pub sensor: usize,
    pub mean_criticality: f64,
    /// Classes for which this sensor is at or above the criticality threshold.
    pub critical_for: Vec<String>,
    /// The subset of `critical_for` where neither ring neighbour compensates.
    pub uncompensated_for: Vec<String>,
}

/// What to disable when a sensor fails.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DegradationPlan {
    pub failed_sensor: usize,
    pub disable_classes: Vec<String>,
    pub keep_classes: Vec<String>,
}

/// A sensor whose loss barely moves any class.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RemovalCandidate {
    pub sensor: usize,
    pub max_criticality: f64,
}

/// Design guidance derived from the ablation report, in three categories.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Advice {
    pub reinforce_critical_components: Vec<CriticalSensor>,
    pub implement_graceful_degradation: Vec<DegradationPlan>,
    pub optimise_for_efficiency: Vec<RemovalCandidate>,
}

pub fn advice(report: &AblationReport) -> Advice {
    let critical_classes = |sensor: usize| -> Vec<String> {
        report
            .classes
            .iter()
            .filter(|c| c.criticality[sensor] >= report.criticality_threshold)
            .map(|c| c.class.clone())
            .collect()
    };
    let mut reinforce = Vec::new();
    let mut degrade = Vec::new();
    for ranked in &report.ranking {
        let critical_for = critical_classes(ranked.sensor);
        if critical_for.is_empty() {
            continue;
        }
        let uncompensated_for = report
            .neighbour_compensation
            .iter()
            .filter(|n| {
                n.sensor == ranked.sensor
                    && n.verdict == sensaudit_core::ablation::Verdict::Uncompensated
            })
            .map(|n| n.class.clone())
            .collect();
        degrade.push(DegradationPlan {
            failed_sensor: ranked.sensor,
            keep_classes: report
                .classes
                .iter()
                .map(|c| c.class.clone())
                .filter(|c| !critical_for.contains(c))
                .collect(),
            disable_classes: critical_for.clone(),
        });
        reinforce.push(CriticalSensor {
            sensor: ranked.sensor,
            mean_criticality: ranked.mean_criticality,
            critical_for,
            uncompensated_for,
        });
    }
    let mut optimise = Vec::new();
    for ranked in report.ranking.iter().rev() {
        let max = report
            .classes
            .iter()
            .map(|c| c.criticality[ranked.sensor])
            .fold(0.0, f64::max);
        if max < report.redundancy_threshold {
            optimise.push(RemovalCandidate {
                sensor: ranked.sensor,
                max_criticality: max,
            });
        }
    }
    Advice {
        reinforce_critical_components: reinforce,
        implement_graceful_degradation: degrade,
        optimise_for_efficiency: optimise,
    }
}

fn sensor_label(sensor: usize) -> String {
    format!("sensor {sensor} (ch{})", sensor + 1)
}

fn join(items: &[String]) -> String {
    if items.is_empty() {
        "none".into()
    } else {
        items.join(", ")
    }
}

/// Human-readable rendering of the ranking and the advice.
pub fn ablation_markdown(report: &AblationReport, advice: &Advice) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "# Sensor ablation audit\n");
    let _ = writeln!(
        s,
        "Shift metric `{}`, subsets up to size {}, criticality threshold {}, redundancy threshold {}.\n",
        report.shift_metric.name(),
        report.combinatorial_depth,
        report.criticality_threshold,
        report.redundancy_threshold
    );
    let _ = writeln!(s, "## Global ranking\n");
    let _ = writeln!(s, "| rank | sensor | mean criticality |");
    let _ = writeln!(s, "|---:|---|---:|");
    for (i, r) in report.ranking.iter().enumerate() {
        let _ = writeln!(
            s,
            "| {} | {} | {:.4} |",
            i + 1,
            sensor_label(r.sensor),
            r.mean_criticality
        );
    }
    let _ = writeln!(s, "\n## Reinforce Critical Components\n");
    if advice.reinforce_critical_components.is_empty() {
        let _ = writeln!(s, "No sensor reaches the criticality threshold.");
    }
    for c in &advice.reinforce_critical_components {
        let _ = writeln!(
            s,
            "- {}: critical for {}; no neighbour compensation for {}.",
            sensor_label(c.sensor),
            join(&c.critical_for),
            join(&c.uncompensated_for)
        );
    }
    let _ = writeln!(s, "\n## Implement Graceful Degradation\n");
    if advice.implement_graceful_degradation.is_empty() {
        let _ = writeln!(s, "No single sensor failure disables a class.");
    }
    for d in &advice.implement_graceful_degradation {
        let _ = writeln!(
            s,
            "- If {} fails: disable {}; keep {}.",
            sensor_label(d.failed_sensor),
            join(&d.disable_classes),
            join(&d.keep_classes)
        );
    }
    let _ = writeln!(s, "\n## Optimise for Efficiency\n");
    if advice.optimise_for_efficiency.is_empty() {
        let _ = writeln!(s, "Every sensor matters to at least one class.");
    }
    for o in &advice.optimise_for_efficiency {
        let _ = writeln!(
            s,
            "- {}: at most {:.4} normalized criticality for any class; candidate for removal or a lower sampling budget.",
            sensor_label(o.sensor),
            o.max_criticality
        );
    }
    s
}

fn subset_label(subset: &[usize]) -> String {
    subset
        .iter()
        .map(|i| i.to_string())
        .collect::<Vec<_>>()
        .join("+")
}

#[derive(Serialize)]
struct AblationDoc<'a> {
    schema_version: &'a str,
    config: &'a ResolvedConfig,
    report: &'a AblationReport,
    advice: &'a Advice,
}

pub fn ablation(cfg: &ResolvedConfig, report: &AblationReport, advice: &Advice) -> Vec<Artifact> {
    let metric = report.shift_metric.name();
    let shifts = report
        .classes
        .iter()
        .flat_map(|c| {
            c.shifts.iter().map(move |s| {
                vec![
                    c.class.clone(),
                    subset_label(&s.subset),
                    metric.to_string(),
                    num(s.raw_shift),
                    s.normalized.map(num).unwrap_or_default(),
                ]
            })
        })
        .collect();
    let ranking = report
        .ranking
        .iter()
        .enumerate()
        .map(|(i, r)| {
            vec![
                (i + 1).to_string(),
                r.sensor.to_string(),
                num(r.mean_criticality),
            ]
        })
        .collect();
    let compensation = report
        .neighbour_compensation
        .iter()
        .map(|n| {
            vec![
                n.class.clone(),
                n.sensor.to_string(),
                num(n.criticality),
                n.left_neighbour.to_string(),
                num(n.left_criticality),
                n.right_neighbour.to_string(),
                num(n.right_criticality),
                n.verdict.name().to_string(),
            ]
        })
        .collect();
    let mut out = vec![
        json_artifact(
            "ablation.json",
            &AblationDoc {
                schema_version: SCHEMA_VERSION,
                config: cfg,
                report,
                advice,
            },
        ),
        csv_artifact(
            "ablation.csv",
            &["class", "subset", "shift_metric", "raw_shift", "normalized"],
            shifts,
        ),
        csv_artifact(
            "ranking.csv",
            &["rank", "sensor", "mean_criticality"],
            ranking,
        ),
        csv_artifact(
            "neighbour_compensation.csv",
            &[
                "class",
                "sensor",
                "criticality",
                "left_neighbour",
                "left_criticality",
                "right_neighbour",
                "right_criticality",
                "verdict",
            ],
            compensation,
        ),
        Artifact {
            name: "ablation_report.md".into(),
            bytes: ablation_markdown(report, advice).into_bytes(),
        },
    ];
    for c in &report.classes {
        out.push(csv_artifact(
            ablation_plot_name(&c.class),
            &["sensor", "normalized_criticality"],
            c.criticality
                .iter()
                .enumerate()
                .map(|(i, &v)| vec![i.to_string(), num(v)])
                .collect(),
        ));
    }
    out
}

// -------------------------------------------------------------------- oracle

fn oracle_rows(results: &[OracleResult]) -> Vec<Vec<String>> {
    results
        .iter()
        .map(|r| {
            vec![
                r.class_a.clone(),
                r.class_b.clone(),
                num(r.mcc),
                num(r.accuracy),
                r.confusion.tp.to_string(),
                r.confusion.tn.to_string(),
                r.confusion.fp.to_string(),
                r.confusion.fn_.to_string(),
                r.seed.to_string(),
            ]
        })
        .collect()
}

fn validation_rows(rows: &[ValidationRow]) -> Vec<Vec<String>> {
    rows.iter()
        .map(|v| {
            vec![
                v.class_a.clone(),
                v.class_b.clone(),
                num(v.raw_fdr),
                num(v.normalized_fdr),
                num(v.mcc),
            ]
        })
        .collect()
}

pub fn oracle(o: &OracleResults) -> Vec<Artifact> {
    vec![
        csv_artifact(
            "oracle.csv",
            &[
                "class_a", "class_b", "mcc", "accuracy", "tp", "tn", "fp", "fn", "seed",
            ],
            oracle_rows(&o.runs),
        ),
        csv_artifact(
            "validation.csv",
            &["class_a", "class_b", "raw_fdr", "normalized_fdr", "mcc"],
            validation_rows(&o.validation),
        ),
    ]
}

// ------------------------------------------------------------------ features

#[derive(Serialize)]
struct ColumnDoc<'a> {
    index: usize,
    name: String,
    channel: usize,
    feature: &'a str,
}

/// Feature matrices as one CSV (`class,trial,start,<columns>`), classes in
/// report order, plus the column map.
pub fn features(matrices: &BTreeMap<String, FeatureMatrix>) -> Vec<Artifact> {
    let Some(first) = matrices.values().next() else {
        return Vec::new();
    };
    let names: Vec<String> = first.column_index.iter().map(|c| c.name()).collect();
    let mut header = vec!["class", "trial", "start"];
    header.extend(names.iter().map(String::as_str));
    let mut rows = Vec::new();
    for m in matrices.values() {
        for (i, row) in m.values.rows().into_iter().enumerate() {
            let id = &m.row_provenance[i];
            let mut r = vec![
                m.class_label.clone(),
                id.trial.clone(),
                id.start.to_string(),
            ];
            r.extend(row.iter().map(|&v| num(v)));
            rows.push(r);
        }
    }
    let columns: Vec<ColumnDoc> = first
        .column_index
        .iter()
        .enumerate()
        .map(|(index, c)| ColumnDoc {
            index,
            name: c.name(),
            channel: c.channel,
            feature: c.feature.name(),
        })
        .collect();
    vec![
        csv_artifact("features.csv", &header, rows),
        json_artifact("columns.json", &columns),
    ]
}

// ------------------------------------------------------------------- summary

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ToolInfo {
    pub name: String,
    pub version: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AblationSection {
    pub report: AblationReport,
    pub advice: Advice,
}

/// `audit_summary.json`: everything a full run computed, with the
/// configuration needed to reproduce it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AuditSummary {
    pub schema_version: String,
    pub tool: ToolInfo,
    pub config: ResolvedConfig,
    pub data: DataSummary,
    pub columns: Vec<String>,
    pub complexity: ComplexityResults,
    pub ablation: AblationSection,
    pub oracle: OracleResults,
}

pub fn summary(s: &AuditSummary) -> Artifact {
    json_artifact("audit_summary.json", s)
}
