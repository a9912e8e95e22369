//! `sensaudit` command-line front end.
//!
//! Each audit subcommand resolves its configuration, checks that it will
//! not clobber existing outputs, computes every requested stage, and only
//! then writes its artifacts in one pass.

pub mod args;
pub mod config;
pub mod error;
pub mod pipeline;
pub mod report;

use std::fs;
use std::path::Path;

use sensaudit_core::ingest::{write_dataset, MANIFEST_FILE};

use crate::args::{AuditArgs, CheckArgs, Cli, Command, SynthArgs};
use crate::config::{read_synthetic_spec, synthetic_seed, ResolvedConfig};
use crate::error::{CliError, Stage, StageExt};
use crate::report::{Artifact, AuditSummary, ToolInfo};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Stages {
    Complexity,
    Ablate,
    Oracle,
    Full,
}

pub fn run(cli: &Cli) -> Result<(), CliError> {
    let jobs = match &cli.command {
        Command::Complexity(a) | Command::Ablate(a) | Command::Oracle(a) | Command::Full(a) => {
            a.jobs
        }
        Command::Synth(a) => a.jobs,
        Command::IngestCheck(a) => a.jobs,
    };
    with_jobs(jobs, || match &cli.command {
        Command::Complexity(a) => audit(a, Stages::Complexity),
        Command::Ablate(a) => audit(a, Stages::Ablate),
        Command::Oracle(a) => audit(a, Stages::Oracle),
        Command::Full(a) => audit(a, Stages::Full),
        Command::Synth(a) => synth(a),
        Command::IngestCheck(a) => ingest_check(a),
    })
}

fn with_jobs<T: Send>(
    jobs: Option<usize>,
    f: impl FnOnce() -> Result<T, CliError> + Send,
) -> Result<T, CliError> {
    match jobs {
        None => f(),
        Some(0) => Err(CliError::Usage("--jobs must be at least 1".into())),
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build()
            .map_err(|e| CliError::Usage(format!("cannot start {n} worker threads: {e}")))?
            .install(f),
    }
}

/// Names of the artifacts a stage selection writes, given the audited classes.
fn planned_artifacts(stages: Stages, classes: &[String]) -> Vec<String> {
    let mut names = vec!["run_config.json".to_string()];
    let complexity = [
        "complexity.csv",
        "complexity.json",
        "complexity_plotdata.csv",
    ];
    let ablation = [
        "ablation.json",
        "ablation.csv",
        "ranking.csv",
        "neighbour_compensation.csv",
        "ablation_report.md",
    ];
    let oracle = ["oracle.csv", "validation.csv"];
    let with =
        |names: &mut Vec<String>, list: &[&str]| names.extend(list.iter().map(|s| s.to_string()));
    if matches!(stages, Stages::Complexity | Stages::Full) {
        with(&mut names, &complexity);
    }
    if matches!(stages, Stages::Ablate | Stages::Full) {
        with(&mut names, &ablation);
        names.extend(classes.iter().map(|c| report::ablation_plot_name(c)));
    }
    if matches!(stages, Stages::Oracle | Stages::Full) {
        with(&mut names, &oracle);
    }
    if stages == Stages::Full {
        with(
            &mut names,
            &["features.csv", "columns.json", "audit_summary.json"],
        );
    }
    names
}

fn refuse_existing(out: &Path, names: &[String], overwrite: bool) -> Result<(), CliError> {
    if overwrite {
        return Ok(());
    }
    for name in names {
        let path = out.join(name);
        if path.exists() {
            return Err(CliError::OutputExists { path });
        }
    }
    Ok(())
}

fn write_all(out: &Path, artifacts: &[Artifact]) -> Result<(), CliError> {
    fs::create_dir_all(out).map_err(|source| CliError::Write {
        path: out.to_path_buf(),
        source,
    })?;
    for a in artifacts {
        let path = out.join(&a.name);
        fs::write(&path, &a.bytes).map_err(|source| CliError::Write { path, source })?;
    }
    Ok(())
}

fn audit(args: &AuditArgs, stages: Stages) -> Result<(), CliError> {
    let (cfg, spec) = ResolvedConfig::for_audit(args)?;
    let data = pipeline::ingest(&cfg, spec.as_ref())?;
    let mut audited: Vec<String> = data
        .set
        .class_names
        .iter()
        .filter(|c| !data.excluded_classes.contains(c))
        .cloned()
        .collect();
    if !cfg.ablation.classes.is_empty() {
        audited = cfg.ablation.classes.clone();
    }
    refuse_existing(
        &args.out,
        &planned_artifacts(stages, &audited),
        args.overwrite,
    )?;

    let prepared = pipeline::prepare(&cfg, data)?;
    let columns: Vec<String> = prepared
        .matrices
        .values()
        .next()
        .map(|m| m.column_index.iter().map(|c| c.name()).collect())
        .unwrap_or_default();

    let needs_complexity = stages != Stages::Ablate;
    let complexity = needs_complexity
        .then(|| pipeline::complexity(&prepared))
        .transpose()?;
    let ablation = matches!(stages, Stages::Ablate | Stages::Full)
        .then(|| pipeline::ablation(&cfg, &prepared))
        .transpose()?;
    let oracle = match (&complexity, stages) {
        (Some(c), Stages::Oracle | Stages::Full) => Some(pipeline::oracle(&cfg, &prepared, c)?),
        _ => None,
    };

    let mut artifacts = vec![report::run_config(&cfg)];
    if let (Some(c), Stages::Complexity | Stages::Full) = (&complexity, stages) {
        artifacts.extend(report::complexity(&cfg, &columns, c));
    }
    let advice = ablation.as_ref().map(report::advice);
    if let (Some(r), Some(adv)) = (&ablation, &advice) {
        artifacts.extend(report::ablation(&cfg, r, adv));
    }
    if let Some(o) = &oracle {
        artifacts.extend(report::oracle(o));
    }
    if stages == Stages::Full {
        artifacts.extend(report::features(&prepared.matrices));
        let summary = AuditSummary {
            schema_version: report::SCHEMA_VERSION.into(),
            tool: ToolInfo {
                name: env!("CARGO_PKG_NAME").into(),
                version: env!("CARGO_PKG_VERSION").into(),
            },
            config: cfg.clone(),
            data: prepared.summary.clone(),
            columns,
            complexity: complexity.expect("full run computes complexity"),
            ablation: report::AblationSection {
                report: ablation.expect("full run computes ablation"),
                advice: advice.expect("full run computes advice"),
            },
            oracle: oracle.expect("full run computes the oracle"),
        };
        artifacts.push(report::summary(&summary));
    }
    write_all(&args.out, &artifacts)?;
    eprintln!(
        "wrote {} artifacts to {}",
        artifacts.len(),
        args.out.display()
    );
    Ok(())
}

fn synth(args: &SynthArgs) -> Result<(), CliError> {
    let spec = read_synthetic_spec(&args.synthetic)?;
    let manifest = args.out.join(MANIFEST_FILE);
    if !args.overwrite && manifest.exists() {
        return Err(CliError::OutputExists { path: manifest });
    }
    let seed = synthetic_seed(args.seed.unwrap_or(0), &spec);
    let set = sensaudit_core::ingest::generate_synthetic(&spec, seed).stage(Stage::Ingest)?;
    write_dataset(&set, &args.out).stage(Stage::Ingest)?;
    eprintln!(
        "wrote {} recordings ({} classes, {} channels, seed {seed}) to {}",
        set.recordings.len(),
        set.class_names.len(),
        set.channel_count,
        args.out.display()
    );
    Ok(())
}

fn ingest_check(args: &CheckArgs) -> Result<(), CliError> {
    let (cfg, spec) = ResolvedConfig::for_check(args)?;
    let data = pipeline::ingest(&cfg, spec.as_ref())?;
    let set = &data.set;
    let windows =
        sensaudit_core::ingest::segment(set, &cfg.segmentation).stage(Stage::Segmentation)?;
    let mut per_class = std::collections::BTreeMap::<&str, usize>::new();
    for w in &windows {
        *per_class.entry(&w.class_label).or_default() += 1;
    }
    println!(
        "ok: {} recordings, {} channels at {} Hz",
        set.recordings.len(),
        set.channel_count,
        set.sampling_rate_hz
    );
    if !data.excluded_classes.is_empty() {
        println!("excluded classes: {}", data.excluded_classes.join(", "));
    }
    for class in &set.class_names {
        println!(
            "{class}: {} windows",
            per_class.get(class.as_str()).copied().unwrap_or(0)
        );
    }
    Ok(())
}
