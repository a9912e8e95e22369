use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};
use sensaudit_core::ablation::ShiftMetric;

#[derive(Debug, Parser)]
#[command(
    name = "sensaudit",
    version,
    about = "Model-free fault-tolerance audit for multi-sensor recordings"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Pairwise class separability (one-vs-one and one-vs-rest).
    Complexity(AuditArgs),
    /// Sensor ablation: per-class criticality, ranking and neighbour compensation.
    Ablate(AuditArgs),
    /// Pairwise classifier oracle scored by MCC, joined with the separability table.
    Oracle(AuditArgs),
    /// All three stages over one shared feature pass, plus a summary report.
    Full(AuditArgs),
    /// Write a synthetic dataset to disk in the on-disk dataset layout.
    Synth(SynthArgs),
    /// Validate a dataset and report its window counts without computing features.
    IngestCheck(CheckArgs),
}

#[derive(Debug, Clone, Args)]
#[group(required = true, multiple = false)]
pub struct SourceArgs {
    /// Dataset root containing `dataset.json`.
    #[arg(long, value_name = "DIR")]
    pub data: Option<PathBuf>,
    /// Synthetic dataset specification (JSON).
    #[arg(long, value_name = "SPEC")]
    pub synthetic: Option<PathBuf>,
}

#[derive(Debug, Clone, Args)]
pub struct AuditArgs {
    #[command(flatten)]
    pub source: SourceArgs,
    /// Audit configuration (JSON with optional `segmentation`, `features`,
    /// `ablation`, `oracle`, `seed` and `oracle_repeats` sections).
    #[arg(long, value_name = "FILE")]
    pub config: Option<PathBuf>,
    /// Output directory; created if absent.
    #[arg(long, value_name = "DIR")]
    pub out: PathBuf,
    /// Global seed; overrides the config file.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Ablation shift metric; overrides the config file.
    #[arg(long, value_parser = clap::value_parser!(ShiftMetric))]
    pub metric: Option<ShiftMetric>,
    /// Largest ablated subset size; overrides the config file.
    #[arg(long)]
    pub depth: Option<usize>,
    /// Number of oracle repetitions with independent seeds; MCC is averaged.
    #[arg(long)]
    pub repeats: Option<usize>,
    /// Keep the rest/control class in the audit.
    #[arg(long)]
    pub include_rest: bool,
    /// Replace existing artifacts in the output directory.
    #[arg(long)]
    pub overwrite: bool,
    /// Worker threads; results do not depend on this value.
    #[arg(long)]
    pub jobs: Option<usize>,
}

#[derive(Debug, Clone, Args)]
pub struct SynthArgs {
    /// Synthetic dataset specification (JSON).
    #[arg(long, value_name = "SPEC")]
    pub synthetic: PathBuf,
    /// Dataset root to write; created if absent.
    #[arg(long, value_name = "DIR")]
    pub out: PathBuf,
    /// Generator seed, used when the specification carries none.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Replace an existing dataset in the output directory.
    #[arg(long)]
    pub overwrite: bool,
    /// Worker threads; results do not depend on this value.
    #[arg(long)]
    pub jobs: Option<usize>,
}

#[derive(Debug, Clone, Args)]
pub struct CheckArgs {
    #[command(flatten)]
    pub source: SourceArgs,
    /// Audit configuration; only `segmentation` and `seed` are used here.
    #[arg(long, value_name = "FILE")]
    pub config: Option<PathBuf>,
    /// Global seed for synthetic generation; overrides the config file.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Keep the rest/control class in the report.
    #[arg(long)]
    pub include_rest: bool,
    /// Worker threads; results do not depend on this value.
    #[arg(long)]
    pub jobs: Option<usize>,
}
