//! `deepselect`: select, score and compare test input subsets from the command line.

mod commands;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use deepselect_core::{Profile, Variant};

#[derive(Debug, Parser)]
#[command(name = "deepselect", version, about = "Black-box test input selection for classifiers")]
struct Cli {
    /// More log output (-v info, -vv per-generation debug lines).
    #[arg(short, long, action = clap::ArgAction::Count, global = true)]
    verbose: u8,

    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Select a subset of inputs and write it as CSV plus a JSON sidecar.
    Select(SelectArgs),
    /// Score a selection against the manifest's fault clusters.
    Evaluate(EvaluateArgs),
    /// Run several methods repeatedly and summarise their fault detection.
    Compare(CompareArgs),
    /// Estimate fault clusters of mispredicted inputs with DBSCAN.
    ClusterFaults(ClusterArgs),
    /// Load and cross-check everything a manifest refers to.
    Validate(ValidateArgs),
    /// Write a planted-fault benchmark with a manifest.
    GenSynthetic(SyntheticArgs),
}

/// Overrides for the manifest's run settings.
#[derive(Debug, Clone, Args)]
struct RunOptions {
    /// Subset size; defaults to the manifest's budget.
    #[arg(long)]
    budget: Option<usize>,
    /// Random seed; defaults to the manifest's seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Search preset: `paper` (700 x 300) or `desk` (100 x 50).
    #[arg(long)]
    profile: Option<Profile>,
    /// Operator variant for the evolutionary search.
    #[arg(long)]
    variant: Option<Variant>,
}

#[derive(Debug, Args)]
struct SelectArgs {
    manifest: PathBuf,
    /// `deepgd`, `deepgd:<variant>`, `random`, `gini` or `maxp`.
    #[arg(long)]
    method: Option<String>,
    #[command(flatten)]
    run: RunOptions,
    /// Selection CSV; the sidecar goes next to it with a `.json` extension.
    #[arg(long, default_value = "selection.csv")]
    out: PathBuf,
}

#[derive(Debug, Args)]
struct EvaluateArgs {
    /// Selection CSV (`id` column) or JSON sidecar.
    selection: PathBuf,
    manifest: PathBuf,
    /// Report path; stdout when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct CompareArgs {
    manifest: PathBuf,
    /// Comma-separated methods.
    #[arg(long, value_delimiter = ',', default_value = "deepgd,random,gini,maxp")]
    methods: Vec<String>,
    /// Runs per method; run `i` uses seed `seed + i`.
    #[arg(long, default_value_t = 10)]
    repeats: usize,
    #[command(flatten)]
    run: RunOptions,
    /// Directory for `runs.csv` and `stats.json`.
    #[arg(long, default_value = "compare")]
    out_dir: PathBuf,
}

#[derive(Debug, Args)]
struct ClusterArgs {
    manifest: PathBuf,
    /// Neighbourhood radius in normalized feature space.
    #[arg(long)]
    eps: f64,
    /// Points (itself included) needed within `eps` to be a core point.
    #[arg(long, default_value_t = 5)]
    min_pts: usize,
    /// Weight of the actual and predicted class columns appended to the features.
    #[arg(long, default_value_t = 1.0)]
    class_weight: f64,
    #[arg(long, default_value = "clusters.csv")]
    out: PathBuf,
}

#[derive(Debug, Args)]
struct ValidateArgs {
    manifest: PathBuf,
}

#[derive(Debug, Args)]
struct SyntheticArgs {
    #[arg(long, default_value_t = 2000)]
    n: usize,
    #[arg(long, default_value_t = 10)]
    m: usize,
    #[arg(long, default_value_t = 32)]
    d: usize,
    #[arg(long, default_value_t = 20)]
    faults: usize,
    #[arg(long, default_value_t = 0.15)]
    mispredict_rate: f64,
    /// Target Pearson correlation between Gini score and misprediction.
    #[arg(long, default_value_t = 0.5)]
    correlation: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Budget written into the manifest.
    #[arg(long, default_value_t = 100)]
    budget: usize,
    #[arg(long)]
    out: PathBuf,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let level = match cli.verbose {
        0 => "warn",
        1 => "info",
        _ => "debug",
    };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level)).init();

    match commands::with_thread_cap(|| commands::dispatch(cli.command)) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(commands::exit_code(&e))
        }
    }
}
