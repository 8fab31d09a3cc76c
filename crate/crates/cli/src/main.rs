//! `phishguard` command-line entry point.

mod commands;
mod manifest;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

/// Phishing URL detection: ingestion, training, explanation, serving and
/// robustness evaluation.
#[derive(Debug, Parser)]
#[command(name = "phishguard", version)]
pub struct Cli {
    /// Seed for every randomized step.
    #[arg(long, global = true, default_value_t = 0)]
    pub seed: u64,

    /// Where to write the run manifest; defaults to `<output>.manifest.json`,
    /// or stderr for commands without an output file.
    #[arg(long, global = true)]
    pub manifest: Option<PathBuf>,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Load a labelled CSV/ARFF table, deduplicate and align it to the
    /// canonical features.
    Ingest(IngestArgs),
    /// Generate synthetic phishing-style URLs.
    Generate(GenerateArgs),
    /// Cross-validate and train a model.
    Train(TrainArgs),
    /// Score a model on a dataset.
    Evaluate(EvaluateArgs),
    /// Rank feature attributions for one instance or the whole dataset.
    Explain(ExplainArgs),
    /// Run the analysis tool server.
    Serve(ServeArgs),
    /// Run the context-contamination harness.
    Robustness(RobustnessArgs),
}

#[derive(Debug, Args)]
pub struct IngestArgs {
    pub input: PathBuf,
    #[arg(long, default_value = "UCI")]
    pub provenance: String,
    #[arg(long)]
    pub out: PathBuf,
    /// Keep the file's own columns instead of the 23 canonical features.
    #[arg(long)]
    pub keep_columns: bool,
}

#[derive(Debug, Args)]
pub struct GenerateArgs {
    #[arg(long, default_value_t = 1000)]
    pub count: usize,
    /// File of legitimate seed URLs, one per line.
    #[arg(long)]
    pub legit: Option<PathBuf>,
    #[arg(long)]
    pub out: PathBuf,
    /// Also write the per-feature trigger report here.
    #[arg(long)]
    pub report: Option<PathBuf>,
    /// Also write canonical feature vectors (label 1) as CSV.
    #[arg(long)]
    pub features_out: Option<PathBuf>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum ModelArg {
    Logistic,
    Ridge,
    Sgd,
    Elastic,
    Svm,
    Tree,
    Forest,
    Extra,
    Gbt,
    Mlp,
}

#[derive(Debug, Args)]
pub struct TrainArgs {
    #[arg(long)]
    pub data: PathBuf,
    #[arg(long, value_enum, default_value = "logistic")]
    pub model: ModelArg,
    #[arg(long, default_value_t = 5)]
    pub folds: usize,
    #[arg(long)]
    pub out: PathBuf,
    /// Skip cross-validation and only fit the final model.
    #[arg(long)]
    pub no_cv: bool,
}

#[derive(Debug, Args)]
pub struct EvaluateArgs {
    #[arg(long)]
    pub model: PathBuf,
    #[arg(long)]
    pub data: PathBuf,
    /// Write ROC points (fpr,tpr,threshold) as CSV.
    #[arg(long)]
    pub roc_csv: Option<PathBuf>,
    /// Write precision-recall points (threshold,precision,recall) as CSV.
    #[arg(long)]
    pub pr_csv: Option<PathBuf>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum ExplainMethod {
    Ig,
    Shap,
    Lime,
}

#[derive(Debug, Args)]
pub struct ExplainArgs {
    #[arg(long)]
    pub model: PathBuf,
    /// Dataset supplying the background distribution and indexed rows.
    #[arg(long)]
    pub data: PathBuf,
    #[arg(long, value_enum, default_value = "shap")]
    pub method: ExplainMethod,
    #[arg(long, conflicts_with = "index")]
    pub url: Option<String>,
    #[arg(long)]
    pub index: Option<usize>,
    /// Bar width in characters.
    #[arg(long, default_value_t = 40)]
    pub width: usize,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum TransportArg {
    Stdio,
    Tcp,
}

#[derive(Debug, Args)]
pub struct FusionArgs {
    /// Fusion weight α on information gain; omit to score unweighted inputs.
    #[arg(long)]
    pub alpha: Option<f64>,
    #[arg(long, default_value_t = 5)]
    pub pcs_k: usize,
    #[arg(long, default_value_t = 0.5)]
    pub pcs_threshold: f64,
}

#[derive(Debug, Args)]
pub struct ServeArgs {
    #[arg(long)]
    pub model: PathBuf,
    /// Reference data as `PATH` or `PROVENANCE=PATH`; repeatable.
    #[arg(long, required = true)]
    pub reference: Vec<String>,
    /// Provenance for reference paths given without a prefix.
    #[arg(long, default_value = "UCI")]
    pub provenance: String,
    #[command(flatten)]
    pub fusion: FusionArgs,
    #[arg(long, value_enum, default_value = "stdio")]
    pub transport: TransportArg,
    #[arg(long, default_value_t = 7878)]
    pub port: u16,
    /// Shorthand for `--transport tcp --port PORT`.
    #[arg(long, value_name = "PORT")]
    pub tcp: Option<u16>,
    /// Mirror the audit log to this JSON-lines file.
    #[arg(long)]
    pub audit_log: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct RobustnessArgs {
    #[arg(long)]
    pub model: PathBuf,
    /// Data as `PATH` or `PROVENANCE=PATH`; repeatable, one report row set
    /// per dataset.
    #[arg(long, required = true)]
    pub data: Vec<String>,
    #[arg(long, default_value = "UCI")]
    pub provenance: String,
    #[arg(long, value_delimiter = ',', default_value = "isolation,validation,hybrid")]
    pub strategies: Vec<String>,
    #[arg(long, default_value_t = 0.3)]
    pub rate: f64,
    #[arg(long, default_value_t = 1.0)]
    pub delta: f64,
    #[arg(long, default_value_t = 200)]
    pub contexts: usize,
    #[command(flatten)]
    pub fusion: FusionArgs,
    /// Print one JSON object per row instead of the table.
    #[arg(long)]
    pub json: bool,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match std::panic::catch_unwind(|| commands::run(cli)) {
        Ok(Ok(())) => ExitCode::SUCCESS,
        Ok(Err(e)) => {
            eprintln!("error: {e:#}");
            ExitCode::from(commands::exit_code(&e))
        }
        Err(_) => ExitCode::from(1),
    }
}
