use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};

mod commands;
mod data;

#[derive(Parser)]
#[command(
    name = "topolayer",
    version,
    about = "Persistence diagrams and learnable topological input layers"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Compute persistence diagrams and write one JSON file per diagram.
    Diagrams(DiagramsArgs),
    /// Train a classifier on a dataset manifest.
    Train(TrainArgs),
    /// Evaluate a checkpoint on a dataset manifest.
    Eval(EvalArgs),
    /// Cross-validated accuracy of the sorted-persistence linear baseline.
    Baseline(BaselineArgs),
    /// Distance between two diagram files.
    Dist(DistArgs),
    /// Run a randomized self-verification suite.
    Check(CheckArgs),
    /// Generate the synthetic tree / tree-with-chords graph dataset.
    Synth(SynthArgs),
}

#[derive(Clone, Copy, ValueEnum)]
enum InputKind {
    Graph,
    Image,
}

#[derive(Args)]
struct DiagramsArgs {
    kind: InputKind,
    /// Edge-list or image files.
    #[arg(required = true)]
    inputs: Vec<PathBuf>,
    /// Number of evenly spaced directions (images only).
    #[arg(long, default_value_t = 32)]
    directions: usize,
    #[arg(short, long)]
    out: PathBuf,
}

#[derive(Args)]
struct TrainArgs {
    manifest: PathBuf,
    /// Model configuration JSON; a built-in default is used when omitted.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Overrides the configuration's seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Checkpoint path; with several runs, `.runK` is inserted before the extension.
    #[arg(short, long)]
    out: PathBuf,
    /// Per-epoch metrics CSV (epoch, lr, train_loss, test_acc).
    #[arg(long)]
    metrics: Option<PathBuf>,
    /// Independent runs with seeds seed, seed + 1, ...; the mean test accuracy is reported.
    #[arg(long, default_value_t = 1)]
    runs: usize,
}

#[derive(Clone, Copy, ValueEnum)]
enum SplitChoice {
    All,
    Train,
    Test,
}

#[derive(Args)]
struct EvalArgs {
    manifest: PathBuf,
    #[arg(long)]
    checkpoint: PathBuf,
    /// Which part of the manifest to score; train/test use the checkpoint's split.
    #[arg(long, value_enum, default_value_t = SplitChoice::Test)]
    split: SplitChoice,
}

#[derive(Args)]
struct BaselineArgs {
    /// Directory of `<sample>_*.json` diagram files.
    diagrams_dir: PathBuf,
    /// CSV with columns `sample,label`.
    labels: PathBuf,
    /// Vector lengths to evaluate; repeat the flag for a sweep.
    #[arg(long = "n", default_values_t = [5, 10, 20, 40, 80, 160])]
    n: Vec<usize>,
    /// Essential birth b contributes persistence `cap - b`; essentials are ignored otherwise.
    #[arg(long)]
    essential_cap: Option<f64>,
    #[arg(long, default_value_t = 10)]
    folds: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Report CSV (n, accuracy); printed to stdout when omitted.
    #[arg(short, long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct DistArgs {
    a: PathBuf,
    b: PathBuf,
    /// Wasserstein power, or `inf` for the bottleneck distance.
    #[arg(long, default_value = "1")]
    p: String,
    /// Ground norm: a positive integer or `inf`.
    #[arg(long, default_value = "inf")]
    q: String,
}

#[derive(Clone, Copy, ValueEnum)]
enum Suite {
    Oracle,
    Gradients,
    Stability,
}

#[derive(Args)]
struct CheckArgs {
    suite: Suite,
    #[arg(long, default_value_t = 100)]
    trials: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Ground norm for the stability suite; both 2 and inf when omitted.
    #[arg(long)]
    q: Option<String>,
    /// Where to write failing instances as JSON (stdout when omitted).
    #[arg(long)]
    failures: Option<PathBuf>,
}

#[derive(Args)]
struct SynthArgs {
    #[arg(long, default_value_t = 200)]
    count: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(short, long)]
    out: PathBuf,
}

fn configure_threads() -> Result<()> {
    if let Ok(value) = std::env::var("TOPOLAYER_THREADS") {
        let n: usize = value
            .parse()
            .ok()
            .filter(|&n| n > 0)
            .with_context(|| format!("TOPOLAYER_THREADS must be a positive integer, got `{value}`"))
            .map_err(|e| anyhow::Error::new(data::InputError(format!("{e:#}"))))?;
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .context("configuring worker threads")?;
    }
    Ok(())
}

fn run(cli: Cli) -> Result<ExitCode> {
    configure_threads()?;
    match cli.command {
        Command::Diagrams(a) => commands::diagrams(a),
        Command::Train(a) => commands::train(a),
        Command::Eval(a) => commands::eval(a),
        Command::Baseline(a) => commands::baseline(a),
        Command::Dist(a) => commands::dist(a),
        Command::Check(a) => commands::check(a),
        Command::Synth(a) => commands::synth(a),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(code) => code,
        Err(err) => {
            eprintln!("error: {err:#}");
            if data::is_input_error(&err) {
                ExitCode::from(2)
            } else {
                ExitCode::FAILURE
            }
        }
    }
}
