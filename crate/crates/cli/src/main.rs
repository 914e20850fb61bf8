//! `salefold`: price-band statistics, SVM training and discount significance
//! reports from the command line.

mod commands;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use salefold_core::svm::{ClassWeighting, KernelKind};

#[derive(Debug, Parser)]
#[command(
    name = "salefold",
    version,
    about = "Quantify the significance of sale-season discounts"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Extract catalog rows from stored listing snapshots.
    Extract(ExtractArgs),
    /// Print per-band count / mean / standard deviation of a catalog.
    Stats(StatsArgs),
    /// Train the one-vs-rest SVM on a non-sale catalog.
    Train(TrainArgs),
    /// Classify the discounts of a sale catalog.
    Analyze(AnalyzeArgs),
    /// Generate seeded synthetic non-sale and sale catalogs.
    Synth(SynthArgs),
}

#[derive(Debug, Args)]
pub struct BandArgs {
    /// Band spec JSON; defaults to LOW / BUDGET / MID RANGE / PREMIUM.
    #[arg(long)]
    pub bands: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct ExtractArgs {
    /// Extraction rule file (JSON array).
    #[arg(long)]
    pub rules: PathBuf,
    /// Directory of HTML snapshots.
    #[arg(long)]
    pub snapshots: PathBuf,
    /// Output catalog CSV; stdout when omitted.
    #[arg(long)]
    pub output: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct StatsArgs {
    #[arg(long)]
    pub catalog: PathBuf,
    #[command(flatten)]
    pub bands: BandArgs,
    /// Also write the stats as JSON (usable as `analyze --stats`).
    #[arg(long)]
    pub output: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct TrainArgs {
    /// Non-sale catalog CSV.
    #[arg(long)]
    pub catalog: PathBuf,
    #[command(flatten)]
    pub bands: BandArgs,
    #[arg(long, default_value = "rbf")]
    pub kernel: KernelKind,
    #[arg(long, default_value_t = 1.0)]
    pub c: f64,
    /// Kernel gamma; defaults to 1 / (features · mean scaled variance).
    #[arg(long)]
    pub gamma: Option<f64>,
    #[arg(long, default_value_t = 3)]
    pub degree: u32,
    #[arg(long, default_value_t = 0.0)]
    pub coef0: f64,
    #[arg(long, default_value_t = 1e-3)]
    pub tol: f64,
    /// Cross-validation folds for grid search on the training split.
    #[arg(long)]
    pub cv: Option<usize>,
    /// Grid file (JSON array of {kernel, c}); a built-in grid is used with
    /// `--cv` when omitted.
    #[arg(long)]
    pub grid: Option<PathBuf>,
    #[arg(long, default_value_t = 0.8)]
    pub train_fraction: f64,
    #[arg(long, default_value_t = 42)]
    pub seed: u64,
    #[arg(long, value_enum, default_value = "none")]
    pub class_weight: WeightArg,
    /// Where to write the model file.
    #[arg(long)]
    pub model: PathBuf,
}

#[derive(Debug, Clone, Copy, clap::ValueEnum)]
pub enum WeightArg {
    None,
    Balanced,
}

impl From<WeightArg> for ClassWeighting {
    fn from(w: WeightArg) -> Self {
        match w {
            WeightArg::None => ClassWeighting::None,
            WeightArg::Balanced => ClassWeighting::Balanced,
        }
    }
}

#[derive(Debug, Args)]
pub struct AnalyzeArgs {
    #[arg(long)]
    pub model: PathBuf,
    /// Sale catalog CSV with `sale_price` filled in.
    #[arg(long)]
    pub sale: PathBuf,
    /// Non-sale catalog used for band statistics.
    #[arg(long, conflicts_with = "stats", required_unless_present = "stats")]
    pub catalog: Option<PathBuf>,
    /// Saved band statistics (from `stats --output`).
    #[arg(long)]
    pub stats: Option<PathBuf>,
    #[command(flatten)]
    pub bands: BandArgs,
    /// Significance policy JSON.
    #[arg(long)]
    pub policy: Option<PathBuf>,
    /// Fold width multiplier; overrides the policy's k.
    #[arg(long)]
    pub k: Option<f64>,
    /// Report JSON; stdout when omitted.
    #[arg(long)]
    pub output: Option<PathBuf>,
    /// Also write a flat CSV of verdicts.
    #[arg(long)]
    pub verdicts_csv: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct SynthArgs {
    #[arg(long, default_value_t = 42)]
    pub seed: u64,
    /// Records per band, comma-separated.
    #[arg(long, value_delimiter = ',', default_values_t = [426usize, 204, 76, 27])]
    pub counts: Vec<usize>,
    #[command(flatten)]
    pub bands: BandArgs,
    /// Output directory for nonsale.csv and sale.csv.
    #[arg(long)]
    pub output: PathBuf,
    /// Also write raw_crawl.csv: the non-sale catalog plus incomplete rows
    /// and colour duplicates.
    #[arg(long)]
    pub raw: bool,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Extract(a) => commands::extract(a),
        Command::Stats(a) => commands::stats(a),
        Command::Train(a) => commands::train(a),
        Command::Analyze(a) => commands::analyze(a),
        Command::Synth(a) => commands::synth(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error [{}]: {}", e.stage, e.source);
            ExitCode::from(e.exit_code())
        }
    }
}
