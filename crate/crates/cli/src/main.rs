//! `locbench`: batch front end for the indoor localization pipelines.

mod commands;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

#[derive(Debug, Parser)]
#[command(name = "locbench", version, about = "Indoor localization benchmarks: zone classification and coordinate regression")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Classify zones from per-zone BLE RSSI readings.
    ZoneRssi(ZoneArgs),
    /// Classify zones from wearable IMU samples.
    ZoneImu(ZoneImuArgs),
    /// Regress X/Y position from three beacon distances.
    Coords(PipelineArgs),
    /// Run every learner family on the beacon data over several seeds.
    Compare(CompareArgs),
    /// Check complex activity model files.
    ValidateActivities(ValidateArgs),
    /// Write a synthetic dataset.
    Synth(SynthArgs),
    /// RMSE-X, RMSE-Y and horizontal error from per-sample error files.
    Metrics(MetricsArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Json,
    Csv,
    Md,
}

#[derive(Debug, Clone, Args)]
pub struct LearnerArgs {
    /// Learner family (knn, random_forest, decision_tree, gbt, linear_regression, svr, ann, deep_learning) [default: per subcommand]
    #[arg(long)]
    pub model: Option<String>,
    /// Neighbours for k-NN [default: 5]
    #[arg(long)]
    pub k: Option<usize>,
    /// Trees for random forest and GBT [default: 100]
    #[arg(long)]
    pub trees: Option<usize>,
    /// Maximum tree depth [default: 10 for trees and forests, 5 for GBT]
    #[arg(long)]
    pub depth: Option<usize>,
    /// Learning rate for GBT and the networks [default: family specific]
    #[arg(long)]
    pub rate: Option<f64>,
    /// Hidden layer sizes, e.g. 50,50 [default: 10 for ann, 50,50 for deep_learning]
    #[arg(long)]
    pub layers: Option<String>,
    /// Training epochs for the networks [default: 300]
    #[arg(long)]
    pub epochs: Option<usize>,
    /// SVR penalty [default: 1]
    #[arg(long)]
    pub c: Option<f64>,
    /// SVR tube half-width [default: 0.1]
    #[arg(long)]
    pub epsilon: Option<f64>,
    /// RBF kernel width [default: 1/features]
    #[arg(long)]
    pub gamma: Option<f64>,
    /// SVR kernel (linear or rbf) [default: rbf]
    #[arg(long)]
    pub kernel: Option<String>,
    /// Seed for splitting and training
    #[arg(long, default_value_t = 42)]
    pub seed: u64,
}

#[derive(Debug, Clone, Args)]
pub struct OutputArgs {
    /// Directory for report files
    #[arg(long, env = "LOCBENCH_OUT_DIR", default_value = "locbench-out")]
    pub out_dir: PathBuf,
    /// Console rendering of the report
    #[arg(long, value_enum, default_value = "md")]
    pub format: Format,
}

#[derive(Debug, Clone, Args)]
pub struct ZoneArgs {
    /// Input CSV
    #[arg(long)]
    pub data: PathBuf,
    /// Fraction of rows used for training
    #[arg(long, default_value_t = 0.8)]
    pub train_ratio: f64,
    #[command(flatten)]
    pub learner: LearnerArgs,
    #[command(flatten)]
    pub output: OutputArgs,
}

#[derive(Debug, Clone, Args)]
pub struct ZoneImuArgs {
    /// Input CSV
    #[arg(long)]
    pub data: PathBuf,
    /// Fraction of rows used for training
    #[arg(long, default_value_t = 0.7)]
    pub train_ratio: f64,
    /// Trailing window for mean/std features [default: off, raw samples]
    #[arg(long)]
    pub window: Option<usize>,
    #[command(flatten)]
    pub learner: LearnerArgs,
    #[command(flatten)]
    pub output: OutputArgs,
}

#[derive(Debug, Clone, Args)]
pub struct PipelineArgs {
    /// Input CSV
    #[arg(long)]
    pub data: PathBuf,
    /// Fraction of rows used for training
    #[arg(long, default_value_t = 0.7)]
    pub train_ratio: f64,
    #[command(flatten)]
    pub learner: LearnerArgs,
    #[command(flatten)]
    pub output: OutputArgs,
}

#[derive(Debug, Clone, Args)]
pub struct CompareArgs {
    /// Input CSV
    #[arg(long)]
    pub data: PathBuf,
    /// Fraction of rows used for training
    #[arg(long, default_value_t = 0.7)]
    pub train_ratio: f64,
    /// Seeds as an inclusive range `1..10` or a list `1,4,9` [default: --seed]
    #[arg(long)]
    pub seeds: Option<String>,
    /// Families to compare, comma separated [default: all eight]
    #[arg(long)]
    pub models: Option<String>,
    #[command(flatten)]
    pub learner: LearnerArgs,
    #[command(flatten)]
    pub output: OutputArgs,
}

#[derive(Debug, Clone, Args)]
pub struct ValidateArgs {
    /// Activity model file
    pub path: PathBuf,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum SynthKind {
    Beacon,
    Rssi,
    Imu,
}

#[derive(Debug, Clone, Args)]
pub struct SynthArgs {
    /// Dataset shape
    #[arg(long, value_enum, default_value = "beacon")]
    pub kind: SynthKind,
    /// Number of rows
    #[arg(long, default_value_t = 250)]
    pub rows: usize,
    /// Gaussian noise sigma (m for beacon distances, g for IMU)
    #[arg(long, default_value_t = 0.05)]
    pub noise: f64,
    /// Probability that a non-labelled RSSI scanner picks up a weak reading
    #[arg(long, default_value_t = 0.1)]
    pub bleed: f64,
    /// Generator seed
    #[arg(long, default_value_t = 42)]
    pub seed: u64,
    /// Output file [default: <out-dir>/synthetic_<kind>.csv]
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Directory used when --out is not given
    #[arg(long, env = "LOCBENCH_OUT_DIR", default_value = "locbench-out")]
    pub out_dir: PathBuf,
}

#[derive(Debug, Clone, Args)]
pub struct MetricsArgs {
    /// X errors, one value per line
    #[arg(long)]
    pub errors_x: PathBuf,
    /// Y errors, one value per line
    #[arg(long)]
    pub errors_y: PathBuf,
    /// Console rendering
    #[arg(long, value_enum, default_value = "md")]
    pub format: Format,
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    match commands::run(cli.command) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
