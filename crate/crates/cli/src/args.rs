//! Command-line arguments.

use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};

#[derive(Debug, Parser)]
#[command(name = "smoothcert", version, about = "Certified l2 robustness via Gaussian randomized smoothing")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Write a synthetic labelled dataset as CSV.
    Generate(GenerateArgs),
    /// Train a base classifier with Gaussian data augmentation.
    Train(TrainArgs),
    /// Certify every example of a dataset, writing JSONL records.
    Certify(CertifyArgs),
    /// Run the smoothed classifier's prediction on every example.
    Predict(PredictArgs),
    /// Evaluate certified radii from probability bounds.
    Bounds(BoundsArgs),
    /// Attack the smoothed classifier around every example.
    Attack(AttackArgs),
    /// Build certified-accuracy tables from certification records.
    Report(ReportArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Generator {
    /// Two isotropic Gaussian classes centred at `+-mean` on the first axis.
    TwoGaussians,
    /// Four 2-D Gaussian clusters at `(+-spread, +-spread)`, labelled by the
    /// sign agreement of the coordinates.
    XorGrid,
}

#[derive(Debug, Args)]
pub struct GenerateArgs {
    #[arg(value_enum)]
    pub generator: Generator,
    /// Number of examples.
    #[arg(long, default_value_t = 200)]
    pub count: usize,
    /// Input dimension (two-gaussians only).
    #[arg(long, default_value_t = 2)]
    pub dim: usize,
    /// Class centre offset along the first axis (two-gaussians).
    #[arg(long, default_value_t = 2.0)]
    pub mean: f64,
    /// Cluster centre coordinate magnitude (xor-grid).
    #[arg(long, default_value_t = 2.0)]
    pub spread: f64,
    /// Within-class standard deviation.
    #[arg(long, default_value_t = 0.5)]
    pub std: f64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Output CSV path.
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ModelKind {
    Logistic,
    Mlp,
}

#[derive(Debug, Args)]
pub struct TrainArgs {
    /// Training CSV.
    #[arg(long)]
    pub data: PathBuf,
    /// Output model file.
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long, value_enum, default_value_t = ModelKind::Mlp)]
    pub model: ModelKind,
    /// Hidden width of the MLP.
    #[arg(long, default_value_t = 16)]
    pub width: usize,
    /// Standard deviation of the augmentation noise.
    #[arg(long, default_value_t = 0.25)]
    pub sigma_train: f64,
    #[arg(long, default_value_t = 40)]
    pub epochs: usize,
    #[arg(long, default_value_t = 0.1)]
    pub learning_rate: f64,
    #[arg(long, default_value_t = 16)]
    pub batch_size: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Also report the soft-objective / cross-entropy diagnostic with this
    /// many noise draws per example.
    #[arg(long)]
    pub diagnose: Option<u64>,
}

/// Smoothing and run settings shared by `certify` and `predict`. Unset
/// flags fall back to the config file, then to the built-in defaults.
#[derive(Debug, Clone, Default, Args)]
pub struct RunFlags {
    /// TOML file with any of: sigma, n0, n, alpha, seed, workers,
    /// batch_size, store_counts, record_timing.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Noise standard deviation.
    #[arg(long)]
    pub sigma: Option<f64>,
    /// Selection samples (certify only).
    #[arg(long)]
    pub n0: Option<u64>,
    /// Estimation samples.
    #[arg(long)]
    pub n: Option<u64>,
    /// Failure probability.
    #[arg(long)]
    pub alpha: Option<f64>,
    /// Run seed of the noise stream.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Sampling threads.
    #[arg(long)]
    pub workers: Option<usize>,
    /// Base-classifier evaluations per batch.
    #[arg(long)]
    pub batch_size: Option<u64>,
    /// Store the estimation counts in each record.
    #[arg(long)]
    pub store_counts: bool,
    /// Store per-example wall time (makes output non-reproducible).
    #[arg(long)]
    pub record_timing: bool,
}

#[derive(Debug, Args)]
pub struct CertifyArgs {
    /// Model file.
    #[arg(long)]
    pub model: PathBuf,
    /// Dataset CSV.
    #[arg(long)]
    pub data: PathBuf,
    /// Output JSONL (standard output when omitted).
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[command(flatten)]
    pub run: RunFlags,
}

#[derive(Debug, Args)]
pub struct PredictArgs {
    #[arg(long)]
    pub model: PathBuf,
    #[arg(long)]
    pub data: PathBuf,
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[command(flatten)]
    pub run: RunFlags,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum BoundChoice {
    Cohen,
    Lecuyer,
    Li,
    All,
}

#[derive(Debug, Args)]
pub struct BoundsArgs {
    /// Lower bound on the top-class probability.
    #[arg(long)]
    pub pa: Option<f64>,
    /// Upper bound on the runner-up probability (default `1 - pa`).
    #[arg(long)]
    pub pb: Option<f64>,
    #[arg(long, default_value_t = 1.0)]
    pub sigma: f64,
    #[arg(long, value_enum, default_value_t = BoundChoice::All)]
    pub kind: BoundChoice,
    /// Also print the largest radius certifiable with this many samples.
    #[arg(long)]
    pub samples: Option<u64>,
    /// Failure probability for `--samples`.
    #[arg(long, default_value_t = 0.001)]
    pub alpha: f64,
}

#[derive(Debug, Args)]
pub struct AttackArgs {
    #[arg(long)]
    pub model: PathBuf,
    #[arg(long)]
    pub data: PathBuf,
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// l2 budget.
    #[arg(long)]
    pub radius: f64,
    #[arg(long, default_value_t = 0.5)]
    pub sigma: f64,
    /// Noise draws per gradient estimate.
    #[arg(long, default_value_t = 100)]
    pub k: u64,
    #[arg(long, default_value_t = 20)]
    pub steps: usize,
    /// Step length (default `2.5 * radius / steps`).
    #[arg(long)]
    pub step_size: Option<f64>,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value_t = 1)]
    pub workers: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum TableFormat {
    Tsv,
    Json,
}

#[derive(Debug, Args)]
pub struct ReportArgs {
    /// Certification JSONL files; several files give one column pair each
    /// plus their maximum.
    #[arg(required = true)]
    pub records: Vec<PathBuf>,
    /// Comma-separated radii (ascending).
    #[arg(long, value_delimiter = ',', conflicts_with_all = ["max_radius", "step"])]
    pub radii: Option<Vec<f64>>,
    /// Radius grid `0, step, ..., max_radius`.
    #[arg(long, default_value_t = 2.0)]
    pub max_radius: f64,
    #[arg(long, default_value_t = 0.25)]
    pub step: f64,
    /// Failure probability of the Bernstein bound.
    #[arg(long, default_value_t = 0.001)]
    pub rho: f64,
    /// Recompute certificates as if `n` had been this value (needs records
    /// written with `--store-counts`).
    #[arg(long)]
    pub project_n: Option<u64>,
    #[arg(long, value_enum, default_value_t = TableFormat::Tsv)]
    pub format: TableFormat,
    /// Output file (standard output when omitted).
    #[arg(long)]
    pub out: Option<PathBuf>,
}
