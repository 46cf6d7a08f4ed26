use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};

#[derive(Debug, Parser)]
#[command(
    name = "pcurve",
    version,
    about = "Principal-curve seriation of measure-valued time series"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Generate a synthetic dataset directory.
    Gen(GenArgs),
    /// Fit a principal curve to a dataset.
    Fit(FitArgs),
    /// Order the batches of a dataset and score the ordering.
    Seriate(SeriateArgs),
    /// Run a parameter or budget sweep.
    Sweep(SweepArgs),
    /// Time the main building blocks on a generated dataset.
    Bench(BenchArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ModeArg {
    Local,
    Nonlocal,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum OtArg {
    Exact,
    Sinkhorn,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum MethodArg {
    Ppc,
    Tsp,
    Spectral,
}

#[derive(Debug, Clone, Default, Args)]
pub struct DataFlags {
    /// Data model: dataset1, dataset2 or euclidean_line.
    #[arg(long)]
    pub model: Option<String>,
    /// Number of batches (comma-separated list for budget sweeps).
    #[arg(long, value_delimiter = ',')]
    pub n: Vec<usize>,
    /// Total number of atoms shared by all batches.
    #[arg(long)]
    pub atoms: Option<usize>,
    /// Gaussian noise level of the data model.
    #[arg(long)]
    pub sigma: Option<f64>,
    /// Reads per atom; embeds the data into the simplex and resamples it.
    #[arg(long)]
    pub reads: Option<u64>,
    /// Single seed (also the first seed when `--repeats` is given).
    #[arg(long)]
    pub seed: Option<u64>,
    /// Explicit seed list.
    #[arg(long, value_delimiter = ',')]
    pub seeds: Vec<u64>,
    /// Number of consecutive seeds.
    #[arg(long)]
    pub repeats: Option<usize>,
}

#[derive(Debug, Clone, Default, Args)]
pub struct SolverFlags {
    /// Length penalty (comma-separated list for sweeps).
    #[arg(long, value_delimiter = ',')]
    pub beta: Vec<f64>,
    /// Number of knots.
    #[arg(long)]
    pub knots: Option<usize>,
    /// Kernel bandwidth of the nonlocal objective (list for sweeps).
    #[arg(long, value_delimiter = ',')]
    pub h: Vec<f64>,
    /// `epanechnikov`, `epanechnikov:P,Q` or `table:W0,W1,...`.
    #[arg(long)]
    pub kernel: Option<String>,
    #[arg(long, value_enum)]
    pub mode: Option<ModeArg>,
    /// Pin the first and last knots to the earliest and latest batches.
    #[arg(long, num_args = 0..=1, default_missing_value = "true")]
    pub pin_ends: Option<bool>,
    /// Refine pseudotimes onto the segments next to the nearest knot.
    #[arg(long, num_args = 0..=1, default_missing_value = "true")]
    pub refine: Option<bool>,
    /// Stop when the objective drops by less than this.
    #[arg(long)]
    pub epsilon: Option<f64>,
    #[arg(long)]
    pub max_iters: Option<usize>,
    /// Wall-clock cap per fit, in seconds.
    #[arg(long)]
    pub time_limit: Option<f64>,
}

#[derive(Debug, Clone, Default, Args)]
pub struct OtFlags {
    /// Transport solver used for distances.
    #[arg(long, value_enum)]
    pub ot: Option<OtArg>,
    /// Entropic regularization of the Sinkhorn solver.
    #[arg(long)]
    pub reg: Option<f64>,
    /// Marginal tolerance of the Sinkhorn solver (default 1e-4).
    #[arg(long)]
    pub ot_tol: Option<f64>,
}

#[derive(Debug, Clone, Default, Args)]
pub struct BaselineFlags {
    /// Seriation methods (comma-separated).
    #[arg(long, value_enum, value_delimiter = ',')]
    pub method: Vec<MethodArg>,
    /// Gaussian affinity scale of spectral seriation (list for sweeps).
    #[arg(long, value_delimiter = ',')]
    pub spectral_sigma: Vec<f64>,
}

#[derive(Debug, Args)]
pub struct GenArgs {
    #[command(flatten)]
    pub data: DataFlags,
    /// TOML configuration file.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Output dataset directory.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct FitArgs {
    /// Dataset directory.
    #[arg(long)]
    pub dataset: PathBuf,
    #[command(flatten)]
    pub solver: SolverFlags,
    #[command(flatten)]
    pub ot: OtFlags,
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Output directory (default `<dataset>/fit`).
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Also write an SVG scatter of the batches and the curve.
    #[arg(long)]
    pub svg: bool,
}

#[derive(Debug, Args)]
pub struct SeriateArgs {
    /// Dataset directory.
    #[arg(long)]
    pub dataset: PathBuf,
    #[command(flatten)]
    pub baseline: BaselineFlags,
    /// Fit directory holding `knots.csv` and `fit.json` (default `<dataset>/fit`).
    #[arg(long)]
    pub fit: Option<PathBuf>,
    /// Keep the earliest and latest batches at the ends of the TSP path.
    #[arg(long, num_args = 0..=1, default_missing_value = "true")]
    pub pin_ends: Option<bool>,
    #[command(flatten)]
    pub ot: OtFlags,
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Output directory (default `<dataset>/seriate-<method>`).
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct SweepArgs {
    #[command(flatten)]
    pub data: DataFlags,
    #[command(flatten)]
    pub solver: SolverFlags,
    #[command(flatten)]
    pub ot: OtFlags,
    #[command(flatten)]
    pub baseline: BaselineFlags,
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Output directory.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Worker threads (default: all cores).
    #[arg(long)]
    pub jobs: Option<usize>,
}

#[derive(Debug, Args)]
pub struct BenchArgs {
    #[command(flatten)]
    pub data: DataFlags,
    #[command(flatten)]
    pub solver: SolverFlags,
    #[command(flatten)]
    pub ot: OtFlags,
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Write `bench.json` into this directory.
    #[arg(long)]
    pub out: Option<PathBuf>,
}
