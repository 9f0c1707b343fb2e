use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};

#[derive(Debug, Parser)]
#[command(name = "sizebias", version, about = "Size-bias concentration bounds for occupancy models")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Tabulate tail bounds for a model over a grid of deviations.
    Bounds(BoundsArgs),
    /// Draw statistics or coupled pairs from a model.
    Simulate(SimulateArgs),
    /// Audit bound domination and coupling correctness; exits 1 on any failure.
    Verify(VerifyArgs),
    /// Compare two bound families over a grid and locate their crossings.
    Compare(CompareArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Csv,
    Json,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum StatisticArg {
    Ge,
    Ne,
    Both,
}

#[derive(Debug, Args)]
pub struct Common {
    /// Model document (JSON).
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Output file; standard output when absent.
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "csv")]
    pub format: Format,
    #[arg(long, value_enum, default_value = "both")]
    pub statistic: StatisticArg,
    /// Worker threads; results do not depend on it.
    #[arg(long)]
    pub jobs: Option<usize>,
}

#[derive(Debug, Args)]
pub struct BoundsArgs {
    #[command(flatten)]
    pub common: Common,
    /// Deviations as start:stop:step, a comma list, or empty.
    #[arg(long, default_value = "1:12:1")]
    pub t_grid: String,
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    #[command(flatten)]
    pub common: Common,
    /// Overrides the seed in the model document; one of the two is required.
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long, default_value_t = 10_000)]
    pub samples: usize,
    /// Dump coupled pairs instead of plain draws.
    #[arg(long)]
    pub pairs: bool,
}

#[derive(Debug, Args)]
pub struct VerifyArgs {
    #[command(flatten)]
    pub common: Common,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long, default_value_t = 100_000)]
    pub samples: usize,
    #[arg(long, default_value = "1:12:1")]
    pub t_grid: String,
}

#[derive(Debug, Args)]
pub struct CompareArgs {
    #[command(flatten)]
    pub common: Common,
    #[arg(long, default_value = "1:12:1")]
    pub t_grid: String,
    /// First bound, e.g. `bernstein` or `sub_poisson_left`.
    #[arg(long, default_value = "bernstein")]
    pub bound_a: String,
    #[arg(long, default_value = "mcdiarmid_right")]
    pub bound_b: String,
    /// Mean to use instead of a model (with --c).
    #[arg(long, requires = "c", conflicts_with = "config")]
    pub mu: Option<f64>,
    /// Coupling constant to use instead of a model (with --mu).
    #[arg(long, requires = "mu")]
    pub c: Option<f64>,
    /// `sum c_i^2` for the bounded-differences bound when --mu is given.
    #[arg(long, requires = "mu")]
    pub mcdiarmid_sum_sq: Option<f64>,
}
