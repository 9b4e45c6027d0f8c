use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};

/// Reliability-oriented routing: generate networks, solve for on-time arrival
/// probabilities, train reliable Q-learning tables and analyse the results.
#[derive(Debug, Parser)]
#[command(name = "r2l", version, propagate_version = true)]
pub struct Cli {
    #[command(flatten)]
    pub global: GlobalArgs,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Args)]
pub struct GlobalArgs {
    /// `key = value` config file; command-line flags take precedence.
    #[arg(long, global = true, value_name = "FILE")]
    pub config: Option<PathBuf>,
    /// Published hyperparameter set, applied below the config file.
    #[arg(long, global = true, value_enum)]
    pub preset: Option<Preset>,
    /// Print the effective configuration and exit without running.
    #[arg(long, global = true)]
    pub dump_config: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Preset {
    /// Tabular learner on a 5x5 grid.
    Table1,
    /// Deep learner settings (consumed by the neural trainer).
    Table3,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Generate a random grid network.
    Gen(GenArgs),
    /// Solve the on-time arrival problem, writing a value CSV.
    Solve(SolveArgs),
    /// Train a reliable Q-learning table, writing q and log CSVs.
    Train(TrainArgs),
    /// Compare a q table with a value table (sup and mean-absolute error).
    Eval(EvalArgs),
    /// Query the price of reliability between two budgets.
    Por(PorArgs),
    /// Export the reliability curve of a node.
    Curves(CurvesArgs),
    /// Export the budget-dependent routing policy.
    Policy(PolicyArgs),
}

#[derive(Debug, Args)]
pub struct Common {
    /// Root for relative output paths.
    #[arg(long, value_name = "DIR", env = "R2L_OUTPUT_DIR", default_value = ".")]
    pub output_dir: PathBuf,
}

#[derive(Debug, Args)]
pub struct GenArgs {
    #[arg(long)]
    pub rows: Option<usize>,
    #[arg(long)]
    pub cols: Option<usize>,
    /// Destination node [default: last node]
    #[arg(long)]
    pub dest: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long, default_value = "1")]
    pub mean_min: f64,
    #[arg(long, default_value = "5")]
    pub mean_max: f64,
    #[arg(long, default_value = "0.1")]
    pub sd_min: f64,
    #[arg(long, default_value = "0.5")]
    pub sd_max: f64,
    /// Share one travel-time law between both directions of a link.
    #[arg(long)]
    pub symmetric: bool,
    #[arg(short, long, default_value = "network.txt")]
    pub output: PathBuf,
    #[command(flatten)]
    pub common: Common,
}

#[derive(Debug, Args)]
pub struct Discretization {
    /// Budget bin width.
    #[arg(long, default_value = "0.5")]
    pub dt: f64,
    /// Maximum time budget.
    #[arg(long, default_value = "30")]
    pub horizon: f64,
}

#[derive(Debug, Args)]
pub struct SolveArgs {
    #[arg(long)]
    pub net: Option<PathBuf>,
    #[command(flatten)]
    pub disc: Discretization,
    #[arg(long, default_value = "1e-9")]
    pub tol: f64,
    /// Sweep limit [default: 10 x node count]
    #[arg(long)]
    pub max_sweeps: Option<usize>,
    #[arg(short, long, default_value = "values.csv")]
    pub output: PathBuf,
    #[command(flatten)]
    pub common: Common,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Schedule {
    Constant,
    /// alpha * n^-power on the n-th update of a cell.
    Visit,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum EpsilonSchedule {
    Linear,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Forbidden {
    /// Only existing successors are offered.
    Mask,
    /// Every slot is offered; missing successors stay put and cost `penalty`.
    Penalty,
}

#[derive(Debug, Args)]
pub struct TrainArgs {
    #[arg(long)]
    pub net: Option<PathBuf>,
    #[command(flatten)]
    pub disc: Discretization,
    #[arg(long, default_value = "100000")]
    pub episodes: u64,
    #[arg(long, default_value = "1")]
    pub alpha: f64,
    #[arg(long, value_enum, default_value = "visit")]
    pub alpha_schedule: Schedule,
    #[arg(long, default_value = "1")]
    pub alpha_power: f64,
    #[arg(long, default_value = "1")]
    pub gamma: f64,
    #[arg(long, default_value = "1")]
    pub epsilon_start: f64,
    #[arg(long, default_value = "0.01")]
    pub epsilon_floor: f64,
    /// Fraction of the episodes over which epsilon decays.
    #[arg(long, default_value = "0.8")]
    pub epsilon_decay: f64,
    #[arg(long, value_enum, default_value = "linear")]
    pub epsilon_schedule: EpsilonSchedule,
    #[arg(long, default_value = "100")]
    pub max_steps: usize,
    /// Initial value of learnable cells.
    #[arg(long, default_value = "0")]
    pub fill: f64,
    /// Episodes between log records; 0 means episodes / 200.
    #[arg(long, default_value = "0")]
    pub checkpoint_every: u64,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Value CSV to log errors against.
    #[arg(long = "ref", value_name = "VALUES")]
    pub reference: Option<PathBuf>,
    #[arg(short, long, default_value = "q.csv")]
    pub output: PathBuf,
    #[arg(long, default_value = "log.csv")]
    pub log: PathBuf,
    /// Independent runs with seeds seed, seed+1, ...
    #[arg(long, default_value = "1")]
    pub runs: u64,
    #[arg(long)]
    pub parallel: bool,
    /// Keep remaining budgets continuous instead of snapping to the dt grid.
    #[arg(long)]
    pub continuous: bool,
    #[arg(long, value_enum, default_value = "mask")]
    pub forbidden: Forbidden,
    #[arg(long, default_value = "100")]
    pub penalty: f64,
    #[command(flatten)]
    pub common: Common,
}

#[derive(Debug, Args)]
pub struct EvalArgs {
    #[arg(long)]
    pub q: Option<PathBuf>,
    #[arg(long)]
    pub values: Option<PathBuf>,
    #[arg(long, default_value = "0.5")]
    pub dt: f64,
}

/// Either a value CSV or a q CSV (the latter needs the network and horizon).
#[derive(Debug, Args)]
pub struct TableSource {
    #[arg(long, conflicts_with = "q")]
    pub values: Option<PathBuf>,
    #[arg(long)]
    pub q: Option<PathBuf>,
    #[arg(long)]
    pub net: Option<PathBuf>,
    #[command(flatten)]
    pub disc: Discretization,
}

#[derive(Debug, Args)]
pub struct PorArgs {
    #[command(flatten)]
    pub source: TableSource,
    #[arg(long)]
    pub node: Option<usize>,
    #[arg(long)]
    pub t1: Option<f64>,
    #[arg(long)]
    pub t2: Option<f64>,
}

#[derive(Debug, Args)]
pub struct CurvesArgs {
    #[command(flatten)]
    pub source: TableSource,
    #[arg(long)]
    pub node: Option<usize>,
    /// Output file; stdout when omitted.
    #[arg(short, long)]
    pub output: Option<PathBuf>,
    #[command(flatten)]
    pub common: Common,
}

#[derive(Debug, Args)]
pub struct PolicyArgs {
    #[command(flatten)]
    pub source: TableSource,
    /// Output file; stdout when omitted.
    #[arg(short, long)]
    pub output: Option<PathBuf>,
    #[command(flatten)]
    pub common: Common,
}
