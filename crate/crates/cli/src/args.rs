use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

#[derive(Debug, Parser)]
#[command(name = "zsomg", version, about = "Solve two-player zero-sum POSGs with occupancy-state HSVI")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run HSVI until the gap at the initial state is at most epsilon.
    Solve(SolveArgs),
    /// Exact value by pure-strategy enumeration.
    Oracle(OracleArgs),
    /// Evaluate a pair of strategy files.
    Eval(EvalArgs),
    /// Load and validate a model.
    Validate(ValidateArgs),
}

#[derive(Debug, Clone, Args, Serialize)]
#[group(required = true, multiple = false)]
pub struct ModelSource {
    /// Model file in the JSON schema.
    #[arg(long)]
    pub model: Option<PathBuf>,
    /// Name of a hardcoded instance.
    #[arg(long)]
    pub builtin: Option<String>,
}

#[derive(Debug, Clone, Copy, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Lipschitz {
    Static,
    Refined,
}

#[derive(Debug, Args, Serialize)]
pub struct SolveArgs {
    #[command(flatten)]
    pub source: ModelSource,
    #[arg(long, default_value_t = 0.01)]
    pub epsilon: f64,
    /// Ball radius; half its admissible maximum by default.
    #[arg(long)]
    pub rho: Option<f64>,
    /// Local-game tolerance; epsilon / 10 by default.
    #[arg(long)]
    pub local_tol: Option<f64>,
    #[arg(long, default_value_t = zsomg::hsvi::DEFAULT_MAX_TRIALS)]
    pub max_trials: usize,
    #[arg(long, value_enum, default_value_t = Lipschitz::Static)]
    pub lipschitz: Lipschitz,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Override the model's horizon.
    #[arg(long)]
    pub horizon: Option<usize>,
    /// Trace CSV output.
    #[arg(long)]
    pub trace: Option<PathBuf>,
    /// Summary JSON output.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Directory for the extracted strategies (`p1.json`, `p2.json`).
    #[arg(long)]
    pub strategies: Option<PathBuf>,
    /// Run every data-parallel loop sequentially.
    #[arg(long)]
    pub sequential: bool,
}

#[derive(Debug, Args, Serialize)]
pub struct OracleArgs {
    #[command(flatten)]
    pub source: ModelSource,
    /// Override the model's horizon.
    #[arg(long)]
    pub horizon: Option<usize>,
    /// Write the value and mixes as a golden fixture.
    #[arg(long)]
    pub write_golden: Option<PathBuf>,
    #[arg(long)]
    pub sequential: bool,
}

#[derive(Debug, Args, Serialize)]
pub struct EvalArgs {
    #[command(flatten)]
    pub source: ModelSource,
    /// Player 1's strategy file.
    #[arg(long)]
    pub p1: PathBuf,
    /// Player 2's strategy file.
    #[arg(long)]
    pub p2: PathBuf,
    #[arg(long)]
    pub horizon: Option<usize>,
    /// Also compute both best responses.
    #[arg(long)]
    pub exploitability: bool,
    /// Evaluation JSON output.
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long)]
    pub sequential: bool,
}

#[derive(Debug, Args, Serialize)]
pub struct ValidateArgs {
    #[command(flatten)]
    pub source: ModelSource,
    /// Write the model in canonical form.
    #[arg(long)]
    pub write_canonical: Option<PathBuf>,
}
