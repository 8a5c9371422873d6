//! Argument surface. Flags mirror the config-file keys; a `--config` file
//! fills in anything not given on the command line.

use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

#[derive(Parser)]
#[command(
    name = "sepmin",
    version,
    about = "Oracle-efficient differentially private learning and synthetic data over boolean query classes"
)]
pub struct Cli {
    #[command(subcommand)]
    pub cmd: Cmd,
}

#[derive(Subcommand)]
pub enum Cmd {
    /// Privately learn the minimizing query from a dataset (rspm,
    /// gauss-rspm, or prsma).
    Learn(LearnArgs),
    /// Generate a private synthetic dataset via the query release game.
    Synth(SynthArgs),
    /// Empirical neighboring-dataset frequency-ratio audit.
    Audit(AuditArgs),
    /// Online-learning regret experiments (follow-the-private-leader or
    /// the data player's FTPL).
    Regret(RegretArgs),
    /// Excess-error tables over an (n, eps) grid.
    Bench(BenchArgs),
    /// Exhaustively verify the separator-set constructions.
    VerifySeparators(VerifyArgs),
}

#[derive(Args, Clone)]
pub struct CommonArgs {
    /// Flat key = value config file; flags win over file values.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Query family: conj | disj | par | half | dlist.
    #[arg(long)]
    pub class: Option<String>,
    /// Universe dimension.
    #[arg(long)]
    pub d: Option<usize>,
    /// Halfspace weight grid, e.g. "-1,1".
    #[arg(long)]
    pub grid: Option<String>,
    /// Loss-lift the class over labelled points (trailing label column).
    #[arg(long)]
    pub lifted: bool,
    /// Master seed; every random draw descends from it.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Output directory for records and artifacts.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Worker threads (default: all cores). Results do not depend on it.
    #[arg(long)]
    pub threads: Option<usize>,
}

#[derive(Args)]
pub struct LearnArgs {
    #[command(flatten)]
    pub common: CommonArgs,
    /// Dataset file: one comma-separated record per line.
    #[arg(long)]
    pub data: Option<PathBuf>,
    /// rspm | gauss-rspm | prsma.
    #[arg(long)]
    pub mech: Option<String>,
    #[arg(long)]
    pub eps: Option<f64>,
    #[arg(long)]
    pub delta: Option<f64>,
    /// Oracle failure policy: never | bernoulli:p | calls:i,j | trigger:coords.
    #[arg(long)]
    pub policy: Option<String>,
    /// Treat (eps, delta) as prsma's internal run parameters.
    #[arg(long)]
    pub raw: bool,
    #[arg(long)]
    pub reps_cap: Option<u64>,
    /// Retain the separator noise trace in the run record.
    #[arg(long)]
    pub trace: bool,
}

#[derive(Args)]
pub struct SynthArgs {
    #[command(flatten)]
    pub common: CommonArgs,
    #[arg(long)]
    pub data: Option<PathBuf>,
    #[arg(long)]
    pub eps: Option<f64>,
    #[arg(long)]
    pub delta: Option<f64>,
    #[arg(long)]
    pub beta: Option<f64>,
    /// gaussian-rspm | private-oracle | prsma.
    #[arg(long)]
    pub preset: Option<String>,
    /// Override the preset's round count.
    #[arg(long)]
    pub t: Option<u64>,
    /// Override the per-round accuracy target.
    #[arg(long)]
    pub alpha0: Option<f64>,
    /// Override the FTPL noise scale.
    #[arg(long)]
    pub mu: Option<f64>,
    #[arg(long)]
    pub policy: Option<String>,
}

#[derive(Args)]
pub struct AuditArgs {
    #[command(flatten)]
    pub common: CommonArgs,
    /// rspm | gauss-rspm | constant | exact-erm | rr.
    #[arg(long)]
    pub mech: Option<String>,
    /// Dataset file; default is a seeded sample of size --n from the universe.
    #[arg(long)]
    pub data: Option<PathBuf>,
    #[arg(long)]
    pub n: Option<usize>,
    #[arg(long)]
    pub eps: Option<f64>,
    #[arg(long)]
    pub delta: Option<f64>,
    #[arg(long)]
    pub trials: Option<u64>,
    /// Overall confidence level of the slack construction.
    #[arg(long)]
    pub confidence: Option<f64>,
}

#[derive(Args)]
pub struct RegretArgs {
    #[command(flatten)]
    pub common: CommonArgs,
    /// fpl (follow the private leader) | ftpl (data player).
    #[arg(long)]
    pub mode: Option<String>,
    #[arg(long)]
    pub t: Option<usize>,
    #[arg(long)]
    pub eps: Option<f64>,
    #[arg(long)]
    pub mu: Option<f64>,
    /// alternating | uniform.
    #[arg(long)]
    pub stream: Option<String>,
}

#[derive(Args)]
pub struct BenchArgs {
    #[command(flatten)]
    pub common: CommonArgs,
    /// rspm | gauss-rspm | prsma.
    #[arg(long)]
    pub mech: Option<String>,
    #[arg(long)]
    pub n_grid: Option<String>,
    #[arg(long)]
    pub eps_grid: Option<String>,
    #[arg(long)]
    pub trials: Option<u64>,
    #[arg(long)]
    pub beta: Option<f64>,
    #[arg(long)]
    pub delta: Option<f64>,
}

#[derive(Args)]
pub struct VerifyArgs {
    #[command(flatten)]
    pub common: CommonArgs,
    /// Max dimension for the bitwise families (halfspaces cap at 4,
    /// decision lists at 3).
    #[arg(long)]
    pub d_max: Option<usize>,
}
