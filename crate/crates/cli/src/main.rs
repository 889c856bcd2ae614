mod commands;
mod error;
mod files;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

/// Multitime quantum processes: build, quantify and optimize.
///
/// The worker thread count follows `RAYON_NUM_THREADS`.
#[derive(Debug, Parser)]
#[command(name = "combres", version)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Build a process from a scenario spec.
    Build {
        spec: PathBuf,
        /// Overrides the seed of the spec.
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        out: PathBuf,
        /// Also write the planted comb of a planted scenario.
        #[arg(long)]
        comb_out: Option<PathBuf>,
    },
    /// I, M and N of a process, optionally after coarse-graining.
    Quantify {
        process: PathBuf,
        /// Times to coarse-grain: `all` or a comma-separated list of names or indices.
        #[arg(long)]
        coarse_grain: Option<String>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Control-optimized estimate of a quantifier.
    Optimize {
        process: PathBuf,
        #[command(flatten)]
        opt: OptimizerArgs,
        /// Starting combs tried in addition to the restarts.
        #[arg(long = "warm-start")]
        warm_starts: Vec<PathBuf>,
        /// Report file; the witness comb goes next to it.
        #[arg(long)]
        out: PathBuf,
    },
    /// Reachable divergence of one process from another.
    Divergence {
        process: PathBuf,
        /// Second process; defaults to the full marginal of the first.
        #[arg(long)]
        against: Option<PathBuf>,
        #[command(flatten)]
        opt: OptimizerArgs,
        /// Dimension of an extra reference carried from the first to the last time.
        #[arg(long, default_value_t = 1)]
        reference_dim: usize,
        #[arg(long)]
        out: PathBuf,
    },
    /// Sequential or parallel composition of two processes.
    Compose {
        first: PathBuf,
        second: PathBuf,
        #[arg(long, value_enum)]
        mode: ComposeMode,
        #[arg(long)]
        out: PathBuf,
    },
    /// Run a built-in property suite.
    Verify {
        #[arg(value_enum)]
        suite: Suite,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Full report: quantifiers, optimized I, M, N and the divergence hierarchy.
    Report {
        process: PathBuf,
        #[command(flatten)]
        opt: OptimizerArgs,
        #[arg(long)]
        out: PathBuf,
    },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum ComposeMode {
    Seq,
    Par,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, serde::Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Suite {
    Identity,
    Markov,
    Counterexample,
    Composition,
}

/// Flags mirroring `OptimizerConfig`; they override `--config`.
#[derive(Debug, Clone, Default, Args)]
pub struct OptimizerArgs {
    /// OptimizerConfig JSON file.
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub restarts: Option<usize>,
    /// Relative tolerance of the stopping rule.
    #[arg(long)]
    pub tol: Option<f64>,
    /// total_info (I), markov_info (M), non_markovianity (N) or lambda_max_proxy.
    #[arg(long)]
    pub objective: Option<String>,
    /// Intermediate times kept open: `none` or a comma-separated list.
    #[arg(long)]
    pub resolution: Option<String>,
    /// Intermediate times closed: `all`, `none` or a comma-separated list.
    #[arg(long)]
    pub coarse_grain: Option<String>,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match commands::run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("combres: {e}");
            e.exit_code()
        }
    }
}
