//! `adasub` command-line tool.
//!
//! Exit codes: 0 on success (including `--help`), 1 on usage errors, 2 on data, numeric or
//! I/O errors.

mod commands;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

#[derive(Debug, Parser)]
#[command(name = "adasub", version, about = "Adaptive subspace search for l0-criterion variable selection")]
pub struct Cli {
    #[command(flatten)]
    pub global: GlobalOptions,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Args)]
pub struct GlobalOptions {
    /// Master seed; every random stream is derived from it.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Worker threads for parallel sweeps (defaults to the number of CPUs).
    #[arg(long, global = true)]
    pub threads: Option<usize>,
    /// Overwrite existing result files.
    #[arg(long, global = true)]
    pub force: bool,
    #[arg(short, long, global = true, conflicts_with = "verbose")]
    pub quiet: bool,
    #[arg(short, long, global = true)]
    pub verbose: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum CriterionName {
    Aic,
    Bic,
    Ebic,
    Custom,
}

#[derive(Debug, Args)]
pub struct CriterionArgs {
    #[arg(long, value_enum, default_value = "bic")]
    pub criterion: CriterionName,
    /// EBIC gamma.
    #[arg(long, default_value_t = 1.0)]
    pub gamma: f64,
    /// Penalty per covariate for the custom criterion.
    #[arg(long)]
    pub lambda: Option<f64>,
}

#[derive(Debug, Args)]
pub struct DataArgs {
    /// CSV file with one header row.
    #[arg(long)]
    pub data: PathBuf,
    /// Name of the response column.
    #[arg(long, default_value = "y")]
    pub response: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ModeArg {
    Exhaustive,
    Bb,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum CorrArg {
    Identity,
    Toeplitz,
    Equal,
    Block,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum OracleArg {
    Pf,
    MinimalOip,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Simulate a Gaussian linear-model dataset.
    Simulate {
        #[arg(long)]
        n: usize,
        #[arg(long)]
        p: usize,
        /// Number of active covariates, or `random` for uniform on {0..min(10, p)}.
        #[arg(long, default_value = "random")]
        s0: String,
        #[arg(long, value_enum, default_value = "identity")]
        corr: CorrArg,
        /// Correlation parameter for toeplitz, equal and block.
        #[arg(long)]
        c: Option<f64>,
        /// Block size for block correlation.
        #[arg(long)]
        blocks: Option<usize>,
        #[arg(long, default_value_t = 100)]
        test_n: usize,
        #[arg(long, default_value_t = 1.0)]
        noise_sd: f64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Criterion-optimal model over all covariates.
    Bestsubset {
        #[command(flatten)]
        data: DataArgs,
        #[command(flatten)]
        criterion: CriterionArgs,
        #[arg(long, value_enum, default_value = "bb")]
        mode: ModeArg,
        /// Largest number of covariates searched.
        #[arg(long)]
        cap: Option<usize>,
    },
    /// Run the adaptive subspace search on a dataset.
    Run {
        #[command(flatten)]
        data: DataArgs,
        #[command(flatten)]
        criterion: CriterionArgs,
        /// Initial expected search size.
        #[arg(long, default_value_t = 10.0)]
        q: f64,
        /// Learning rate (defaults to n).
        #[arg(long = "K")]
        k: Option<f64>,
        /// Number of iterations.
        #[arg(long = "T", default_value_t = 1000)]
        t: u64,
        #[arg(long, default_value_t = 0.9)]
        rho: f64,
        #[arg(long, value_enum, default_value = "bb")]
        mode: ModeArg,
        /// Largest sub-problem solved exactly; larger ones are subsampled.
        #[arg(long)]
        cap: Option<usize>,
        /// Write all probabilities every this many iterations.
        #[arg(long)]
        trace_probs: Option<u64>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Convergence-speed study with an oracle in place of the sub-solver.
    Speed {
        #[arg(long, value_enum, default_value = "pf")]
        oracle: OracleArg,
        #[arg(long)]
        p: usize,
        /// Size of the oracle model; its members are the first covariates.
        #[arg(long, default_value_t = 3)]
        sstar: usize,
        #[arg(long, default_value_t = 10.0)]
        q: f64,
        /// Learning rate; `inf` selects the limiting update.
        #[arg(long = "K")]
        k: String,
        #[arg(long, default_value_t = 0.9)]
        rho: f64,
        #[arg(long = "T", default_value_t = 1_000_000)]
        t: u64,
        #[arg(long, default_value_t = 1000)]
        reps: usize,
        /// Output CSV file.
        #[arg(long)]
        out: PathBuf,
    },
    /// Run a simulation study described by a plan file.
    Experiment {
        #[arg(long)]
        plan: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            let code = match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => 0,
                _ => 1,
            };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match commands::dispatch(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
