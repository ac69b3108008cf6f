//! Command-line front end: channel ingestion, solve / analyze / sweep, and
//! machine-readable report emission.
//!
//! Exit codes are part of the contract: 0 success (including a max_iters
//! stop, which the report's stop_reason distinguishes), 2 malformed channel
//! or manifest, 3 dimension errors, 4 reference optimum unobtainable at the
//! requested precision.

mod channel_io;
mod commands;
mod emit;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

#[derive(Parser)]
#[command(
    name = "dmcap",
    version,
    about = "Discrete memoryless channel capacity solver and convergence analyzer"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Estimate channel capacity and emit a JSON report
    Solve(SolveArgs),
    /// Solve, then score the trace against a reference optimum
    Analyze(AnalyzeArgs),
    /// Solve and analyze a seeded random ensemble, one CSV row per channel
    Sweep(SweepArgs),
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum FileFormat {
    Csv,
    Json,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Generator {
    /// Rows drawn uniformly from the output simplex (needs --m --n --seed)
    Random,
    /// Binary symmetric channel (needs --delta)
    Bsc,
    /// Noiseless m-by-m channel (needs --m)
    Identity,
    /// Random channel with its first row duplicated (needs --m --n --seed)
    DupRow,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Units {
    Nats,
    Bits,
}

#[derive(Args)]
pub struct SourceArgs {
    /// Channel file: CSV matrix or JSON object
    #[arg(long, value_name = "PATH", conflicts_with = "generate")]
    pub channel: Option<PathBuf>,

    /// Channel file format; inferred from the extension when omitted
    #[arg(long, value_enum)]
    pub format: Option<FileFormat>,

    /// Generate the channel instead of reading it
    #[arg(long, value_enum)]
    pub generate: Option<Generator>,

    /// Input alphabet size (generators)
    #[arg(long)]
    pub m: Option<usize>,

    /// Output alphabet size (generators)
    #[arg(long)]
    pub n: Option<usize>,

    /// Crossover probability for --generate bsc
    #[arg(long)]
    pub delta: Option<f64>,

    /// Seed for random generators; required for reproducibility
    #[arg(long)]
    pub seed: Option<u64>,
}

#[derive(Args)]
pub struct SolverArgs {
    /// Target gap between the capacity bounds, in nats
    #[arg(long, default_value_t = 1e-6)]
    pub epsilon: f64,

    #[arg(long, default_value_t = 1_000_000)]
    pub max_iters: usize,

    /// "uniform" or a path to a one-line CSV distribution file
    #[arg(long, default_value = "uniform")]
    pub init: String,

    /// Ignore the gap test and run to --max-iters
    #[arg(long)]
    pub long_horizon: bool,
}

#[derive(Args)]
pub struct SolveArgs {
    #[command(flatten)]
    pub source: SourceArgs,

    #[command(flatten)]
    pub solver: SolverArgs,

    /// Write the per-iteration trace CSV here
    #[arg(long, value_name = "PATH")]
    pub trace_out: Option<PathBuf>,

    /// Write the JSON report here instead of stdout
    #[arg(long, value_name = "PATH")]
    pub report_out: Option<PathBuf>,

    /// Cross-check the estimate against an independent oracle
    #[arg(long)]
    pub verify: bool,

    /// Unit used in the console summary
    #[arg(long, value_enum, default_value_t = Units::Nats)]
    pub units: Units,
}

#[derive(Args)]
pub struct AnalyzeArgs {
    #[command(flatten)]
    pub source: SourceArgs,

    #[command(flatten)]
    pub solver: SolverArgs,

    /// Write the per-iteration analysis CSV here
    #[arg(long, value_name = "PATH")]
    pub trace_out: Option<PathBuf>,

    /// Write the JSON analysis here instead of stdout
    #[arg(long, value_name = "PATH")]
    pub report_out: Option<PathBuf>,
}

#[derive(Args)]
pub struct SweepArgs {
    /// Number of channels in the ensemble
    #[arg(long)]
    pub count: usize,

    /// Input sizes, a single value or an inclusive range like 3..6
    #[arg(long)]
    pub m: String,

    /// Output sizes, a single value or an inclusive range like 3..6
    #[arg(long)]
    pub n: String,

    /// Base seed; channel k uses seed + k
    #[arg(long)]
    pub seed: u64,

    #[arg(long, default_value_t = 1e-6)]
    pub epsilon: f64,

    #[arg(long, default_value_t = 1_000_000)]
    pub max_iters: usize,

    /// Write the summary CSV here instead of stdout
    #[arg(long, value_name = "PATH")]
    pub report_out: Option<PathBuf>,
}

/// Error carrying its exit code; 2 malformed, 3 dimension, 4 reference.
#[derive(Debug)]
pub struct CmdError {
    pub code: u8,
    pub message: String,
}

impl CmdError {
    pub fn malformed(msg: impl Into<String>) -> Self {
        Self {
            code: 2,
            message: msg.into(),
        }
    }

    pub fn dimension(msg: impl Into<String>) -> Self {
        Self {
            code: 3,
            message: msg.into(),
        }
    }

    pub fn reference(msg: impl Into<String>) -> Self {
        Self {
            code: 4,
            message: msg.into(),
        }
    }

    pub fn io(msg: impl Into<String>) -> Self {
        Self {
            code: 1,
            message: msg.into(),
        }
    }
}

impl From<dmcap::Error> for CmdError {
    fn from(err: dmcap::Error) -> Self {
        match err {
            dmcap::Error::DimensionMismatch { .. } | dmcap::Error::DimensionGuard { .. } => {
                Self::dimension(err.to_string())
            }
            dmcap::Error::ReferenceUnobtainable(_) => Self::reference(err.to_string()),
            _ => Self::malformed(err.to_string()),
        }
    }
}

impl From<std::io::Error> for CmdError {
    fn from(err: std::io::Error) -> Self {
        Self::io(err.to_string())
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Solve(args) => commands::cmd_solve(&args),
        Command::Analyze(args) => commands::cmd_analyze(&args),
        Command::Sweep(args) => commands::cmd_sweep(&args),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {}", e.message);
            ExitCode::from(e.code)
        }
    }
}
