//! `breakseg`: simulate piecewise-constant signals, segment them, score
//! breakpoint guesses, and sweep penalty exponents.
//!
//! Exit codes: 0 success, 2 usage or validation failure, 1 internal error.

mod commands;

use std::process::ExitCode;

use clap::error::ErrorKind;
use clap::{Args, Parser, Subcommand, ValueEnum};

#[derive(Parser)]
#[command(
    name = "breakseg",
    version,
    about = "Breakpoint detection error toolkit"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand)]
pub enum Command {
    /// Generate a noisy signal and its truth model.
    Simulate(SimulateArgs),
    /// Fit segmentation models to a signal CSV.
    Segment(SegmentArgs),
    /// Score breakpoint guesses against truth or annotations.
    #[command(subcommand)]
    Error(ErrorCommand),
    /// Run a penalty-exponent sweep experiment.
    Sweep(SweepArgs),
}

#[derive(Clone, Copy, ValueEnum)]
pub enum SchemeArg {
    UniformSpaced,
    UniformRandom,
}

#[derive(Args)]
pub struct SimulateArgs {
    /// Number of positions in the truth model.
    #[arg(long = "P", value_name = "P")]
    pub positions: usize,
    /// Positions per segment.
    #[arg(long)]
    pub spacing: usize,
    /// Number of samples to draw.
    #[arg(long = "d", value_name = "D")]
    pub density: usize,
    #[arg(long)]
    pub seed: u64,
    /// Segment mean cycle, comma separated.
    #[arg(
        long,
        value_delimiter = ',',
        default_value = "-1,0,1,0",
        allow_hyphen_values = true
    )]
    pub means: Vec<f64>,
    /// Segment standard-deviation cycle, comma separated.
    #[arg(long, value_delimiter = ',', default_value = "1")]
    pub sds: Vec<f64>,
    #[arg(long, value_enum, default_value = "uniform-spaced")]
    pub scheme: SchemeArg,
    /// Output path for the signal CSV.
    #[arg(long, default_value = "signal.csv")]
    pub out_signal: String,
    /// Output path for the truth-model JSON.
    #[arg(long, default_value = "truth.json")]
    pub out_truth: String,
}

#[derive(Args)]
pub struct SegmentArgs {
    /// Signal CSV to segment.
    #[arg(long)]
    pub input: String,
    /// Fit least-squares models for every k up to this size.
    #[arg(long)]
    pub kmax: Option<usize>,
    /// Also solve the fused-lasso smoothing at this λ₂.
    #[arg(long, value_name = "LAMBDA")]
    pub flsa: Option<f64>,
}

#[derive(Subcommand)]
pub enum ErrorCommand {
    /// Exact breakpoint error of guesses against true breaks.
    Exact(ExactErrorArgs),
    /// Annotation error of guesses against annotated regions.
    Annotation(AnnotationErrorArgs),
}

#[derive(Args)]
pub struct ExactErrorArgs {
    /// True breakpoints, one integer per line.
    #[arg(long)]
    pub breaks: String,
    /// Guessed breakpoints, one integer per line.
    #[arg(long)]
    pub guesses: String,
    /// Number of positions P.
    #[arg(long = "positions", value_name = "P")]
    pub positions: usize,
}

#[derive(Args)]
pub struct AnnotationErrorArgs {
    /// Annotation CSV (lower,upper,min_breaks,max_breaks).
    #[arg(long)]
    pub annotations: String,
    /// Guessed breakpoints, one integer per line.
    #[arg(long)]
    pub guesses: String,
    /// Count incorrect regions instead of incorrect guesses.
    #[arg(long)]
    pub zero_one: bool,
    /// Extend with zero-count regions over the gaps in 1..P-1.
    #[arg(long, value_name = "P")]
    pub with_negatives: Option<usize>,
}

#[derive(Clone, Copy, ValueEnum)]
pub enum ExperimentArg {
    Density,
    Length,
    Composite,
    Flsa,
}

#[derive(Args)]
pub struct SweepArgs {
    #[arg(long, value_enum)]
    pub experiment: ExperimentArg,
    /// Output CSV of one row per exponent grid point.
    #[arg(long)]
    pub out: String,
    #[arg(long)]
    pub seed: u64,
    /// Override the α grid as lo:hi:step.
    #[arg(long, value_name = "LO:HI:STEP", allow_hyphen_values = true)]
    pub alpha_grid: Option<String>,
    /// Override the β grid as lo:hi:step.
    #[arg(long, value_name = "LO:HI:STEP", allow_hyphen_values = true)]
    pub beta_grid: Option<String>,
    /// Multiply each penalty coefficient by the estimated variance.
    #[arg(long)]
    pub with_variance: bool,
    /// Directory for per-signal error-curve dumps at the argmin.
    #[arg(long, value_name = "DIR")]
    pub curves_dir: Option<String>,
}

/// Failures split by exit code: usage/validation (2) vs internal (1).
pub enum CliError {
    Usage(String),
    Internal(String),
}

impl From<breakseg::Error> for CliError {
    fn from(e: breakseg::Error) -> Self {
        match e {
            breakseg::Error::InvalidInput(_) | breakseg::Error::Parse { .. } => {
                CliError::Usage(e.to_string())
            }
            breakseg::Error::Io(_) => CliError::Internal(e.to_string()),
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => 0,
                _ => 2,
            };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    init_thread_pool();
    let result = match cli.command {
        Command::Simulate(args) => commands::simulate(&args),
        Command::Segment(args) => commands::segment(&args),
        Command::Error(ErrorCommand::Exact(args)) => commands::exact_error(&args),
        Command::Error(ErrorCommand::Annotation(args)) => commands::annotation_error(&args),
        Command::Sweep(args) => commands::sweep(&args),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(CliError::Usage(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
        Err(CliError::Internal(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(1)
        }
    }
}

/// `BREAKSEG_THREADS` caps sweep parallelism; 0 or unset means automatic.
fn init_thread_pool() {
    if let Ok(raw) = std::env::var("BREAKSEG_THREADS") {
        if let Ok(n) = raw.trim().parse::<usize>() {
            if n > 0 {
                let _ = rayon::ThreadPoolBuilder::new()
                    .num_threads(n)
                    .build_global();
            }
        }
    }
}
