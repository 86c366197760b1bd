mod commands;
mod config;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use commands::Failure;

/// Lower ℓ^p bounds for matrices indexed by doubling metric spaces.
#[derive(Parser, Debug)]
#[command(name = "lpstab", version)]
struct Cli {
    #[command(flatten)]
    global: Global,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Debug, Clone)]
pub struct Global {
    /// Seed for every randomized step.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Directory receiving output files.
    #[arg(long, global = true, default_value = ".")]
    pub out_dir: PathBuf,
    /// Comma-separated exponents, e.g. `1,1.5,2,inf`.
    #[arg(long, global = true)]
    pub p_grid: Option<String>,
    /// Accept a grid without 1, 2 and inf (estimates only, no verdict).
    #[arg(long, global = true)]
    pub partial_grid: bool,
    /// JSON run configuration; command-line flags take precedence.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Print the JSON report on stdout.
    #[arg(long, global = true, conflicts_with = "csv")]
    pub json: bool,
    /// Print the CSV table on stdout.
    #[arg(long, global = true)]
    pub csv: bool,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Write a matrix from the example zoo.
    Gen(commands::GenArgs),
    /// Structural statistics, norms and property checks of a matrix file.
    Analyze(commands::AnalyzeArgs),
    /// Estimate λ_p over the exponent grid and chain the propagation bounds.
    Lambda(commands::LambdaArgs),
    /// Localize a function onto a ball of radius 2L.
    Localize(commands::LocalizeArgs),
    /// Left inverse, decay fit and the stability verdict over windows.
    Invert(commands::InvertArgs),
    /// Run a verification suite.
    Verify(commands::VerifyArgs),
}

fn init_threads() {
    if let Some(n) = std::env::var("LPSTAB_THREADS").ok().and_then(|v| v.parse::<usize>().ok()).filter(|&n| n > 0) {
        let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 2 } else { 0 });
        }
    };
    init_threads();
    let result = match &cli.command {
        Command::Gen(a) => commands::gen(&cli.global, a),
        Command::Analyze(a) => commands::analyze(&cli.global, a),
        Command::Lambda(a) => commands::lambda(&cli.global, a),
        Command::Localize(a) => commands::localize(&cli.global, a),
        Command::Invert(a) => commands::invert(&cli.global, a),
        Command::Verify(a) => commands::verify(&cli.global, a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {:#}", f.error);
            ExitCode::from(f.code)
        }
    }
}

impl From<anyhow::Error> for Failure {
    fn from(error: anyhow::Error) -> Self {
        let code = match error.downcast_ref::<lpstab_core::Error>() {
            Some(lpstab_core::Error::Capacity { .. }) => 3,
            _ => 2,
        };
        Failure { code, error }
    }
}

impl From<lpstab_core::Error> for Failure {
    fn from(error: lpstab_core::Error) -> Self {
        anyhow::Error::from(error).into()
    }
}
