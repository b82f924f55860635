mod commands;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use crate::output::Failure;

#[derive(Parser, Debug)]
#[command(name = "parabell", version, about = "Correlation bounds for non-Hermitian observables")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Maximize every bound expression on the selected sets and compare with the reference cells.
    Tables(TablesArgs),
    /// Check every inequality on seeded random states or random operators.
    Certify(CertifyArgs),
    /// Write unit-ball coordinates of sampled states as CSV.
    Ball(BallArgs),
    /// Weak-measurement convergence study for one operator pair.
    Weakmeas(WeakmeasArgs),
}

#[derive(Args, Debug)]
pub struct TablesArgs {
    /// `all`, `tableI`, `tableII`, or comma-separated set labels.
    #[arg(long, default_value = "all")]
    pub sets: String,
    #[arg(long, default_value_t = 200)]
    pub starts: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value_t = 2000)]
    pub max_iterations: usize,
    #[arg(long, default_value_t = 1e-9)]
    pub tol: f64,
    /// Regularization sweep.
    #[arg(long, value_delimiter = ',', default_value = "1e-2,1e-3,1e-4", allow_hyphen_values = true)]
    pub epsilon: Vec<f64>,
    /// JSON report path; stdout when absent.
    #[arg(long)]
    pub output: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct CertifyArgs {
    #[arg(long, default_value_t = 100_000, allow_hyphen_values = true)]
    pub samples: i64,
    #[arg(long, default_value = "all")]
    pub sets: String,
    /// Sample random operator quadruples instead of the standard sets.
    #[arg(long)]
    pub random_ops: bool,
    /// Dimensions for `--random-ops`.
    #[arg(long, value_delimiter = ',', default_value = "2,3,4,5,6", allow_hyphen_values = true)]
    pub dim: Vec<i64>,
    #[arg(long, default_value_t = 1)]
    pub seed: u64,
    #[arg(long, default_value_t = 0.0)]
    pub epsilon: f64,
    #[arg(long)]
    pub output: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct BallArgs {
    #[arg(long, default_value = "all")]
    pub sets: String,
    /// States per set.
    #[arg(long, default_value_t = 1000)]
    pub samples: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value_t = parabell_core::DEFAULT_EPSILON)]
    pub epsilon: f64,
    /// Which on-site correlator supplies the first coordinate.
    #[arg(long, value_enum, default_value = "alice")]
    pub side: commands::SideArg,
    /// CSV destination.
    #[arg(long)]
    pub output: PathBuf,
}

#[derive(Args, Debug)]
pub struct WeakmeasArgs {
    /// Two observable tokens, e.g. `A0,B0p` or `A0,B0pdag`.
    #[arg(long, value_delimiter = ',', default_value = "A0,B0pdag")]
    pub pair: Vec<String>,
    /// Coupling-to-width ratios.
    #[arg(long, value_delimiter = ',', default_value = "0.2,0.1,0.05,0.02", allow_hyphen_values = true)]
    pub gsigma: Vec<f64>,
    #[arg(long, default_value_t = 1.0, allow_hyphen_values = true)]
    pub sigma: f64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    pub output: Option<PathBuf>,
}

fn configure_threads() -> Result<(), Failure> {
    let Ok(raw) = std::env::var("PARABELL_THREADS") else {
        return Ok(());
    };
    let threads: usize = raw
        .trim()
        .parse()
        .ok()
        .filter(|&n| n >= 1)
        .ok_or_else(|| Failure::Usage(format!("PARABELL_THREADS must be an integer >= 1, got `{raw}`")))?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build_global()
        .map_err(|e| Failure::Usage(e.to_string()))
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let run = || -> Result<bool, Failure> {
        configure_threads()?;
        let invocation = std::env::args().skip(1).collect::<Vec<_>>().join(" ");
        match cli.command {
            Command::Tables(args) => commands::tables(&args, &invocation),
            Command::Certify(args) => commands::certify(&args, &invocation),
            Command::Ball(args) => commands::ball(&args, &invocation),
            Command::Weakmeas(args) => commands::weakmeas(&args, &invocation),
        }
    };
    match run() {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(failure) => {
            eprintln!("error: {failure}");
            ExitCode::from(failure.code())
        }
    }
}
