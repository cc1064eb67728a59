//! `tropikam` command-line front-end.

mod commands;
mod input;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use tropikam::ingest::CostFormat;
use tropikam::Tolerances;

#[derive(Parser, Debug)]
#[command(
    name = "tropikam",
    version,
    about = "Weak KAM analysis of finite cost kernels"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,

    /// Cost file to read.
    #[arg(long, global = true, value_name = "PATH")]
    pub input: Option<PathBuf>,

    /// Cost file format; defaults to the input/output file extension.
    #[arg(long, global = true, value_parser = parse_format)]
    pub format: Option<CostFormat>,

    /// Generate the kernel from a Lagrangian, e.g. `pendulum:eps=0.1,N=50,K=10`.
    #[arg(long, global = true, value_name = "SPEC")]
    pub lagrangian: Option<String>,

    /// Where to write the cost file (ingest) or the JSON report (others).
    #[arg(long, global = true, value_name = "PATH")]
    pub out: Option<PathBuf>,

    /// Print the JSON report to standard output instead of the summary.
    #[arg(long, global = true)]
    pub json: bool,

    /// Write plot-ready CSV data to this path.
    #[arg(long, global = true, value_name = "PATH")]
    pub emit_csv: Option<PathBuf>,

    #[arg(long, global = true, default_value_t = Tolerances::default().num)]
    pub eps_num: f64,

    #[arg(long, global = true, default_value_t = Tolerances::default().aubry)]
    pub eps_aubry: f64,

    #[arg(long, global = true, default_value_t = Tolerances::default().dual)]
    pub eps_dual: f64,

    #[arg(long, global = true, default_value_t = 0)]
    pub seed: u64,

    #[arg(long, global = true, default_value_t = 100_000)]
    pub orbit_length: usize,

    /// Source measure: JSON array, `dirac:IDX` or `uniform`.
    #[arg(long, global = true, allow_hyphen_values = true)]
    pub mu0: Option<String>,

    /// Target measure: JSON array, `dirac:IDX` or `uniform`.
    #[arg(long, global = true, allow_hyphen_values = true)]
    pub mu1: Option<String>,

    /// Number of random Lipschitz seeds checked by `kam`.
    #[arg(long, global = true, default_value_t = 16)]
    pub pairs: usize,
}

#[derive(Subcommand, Debug, Clone, Copy)]
pub enum Command {
    /// Build a kernel from a Lagrangian, or validate and convert a cost file.
    Ingest,
    /// Critical value, barrier, Aubry set and the cost axioms.
    Analyze,
    /// Generate admissible pairs and verify the fixed-point characterization.
    Kam,
    /// Optimal transport between two measures, with duality and factorization.
    Transport,
    /// Minimizing stationary couplings and their support.
    Mather,
    /// Markov realization of a minimizing coupling and Birkhoff averages.
    Ergodic,
}

fn parse_format(s: &str) -> Result<CostFormat, String> {
    s.parse().map_err(|e: tropikam::Error| e.to_string())
}

impl Cli {
    pub fn tolerances(&self) -> Tolerances {
        Tolerances {
            num: self.eps_num,
            aubry: self.eps_aubry,
            dual: self.eps_dual,
            ..Tolerances::default()
        }
    }
}

/// Why a run stopped.
pub enum Failure {
    /// Bad input or usage; exit code 2.
    Input(String),
    /// A check or a computation failed; exit code 1.
    Check(String),
}

fn configure_threads() {
    if let Some(n) = std::env::var("TROPIKAM_THREADS")
        .ok()
        .and_then(|v| v.parse::<usize>().ok())
    {
        if n > 0 {
            let _ = rayon::ThreadPoolBuilder::new()
                .num_threads(n)
                .build_global();
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    configure_threads();
    match commands::run(&cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(Failure::Check(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(1)
        }
        Err(Failure::Input(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
    }
}
