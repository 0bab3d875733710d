//! `latent-rank`: fit CFA/MTMM models, diagnose rank deficiencies and run
//! the split-ballot and Shapiro Monte Carlo experiments.
//!
//! Exit codes: 0 success (converged and admissible), 2 not converged,
//! 3 converged but inadmissible, 64 usage or model error, 65 bad data,
//! 66 unreadable input.

mod commands;
mod input;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

#[derive(Parser)]
#[command(name = "latent-rank", version, about = "CFA/MTMM estimation with identification diagnostics")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Fit a model to covariance matrices or raw data.
    Fit(FitArgs),
    /// Jacobian rank, nullspace, affected parameters and information at a θ.
    Diagnose(DiagnoseArgs),
    /// Smallest singular value, rank and condition number of Δ along δ.
    RankScan(RankScanArgs),
    /// Split-ballot Monte Carlo experiment.
    Simulate(SimArgs),
    /// Shapiro Monte Carlo experiment.
    Shapiro(SimArgs),
    /// Parse a model and report diagnostics.
    Validate(ValidateArgs),
}

#[derive(Args)]
struct FitArgs {
    /// Model file, or preset:NAME (sb-mtmm, sb-mtmm-positional, shapiro, shapiro-direct).
    #[arg(long)]
    model: String,
    /// Covariance blocks (header, rows, n=<int>; blank line between groups).
    #[arg(long, conflicts_with = "data", required_unless_present = "data")]
    cov: Option<PathBuf>,
    /// Raw CSV data; a `group` column splits multi-group data.
    #[arg(long)]
    data: Option<PathBuf>,
    /// gd, fisher or newton.
    #[arg(long, default_value = "fisher")]
    optimizer: String,
    #[arg(long)]
    tol: Option<f64>,
    #[arg(long)]
    max_iter: Option<usize>,
    /// Start from this θ (label = value lines, or a fit report JSON).
    #[arg(long)]
    start: Option<PathBuf>,
    /// Write fit.json and fit.txt here.
    #[arg(long)]
    out_dir: Option<PathBuf>,
    /// Print the JSON report instead of the text report.
    #[arg(long)]
    json: bool,
}

#[derive(Args)]
struct DiagnoseArgs {
    #[arg(long)]
    model: String,
    /// θ file (label = value lines) or a fit report JSON. Presets default
    /// to their population θ, other models to their start values.
    #[arg(long)]
    theta: Option<PathBuf>,
    /// δ of the split-ballot population θ.
    #[arg(long, default_value_t = 0.0)]
    delta: f64,
    /// Covariance blocks giving the group sizes for standard errors.
    #[arg(long)]
    cov: Option<PathBuf>,
    /// Total sample size for standard errors when no --cov is given.
    #[arg(long, default_value_t = 1000)]
    n: usize,
    /// Nullspace components below this are orthogonal to the deficiency.
    #[arg(long, default_value_t = 1e-8)]
    threshold: f64,
    #[arg(long)]
    out_dir: Option<PathBuf>,
    #[arg(long)]
    json: bool,
}

#[derive(Args)]
struct RankScanArgs {
    #[arg(long, default_value = "preset:sb-mtmm")]
    model: String,
    /// Comma-separated δ values.
    #[arg(long, default_value = "0,0.001,0.005,0.01,0.02,0.05,0.1,0.2,0.3")]
    grid: String,
    #[arg(long)]
    out_dir: Option<PathBuf>,
}

#[derive(Args)]
struct SimArgs {
    /// key = value config (experiment, n_grid, delta_grid, nsim, seed, optimizer, tol, max_iter, svg).
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    nsim: Option<usize>,
    /// Comma-separated n grid.
    #[arg(long)]
    n: Option<String>,
    /// Comma-separated δ grid.
    #[arg(long)]
    grid: Option<String>,
    #[arg(long)]
    optimizer: Option<String>,
    #[arg(long)]
    tol: Option<f64>,
    /// Also write the figure as SVG.
    #[arg(long)]
    svg: bool,
    #[arg(long, default_value = ".")]
    out_dir: PathBuf,
}

#[derive(Args)]
struct ValidateArgs {
    #[arg(long)]
    model: String,
}

/// An error with its exit code.
#[derive(Debug)]
pub struct Failure {
    pub code: u8,
    pub message: String,
}

impl Failure {
    pub fn usage(message: String) -> Self {
        Failure { code: 64, message }
    }

    pub fn data(message: String) -> Self {
        Failure { code: 65, message }
    }

    pub fn input(message: String) -> Self {
        Failure { code: 66, message }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 64 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    // the experiments run on rayon's global pool, sized from RAYON_NUM_THREADS
    if let Ok(t) = std::env::var("LATENT_RANK_THREADS") {
        match t.trim().parse::<usize>() {
            Ok(n) if n > 0 => std::env::set_var("RAYON_NUM_THREADS", n.to_string()),
            _ => {
                eprintln!("error: LATENT_RANK_THREADS must be a positive integer, got '{t}'");
                return ExitCode::from(64);
            }
        }
    }
    let result = match cli.command {
        Command::Fit(a) => commands::fit(a),
        Command::Diagnose(a) => commands::diagnose(a),
        Command::RankScan(a) => commands::rank_scan(a),
        Command::Simulate(a) => commands::simulate(a, None),
        Command::Shapiro(a) => commands::simulate(a, Some(latent_rank::simulation::Experiment::Shapiro)),
        Command::Validate(a) => commands::validate(a),
    };
    match result {
        Ok(code) => ExitCode::from(code),
        Err(f) => {
            eprintln!("error: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}
