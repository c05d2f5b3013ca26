//! soslift: generate instances, build degree-2 seeds, lift them to degree-4
//! pseudomoments and verify the result.

mod artifacts;
mod commands;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde::Serialize;
use soslift_core::Mode;

#[derive(Parser, Debug, Serialize)]
#[command(name = "soslift", version, about = "Degree-4 SoS lifting pipelines")]
pub struct Cli {
    /// Directory holding the pipeline artifacts.
    #[arg(long, global = true, default_value = ".")]
    pub dir: PathBuf,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug, Serialize)]
#[serde(tag = "subcommand", rename_all = "kebab-case")]
pub enum Command {
    /// Sample a GOE matrix.
    GenGoe(GenArgs),
    /// Sample a random d-regular graph.
    GenRegular(GenArgs),
    /// Sample a Gaussian n×d matrix with N(0, 1/d) entries.
    GenSubspace(GenArgs),
    /// Top-k projector seed for a GOE instance.
    SeedSk(SeedSkArgs),
    /// Gaussian-wave seed for a regular graph.
    SeedMaxcut(SeedMaxcutArgs),
    /// Damped projection seed for a subspace instance.
    SeedBvs(SeedBvsArgs),
    /// Lift a degree-2 seed to a degree-4 moment matrix.
    Lift(LiftArgs),
    /// Check the SoS_4 constraints of a lifted solution.
    Verify(VerifyArgs),
    /// Error-norm certificate table for a degree-2 seed.
    Certify(CertifyArgs),
    /// Finite-κ convergence study written as CSV.
    Converge(ConvergeArgs),
    /// Print pseudocalibration coefficients.
    PseudocalDemo(PseudocalArgs),
    /// Collect the stage reports into one summary.
    Report(ReportArgs),
}

#[derive(Args, Debug, Serialize)]
pub struct GenArgs {
    #[arg(long)]
    pub n: usize,
    /// Degree (gen-regular) or subspace dimension (gen-subspace).
    #[arg(long)]
    pub d: Option<usize>,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value = "instance.json")]
    pub out: PathBuf,
}

#[derive(Args, Debug, Serialize)]
pub struct SeedSkArgs {
    #[arg(long, default_value = "instance.json")]
    pub instance: PathBuf,
    /// Projector rank, ⌈n^0.7⌉ by default.
    #[arg(long)]
    pub k: Option<usize>,
    /// Damping γ; chosen automatically when absent.
    #[arg(long)]
    pub gamma: Option<f64>,
    #[arg(long, default_value = "seed.json")]
    pub out: PathBuf,
}

#[derive(Args, Debug, Serialize)]
pub struct SeedMaxcutArgs {
    #[arg(long, default_value = "instance.json")]
    pub instance: PathBuf,
    #[arg(long)]
    pub eps: f64,
    #[arg(long, default_value = "seed.json")]
    pub out: PathBuf,
}

#[derive(Args, Debug, Serialize)]
pub struct SeedBvsArgs {
    #[arg(long, default_value = "instance.json")]
    pub instance: PathBuf,
    #[arg(long)]
    pub gamma: Option<f64>,
    #[arg(long, default_value = "seed.json")]
    pub out: PathBuf,
}

#[derive(Args, Debug, Serialize)]
pub struct LiftArgs {
    #[arg(long, default_value = "seed.json")]
    pub input: PathBuf,
    #[arg(long, default_value_t = Mode::Certified)]
    pub mode: Mode,
    /// Instance used for the objective lines; skipped when the file is absent.
    #[arg(long, default_value = "instance.json")]
    pub instance: PathBuf,
    /// Relative tolerance of the objective bound check.
    #[arg(long, default_value_t = 1e-6)]
    pub bound_tol: f64,
    #[arg(long, default_value = "lifted.json")]
    pub out: PathBuf,
}

#[derive(Args, Debug, Serialize)]
pub struct VerifyArgs {
    #[arg(long, default_value = "lifted.json")]
    pub input: PathBuf,
    /// PSD and consistency tolerance.
    #[arg(long, default_value_t = soslift_core::moments::TOL_PSD)]
    pub tol: f64,
    /// Largest n for which the dense moment matrix is formed.
    #[arg(long, default_value_t = 60)]
    pub dense_max: usize,
    #[arg(long, default_value = "verify-report.json")]
    pub out: PathBuf,
}

#[derive(Args, Debug, Serialize)]
pub struct CertifyArgs {
    #[arg(long, default_value = "seed.json")]
    pub input: PathBuf,
    /// Largest n for which the error components are formed numerically.
    #[arg(long, default_value_t = 60)]
    pub numeric_max: usize,
    #[arg(long, default_value = "certify.json")]
    pub out: PathBuf,
}

#[derive(Args, Debug, Serialize)]
pub struct ConvergeArgs {
    #[arg(long)]
    pub n: usize,
    #[arg(long, value_delimiter = ',', default_value = "8,12,16,20")]
    pub kappas: Vec<usize>,
    /// Moment subset; {0, 1} by default.
    #[arg(long, value_delimiter = ',', default_value = "0,1")]
    pub subset: Vec<usize>,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value = "converge.csv")]
    pub out: PathBuf,
}

#[derive(Args, Debug, Serialize)]
pub struct PseudocalArgs {
    #[arg(long, default_value_t = 4)]
    pub d: usize,
    /// Exponent matrix, rows separated by ';' and entries by ',' (e.g. "2,1;0,1").
    #[arg(long)]
    pub alpha: Option<String>,
    /// Rows in L.
    #[arg(long, value_delimiter = ',')]
    pub l: Vec<usize>,
}

#[derive(Args, Debug, Serialize)]
pub struct ReportArgs {
    #[arg(long, default_value = "report.json")]
    pub out: PathBuf,
}

/// A check ran and failed; exits with status 2.
#[derive(Debug)]
pub struct VerificationFailed(pub String);

impl std::fmt::Display for VerificationFailed {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "verification failed: {}", self.0)
    }
}

impl std::error::Error for VerificationFailed {}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match commands::run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) if e.is::<VerificationFailed>() => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}
