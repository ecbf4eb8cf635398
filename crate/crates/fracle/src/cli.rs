//! Argument parsing and dispatch.

use std::ffi::OsString;
use std::path::PathBuf;

use clap::{ArgAction, Args, Parser, Subcommand, ValueEnum};

use crate::{commands, CliError, EXIT_INVALID, EXIT_OK};

#[derive(Debug, Parser)]
#[command(name = "fracle", version, about = "Fractional Hamiltonian elliptic systems: discretize, solve, verify")]
pub struct Cli {
    /// Seed for every sampling step; overrides the config file when given.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Admissible (p, q) membership grid as CSV, optionally as SVG.
    Region(RegionArgs),
    /// Solve the discrete system described by a config file.
    Solve(SolveArgs),
    /// Residuals of a stored solution.
    Verify(VerifyArgs),
    /// Eigenvalue table of a discrete operator.
    Spectrum(SpectrumArgs),
    /// Sampled growth-condition audit of a Hamiltonian.
    AuditHamiltonian(AuditArgs),
    /// Sampled linking geometry and invertibility checks.
    Linking(LinkingArgs),
}

fn parse_pair(s: &str) -> Result<(f64, f64), String> {
    let (a, b) = s.split_once(',').ok_or_else(|| format!("expected 'a,b', got '{s}'"))?;
    let a: f64 = a.trim().parse().map_err(|e| format!("'{a}': {e}"))?;
    let b: f64 = b.trim().parse().map_err(|e| format!("'{b}': {e}"))?;
    Ok((a, b))
}

#[derive(Debug, Args)]
pub struct RegionArgs {
    #[arg(long)]
    pub n: usize,
    #[arg(long)]
    pub s: f64,
    #[arg(long, value_parser = parse_pair, default_value = "2.01,8")]
    pub p_range: (f64, f64),
    #[arg(long, value_parser = parse_pair, default_value = "2.01,8")]
    pub q_range: (f64, f64),
    #[arg(long, default_value_t = 200)]
    pub resolution: usize,
    #[arg(long, default_value = "region.csv")]
    pub out: PathBuf,
    #[arg(long)]
    pub svg: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct SolveArgs {
    #[arg(long)]
    pub config: PathBuf,
    /// Output directory; defaults to the one named in the config.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct VerifyArgs {
    #[arg(long)]
    pub solution: PathBuf,
    #[arg(long)]
    pub config: PathBuf,
    /// Report path; printed to stdout when absent.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
#[value(rename_all = "snake_case")]
pub enum SpectrumKind {
    Local,
    SpectralFractional,
    IntegralFractional,
}

#[derive(Debug, Args)]
pub struct SpectrumArgs {
    #[arg(long, value_enum)]
    pub kind: SpectrumKind,
    /// Order for the fractional kinds.
    #[arg(long)]
    pub s: Option<f64>,
    /// One `lo,hi` pair per axis, repeated for 2D.
    #[arg(long, value_parser = parse_pair, allow_hyphen_values = true, action = ArgAction::Append, default_value = "0,1")]
    pub extent: Vec<(f64, f64)>,
    /// Interior nodes per axis, in the order of `--extent`.
    #[arg(long, action = ArgAction::Append, required = true)]
    pub n: Vec<usize>,
    /// Number of eigenvalues in the table; all of them when absent.
    #[arg(long)]
    pub count: Option<usize>,
    #[arg(long, default_value = "spectrum.csv")]
    pub out: PathBuf,
    /// JSON with the orthonormality check and, with --refine, the self-convergence table.
    #[arg(long)]
    pub summary: Option<PathBuf>,
    /// Binary dump of the eigenvectors (aux vector: eigenvalues).
    #[arg(long)]
    pub eigensystem: Option<PathBuf>,
    /// Binary dump of the stiffness matrix (aux vector: quadrature mass).
    #[arg(long)]
    pub matrix: Option<PathBuf>,
    /// Compare against the grid with 2N+1 interior nodes per axis.
    #[arg(long)]
    pub refine: bool,
}

#[derive(Debug, Args)]
pub struct AuditArgs {
    #[arg(long)]
    pub hamiltonian: String,
    #[arg(long, default_value_t = 10.0)]
    pub half_width: f64,
    #[arg(long, default_value_t = 10_000)]
    pub samples: usize,
    #[arg(long, default_value = "audit.json")]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct LinkingArgs {
    #[arg(long)]
    pub config: PathBuf,
    #[arg(long, default_value_t = 0.1)]
    pub rho: f64,
    #[arg(long, default_value_t = 4.0)]
    pub sigma: f64,
    /// Outer radius `M`; `auto` uses `2 sigma ||z+|| + rho`.
    #[arg(long, default_value = "auto")]
    pub big_m: String,
    /// Zero-based eigenmode spanning the `E+` direction.
    #[arg(long, default_value_t = 0)]
    pub mode: usize,
    #[arg(long, default_value_t = 1e-6)]
    pub delta: f64,
    #[arg(long, default_value_t = 64)]
    pub samples: usize,
    #[arg(long, value_delimiter = ',', default_value = "0,1")]
    pub omega: Vec<f64>,
    #[arg(long, default_value = "linking.json")]
    pub out: PathBuf,
}

/// Sizes the rayon pool from `FRACLE_THREADS`.
fn configure_threads() -> Result<(), CliError> {
    let Ok(raw) = std::env::var("FRACLE_THREADS") else {
        return Ok(());
    };
    let n: usize = raw
        .trim()
        .parse()
        .ok()
        .filter(|&n| n > 0)
        .ok_or_else(|| CliError::Invalid(format!("FRACLE_THREADS = '{raw}' is not a positive integer")))?;
    // a pool that already exists keeps its size
    let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    Ok(())
}

fn dispatch(cli: Cli) -> Result<(), CliError> {
    configure_threads()?;
    let seed = cli.seed;
    match cli.command {
        Command::Region(a) => commands::region(&a),
        Command::Solve(a) => commands::solve(&a),
        Command::Verify(a) => commands::verify(&a),
        Command::Spectrum(a) => commands::spectrum(&a),
        Command::AuditHamiltonian(a) => commands::audit(&a, seed.unwrap_or(0)),
        Command::Linking(a) => commands::linking(&a, seed),
    }
}

/// Parses `args` (program name first) and runs the command; returns the exit code.
pub fn run<I, T>(args: I) -> u8
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_INVALID } else { EXIT_OK };
        }
    };
    match dispatch(cli) {
        Ok(()) => EXIT_OK,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}
