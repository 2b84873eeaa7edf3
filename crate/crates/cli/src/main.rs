//! `kzm-ldt`: sweeps and figure data for kink statistics after linear
//! quenches of the transverse-field Ising chain.

// `!(x > 0)` style guards are used on purpose so that NaN is rejected.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

mod commands;
mod config;
mod error;
mod table;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use crate::config::ConfigFile;
use crate::error::CliError;

const CONFIG_HELP: &str = "\
Configuration files hold one `key = value` per line (`#` starts a comment).
Keys are the long flag names without dashes, e.g. `n-sites = 1000` or
`tau-q = 5,10,20`. Flags given on the command line override the file.

Exit codes: 0 success, 2 usage error, 3 numerical failure, 4 resource limit.";

#[derive(Debug, Parser)]
#[command(name = "kzm-ldt", version, about, after_help = CONFIG_HELP)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Per-mode excitation probabilities: `k,p_k_numeric,p_k_lz[,p_k_lz_renorm]`.
    Spectrum(CommonArgs),
    /// Density and cumulants over a list of quench times, with a log-log fit.
    Scaling(ScalingArgs),
    /// Analytic, finite-N and CLT rate functions on a density grid.
    RateFunction(RateArgs),
    /// Binomial rate function and tail bounds of the general scenario.
    Classical(ClassicalArgs),
    /// Exact diagonalization against the free-fermion pipeline (N ≤ 12).
    OracleCompare(OracleArgs),
}

#[derive(Debug, Clone, Args)]
pub struct CommonArgs {
    /// Even number of sites N.
    #[arg(long)]
    pub n_sites: Option<usize>,
    /// Quench time Jτ_Q/ħ, or a comma-separated list.
    #[arg(long)]
    pub tau_q: Option<String>,
    /// Long-range decay exponent (α ≥ 2); omit for the short-range chain.
    #[arg(long)]
    pub alpha: Option<f64>,
    /// Local error tolerance of the mode integrator.
    #[arg(long)]
    pub tol: Option<f64>,
    #[arg(long, allow_negative_numbers = true)]
    pub theta_min: Option<f64>,
    #[arg(long, allow_negative_numbers = true)]
    pub theta_max: Option<f64>,
    #[arg(long)]
    pub theta_steps: Option<usize>,
    /// Lower end of the scaled density grid ρ̄ = ρ/ρ_KZM.
    #[arg(long, allow_negative_numbers = true)]
    pub rho_min: Option<f64>,
    #[arg(long)]
    pub rho_max: Option<f64>,
    #[arg(long)]
    pub rho_steps: Option<usize>,
    /// Output CSV path; standard output when omitted.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// key = value configuration file.
    #[arg(long)]
    pub config: Option<PathBuf>,
}

#[derive(Debug, Clone, Args)]
pub struct ScalingArgs {
    #[command(flatten)]
    pub common: CommonArgs,
    /// Smallest quench time included in the slope fit.
    #[arg(long)]
    pub fit_min: Option<f64>,
    /// Largest quench time included in the slope fit.
    #[arg(long)]
    pub fit_max: Option<f64>,
}

#[derive(Debug, Clone, Args)]
pub struct RateArgs {
    #[command(flatten)]
    pub common: CommonArgs,
    /// Also write `−(1/N) ln P` of the exact distribution to this path.
    #[arg(long)]
    pub log_prob_out: Option<PathBuf>,
}

#[derive(Debug, Clone, Args)]
pub struct ClassicalArgs {
    #[command(flatten)]
    pub common: CommonArgs,
    /// Correlation-length exponent ν.
    #[arg(long)]
    pub nu: Option<f64>,
    /// Dynamic exponent z.
    #[arg(long)]
    pub z: Option<f64>,
    /// Spatial dimension d.
    #[arg(long)]
    pub d: Option<f64>,
    /// Correlation-length amplitude ξ₀.
    #[arg(long)]
    pub xi0: Option<f64>,
    /// Relaxation-time amplitude τ₀.
    #[arg(long)]
    pub tau0: Option<f64>,
    /// Order-one factor f in 𝒩 = V/(f ξ̂^d).
    #[arg(long)]
    pub f_factor: Option<f64>,
    /// Defect-formation probability p per merging point.
    #[arg(long)]
    pub p_success: Option<f64>,
    /// System volume V.
    #[arg(long)]
    pub volume: Option<f64>,
    /// Number of Bernoulli trials 𝒩 for the tail columns; defaults to the
    /// rounded domain count.
    #[arg(long)]
    pub trials: Option<usize>,
}

#[derive(Debug, Clone, Args)]
pub struct OracleArgs {
    #[command(flatten)]
    pub common: CommonArgs,
    /// Initial time step of the exact evolution (default τ_Q/10⁴).
    #[arg(long)]
    pub dt: Option<f64>,
}

fn load_config(common: &CommonArgs, extra: &[&str]) -> Result<ConfigFile, CliError> {
    let file = match &common.config {
        Some(path) => ConfigFile::load(path)?,
        None => ConfigFile::default(),
    };
    let mut keys = commands::COMMON_KEYS.to_vec();
    keys.extend_from_slice(extra);
    file.check_keys(&keys)?;
    Ok(file)
}

fn run(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Spectrum(a) => {
            let file = load_config(&a, &[])?;
            commands::spectrum(&commands::Common::resolve(&a, &file, "spectrum")?)
        }
        Command::Scaling(a) => {
            let file = load_config(&a.common, commands::SCALING_KEYS)?;
            commands::scaling(&a, &file)
        }
        Command::RateFunction(a) => {
            let file = load_config(&a.common, commands::RATE_KEYS)?;
            commands::rate_function(&a, &file)
        }
        Command::Classical(a) => {
            let file = load_config(&a.common, commands::CLASSICAL_KEYS)?;
            commands::classical(&a, &file)
        }
        Command::OracleCompare(a) => {
            let file = load_config(&a.common, commands::ORACLE_KEYS)?;
            commands::oracle_compare(&a, &file)
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => e.exit(),
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("kzm-ldt: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
