use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use dcopula::estimators::Estimator;
use dcopula::families::Family;
use dcopula::gof::GofMethod;
use dcopula::harness::Margins;

#[derive(Debug, Parser)]
#[command(name = "dcopula", version, about = "Copula p.m.f.s of contingency tables", propagate_version = true)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,

    /// IPFP stopping tolerance.
    #[arg(long, global = true, env = "DCOPULA_EPSILON", default_value_t = 1e-10)]
    pub epsilon: f64,

    /// IPFP iteration cap.
    #[arg(long, global = true, env = "DCOPULA_MAX_ITERATIONS", default_value_t = 1000)]
    pub max_iterations: usize,

    /// Root seed for every random draw.
    #[arg(long, global = true, env = "DCOPULA_SEED", default_value_t = 1)]
    pub seed: u64,

    #[arg(long, global = true, value_enum, default_value_t = Format::Json)]
    pub format: Format,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Json,
    Csv,
    Pretty,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Raw, smoothed and copula p.m.f.s of a table, with its margins.
    Decompose(InputArgs),
    /// Yule's coefficient, gamma and tau_b of the empirical copula p.m.f.
    Measures(InputArgs),
    /// Fit a parametric family.
    Fit(FitArgs),
    /// Goodness-of-fit test of a family.
    Gof(GofArgs),
    /// Monte Carlo experiments.
    Simulate(SimulateArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Dataset {
    Occupational,
}

#[derive(Debug, Args)]
#[group(required = true, multiple = false)]
pub struct InputArgs {
    /// Counts CSV: one row per line, no header.
    #[arg(long)]
    pub input: Option<PathBuf>,

    /// A bundled table instead of a file.
    #[arg(long, value_enum)]
    pub dataset: Option<Dataset>,
}

#[derive(Debug, Args)]
pub struct FitArgs {
    #[command(flatten)]
    pub input: InputArgs,

    #[arg(long, value_parser = parse_family)]
    pub family: Family,

    #[arg(long, value_parser = parse_estimator)]
    pub estimator: Estimator,
}

#[derive(Debug, Args)]
pub struct GofArgs {
    #[command(flatten)]
    pub input: InputArgs,

    #[arg(long, value_parser = parse_family)]
    pub family: Family,

    #[arg(long, value_parser = parse_gof_estimator, default_value = "rho")]
    pub estimator: Estimator,

    #[arg(long, value_parser = parse_method, default_value = "asymptotic")]
    pub method: GofMethod,

    /// Labels CSV with one integer per cell; 0 leaves a cell ungrouped.
    #[arg(long)]
    pub groups: Option<PathBuf>,

    /// Mixture draws or bootstrap replicates.
    #[arg(long = "M", default_value_t = 10_000)]
    pub m: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Mode {
    Estimation,
    Gof,
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    #[arg(long, value_enum)]
    pub mode: Mode,

    /// Family generating the data.
    #[arg(long, value_parser = parse_family)]
    pub family: Family,

    /// Family under test; defaults to the generating family.
    #[arg(long, value_parser = parse_family)]
    pub hyp_family: Option<Family>,

    #[arg(long, value_parser = parse_gof_estimator, default_value = "rho")]
    pub estimator: Estimator,

    /// Kendall's tau of the continuous copula.
    #[arg(long, allow_negative_numbers = true)]
    pub tau: f64,

    /// 1 uniform, 2 linear, 3 binomial.
    #[arg(long, value_parser = parse_margins, default_value = "1")]
    pub margins: Margins,

    #[arg(long = "r")]
    pub r: usize,

    #[arg(long = "s")]
    pub s: usize,

    #[arg(long = "n", default_value_t = 1000)]
    pub n: u64,

    #[arg(long, default_value_t = 1000)]
    pub reps: usize,

    #[arg(long = "M", default_value_t = 1000)]
    pub m: usize,

    #[arg(long)]
    pub groups: Option<PathBuf>,
}

fn parse_family(s: &str) -> Result<Family, String> {
    Family::from_name(s).ok_or_else(|| {
        let names: Vec<_> = Family::ALL.iter().map(|f| f.name()).collect();
        format!("unknown family '{s}'; expected one of: {}", names.join(", "))
    })
}

fn parse_estimator(s: &str) -> Result<Estimator, String> {
    Estimator::from_name(s).ok_or_else(|| format!("unknown estimator '{s}'; expected one of: rho, gamma, tau, mpl"))
}

fn parse_gof_estimator(s: &str) -> Result<Estimator, String> {
    match parse_estimator(s)? {
        e @ (Estimator::Rho | Estimator::Mpl) => Ok(e),
        _ => Err(format!("estimator '{s}' is not available for the test; expected rho or mpl")),
    }
}

fn parse_method(s: &str) -> Result<GofMethod, String> {
    GofMethod::from_name(s).ok_or_else(|| format!("unknown method '{s}'; expected asymptotic or bootstrap"))
}

fn parse_margins(s: &str) -> Result<Margins, String> {
    s.parse::<u8>().ok().and_then(Margins::from_index).ok_or_else(|| format!("margins must be 1, 2 or 3, got '{s}'"))
}
