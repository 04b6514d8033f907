use serde::Serialize;

use dcopula::datasets::occupational;
use dcopula::dependence::{summary, DependenceSummary};
use dcopula::estimators::{fit_copula, pseudo_loglik, Estimator};
use dcopula::families::{DiscretizedFamily, Family};
use dcopula::gof::{gof_test, GofMethod, GroupingMatrix};
use dcopula::harness::{build_scenario, run_estimation_experiment, run_gof_experiment, EstimationReport, GofReport};
use dcopula::io::{read_counts_csv, read_grouping_csv};
use dcopula::ipfp::{IpfpConfig, IpfpSummary};
use dcopula::nonparametric::empirical_copula;
use dcopula::pmf::ContingencyTable;
use dcopula::Result;

use crate::args::{Dataset, FitArgs, GofArgs, InputArgs, Mode, SimulateArgs};
use crate::render::{num, opt, Render, SCHEMA_VERSION};

fn load(input: &InputArgs) -> Result<ContingencyTable> {
    match (&input.input, input.dataset) {
        (Some(path), _) => read_counts_csv(path),
        (None, Some(Dataset::Occupational)) => Ok(occupational()),
        (None, None) => unreachable!("clap requires one input"),
    }
}

fn grouping(path: Option<&std::path::Path>, r: usize, s: usize) -> Result<GroupingMatrix> {
    match path {
        Some(p) => read_grouping_csv(p),
        None => Ok(GroupingMatrix::identity(r, s)),
    }
}

fn grid(rows: &[Vec<f64>]) -> Vec<Vec<String>> {
    rows.iter().map(|r| r.iter().map(|x| num(*x)).collect()).collect()
}

fn show_grid(rows: &[Vec<f64>]) -> String {
    rows.iter().map(|r| r.iter().map(|x| format!("{x:>10.6}")).collect::<Vec<_>>().join(" ") + "\n").collect()
}

#[derive(Debug, Serialize)]
pub struct DecomposeOutput {
    pub schema_version: u32,
    pub command: &'static str,
    pub r: usize,
    pub s: usize,
    pub n: u64,
    pub hat_p: Vec<Vec<f64>>,
    pub smoothed_p: Vec<Vec<f64>>,
    pub empirical_copula: Vec<Vec<f64>>,
    pub row_margin: Vec<f64>,
    pub col_margin: Vec<f64>,
    pub dependence: DependenceSummary,
    pub ipfp: IpfpSummary,
}

pub fn cmd_decompose(input: &InputArgs, cfg: &IpfpConfig) -> Result<DecomposeOutput> {
    let t = load(input)?;
    let est = empirical_copula(&t, cfg)?;
    let (a, b) = est.hat_p.margins();
    Ok(DecomposeOutput {
        schema_version: SCHEMA_VERSION,
        command: "decompose",
        r: t.r(),
        s: t.s(),
        n: t.n(),
        hat_p: est.hat_p.to_rows(),
        smoothed_p: est.smoothed_p.to_rows(),
        dependence: summary(&est.empirical_copula)?,
        empirical_copula: est.empirical_copula.to_rows(),
        row_margin: a.values().to_vec(),
        col_margin: b.values().to_vec(),
        ipfp: est.ipfp,
    })
}

impl Render for DecomposeOutput {
    /// The copula grid alone.
    fn csv(&self) -> Vec<Vec<String>> {
        grid(&self.empirical_copula)
    }

    fn pretty(&self) -> String {
        format!(
            "{}x{} table, n = {}\nempirical copula p.m.f.:\n{}row margin: {:?}\ncolumn margin: {:?}\nrho {:.4}  gamma {:.4}  tau_b {:.4}\nIPFP: {} iterations, converged {}\n",
            self.r,
            self.s,
            self.n,
            show_grid(&self.empirical_copula),
            self.row_margin,
            self.col_margin,
            self.dependence.rho,
            self.dependence.gamma,
            self.dependence.tau_b,
            self.ipfp.iterations,
            self.ipfp.converged
        )
    }
}

#[derive(Debug, Serialize)]
pub struct MeasuresOutput {
    pub schema_version: u32,
    pub command: &'static str,
    pub n: u64,
    pub rho: f64,
    pub gamma: f64,
    pub tau_b: f64,
    pub kappa: f64,
    pub delta: f64,
    pub ipfp: IpfpSummary,
}

pub fn cmd_measures(input: &InputArgs, cfg: &IpfpConfig) -> Result<MeasuresOutput> {
    let t = load(input)?;
    let est = empirical_copula(&t, cfg)?;
    let d = summary(&est.empirical_copula)?;
    Ok(MeasuresOutput {
        schema_version: SCHEMA_VERSION,
        command: "measures",
        n: t.n(),
        rho: d.rho,
        gamma: d.gamma,
        tau_b: d.tau_b,
        kappa: d.kappa,
        delta: d.delta,
        ipfp: est.ipfp,
    })
}

impl Render for MeasuresOutput {
    fn csv(&self) -> Vec<Vec<String>> {
        vec![
            ["rho", "gamma", "tau_b", "kappa", "delta"].map(String::from).to_vec(),
            [self.rho, self.gamma, self.tau_b, self.kappa, self.delta].map(num).to_vec(),
        ]
    }

    fn pretty(&self) -> String {
        format!(
            "n = {}\nrho    {:.4}\ngamma  {:.4}\ntau_b  {:.4}\nkappa  {:.4}\ndelta  {:.4}\n",
            self.n, self.rho, self.gamma, self.tau_b, self.kappa, self.delta
        )
    }
}

#[derive(Debug, Serialize)]
pub struct FitDiagnostics {
    pub iterations: usize,
    pub converged: bool,
    pub at_boundary: bool,
    pub domain: (f64, f64),
    pub ipfp: IpfpSummary,
}

#[derive(Debug, Serialize)]
pub struct FitOutput {
    pub schema_version: u32,
    pub command: &'static str,
    pub family: Family,
    pub estimator: Estimator,
    pub theta: f64,
    /// `−Σ u^[n] log u^[θ̂]`; absent when `u^[θ̂]` has an empty cell.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub neg_pll_per_n: Option<f64>,
    pub diagnostics: FitDiagnostics,
}

pub fn cmd_fit(args: &FitArgs, cfg: &IpfpConfig) -> Result<FitOutput> {
    let t = load(&args.input)?;
    let fam = DiscretizedFamily::new(args.family, t.r(), t.s())?;
    let est = empirical_copula(&t, cfg)?;
    let fit = fit_copula(&est.empirical_copula, &fam, args.estimator)?;
    Ok(FitOutput {
        schema_version: SCHEMA_VERSION,
        command: "fit",
        family: args.family,
        estimator: args.estimator,
        theta: fit.theta_hat,
        neg_pll_per_n: pseudo_loglik(&est.empirical_copula, &fam, fit.theta_hat).ok().map(|l| -l),
        diagnostics: FitDiagnostics {
            iterations: fit.iterations,
            converged: fit.converged,
            at_boundary: fit.at_boundary,
            domain: args.family.clipped_domain(),
            ipfp: est.ipfp,
        },
    })
}

impl Render for FitOutput {
    fn csv(&self) -> Vec<Vec<String>> {
        vec![
            ["family", "estimator", "theta", "neg_pll_per_n"].map(String::from).to_vec(),
            vec![self.family.name().into(), self.estimator.name().into(), num(self.theta), opt(self.neg_pll_per_n)],
        ]
    }

    fn pretty(&self) -> String {
        let pll = self.neg_pll_per_n.map_or_else(|| "n/a".into(), |x| format!("{x:.4}"));
        let mut s = format!(
            "{} ({}): theta = {:.4}, -L/n = {pll}\n",
            self.family.name(),
            self.estimator.name(),
            self.theta
        );
        if self.diagnostics.at_boundary {
            s.push_str("estimate is at the end of the parameter range\n");
        }
        s
    }
}

#[derive(Debug, Serialize)]
pub struct GofOutput {
    pub schema_version: u32,
    pub command: &'static str,
    pub family: Family,
    pub estimator: Estimator,
    pub method: GofMethod,
    pub theta: f64,
    pub statistic: f64,
    pub q: usize,
    pub p_value: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub eigenvalues: Option<Vec<f64>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub n_replicates: Option<usize>,
    #[serde(rename = "M")]
    pub m: usize,
    pub seed: u64,
    pub issues: usize,
}

pub fn cmd_gof(args: &GofArgs, seed: u64, cfg: &IpfpConfig) -> Result<GofOutput> {
    let t = load(&args.input)?;
    let fam = DiscretizedFamily::new(args.family, t.r(), t.s())?;
    let g = grouping(args.groups.as_deref(), t.r(), t.s())?;
    let res = gof_test(&t, &fam, args.estimator, args.method, &g, args.m, seed, cfg)?;
    let bootstrap = res.method == GofMethod::Bootstrap;
    Ok(GofOutput {
        schema_version: SCHEMA_VERSION,
        command: "gof",
        family: res.family,
        estimator: res.estimator,
        method: res.method,
        theta: res.theta_hat,
        statistic: res.statistic,
        q: res.q,
        p_value: res.p_value,
        n_replicates: bootstrap.then(|| res.n_replicates()),
        eigenvalues: res.eigenvalues,
        m: res.m,
        seed,
        issues: res.numerical_issues,
    })
}

impl Render for GofOutput {
    fn csv(&self) -> Vec<Vec<String>> {
        vec![
            ["family", "estimator", "method", "theta", "statistic", "q", "p_value"].map(String::from).to_vec(),
            vec![
                self.family.name().into(),
                self.estimator.name().into(),
                self.method.name().into(),
                num(self.theta),
                num(self.statistic),
                self.q.to_string(),
                num(self.p_value),
            ],
        ]
    }

    fn pretty(&self) -> String {
        format!(
            "{} ({}, {}): theta = {:.4}, S_G = {:.1} on {} groups, p = {:.4}\n",
            self.family.name(),
            self.estimator.name(),
            self.method.name(),
            self.theta,
            self.statistic,
            self.q,
            self.p_value
        )
    }
}

#[derive(Debug, Serialize)]
#[serde(untagged)]
pub enum SimulationReport {
    Estimation(EstimationReport),
    Gof(GofReport),
}

#[derive(Debug, Serialize)]
pub struct SimulateOutput {
    pub schema_version: u32,
    pub command: &'static str,
    pub mode: &'static str,
    pub report: SimulationReport,
}

pub fn cmd_simulate(args: &SimulateArgs, seed: u64, cfg: &IpfpConfig) -> Result<SimulateOutput> {
    let sc = build_scenario(args.family, args.tau, args.margins, args.r, args.s)?;
    let (mode, report) = match args.mode {
        Mode::Estimation => {
            ("estimation", SimulationReport::Estimation(run_estimation_experiment(&sc, args.n, args.reps, seed, cfg)?))
        }
        Mode::Gof => {
            let g = grouping(args.groups.as_deref(), args.r, args.s)?;
            let hyp = args.hyp_family.unwrap_or(args.family);
            let rep = run_gof_experiment(&sc, hyp, args.estimator, args.n, args.reps, &g, args.m, seed, cfg)?;
            ("gof", SimulationReport::Gof(rep))
        }
    };
    Ok(SimulateOutput { schema_version: SCHEMA_VERSION, command: "simulate", mode, report })
}

impl Render for SimulateOutput {
    /// One row per estimator (estimation) or one row per test (gof), with
    /// failed fits as `ni` and capped IPFP runs as `U`.
    fn csv(&self) -> Vec<Vec<String>> {
        match &self.report {
            SimulationReport::Estimation(r) => {
                let mut rows = vec![["family", "tau", "margins", "r", "s", "n", "estimator", "bias", "mse", "ni", "U"]
                    .map(String::from)
                    .to_vec()];
                for e in &r.estimators {
                    rows.push(vec![
                        r.family.name().into(),
                        num(r.tau),
                        r.margins.to_string(),
                        r.r.to_string(),
                        r.s.to_string(),
                        r.n.to_string(),
                        e.estimator.name().into(),
                        num(e.bias),
                        num(e.mse),
                        e.fit_issues.to_string(),
                        r.ipfp_failures.to_string(),
                    ]);
                }
                rows
            }
            SimulationReport::Gof(r) => vec![
                ["family", "hypothesized", "estimator", "tau", "margins", "r", "s", "q", "n", "rejection_rate", "ni", "U"]
                    .map(String::from)
                    .to_vec(),
                vec![
                    r.family.name().into(),
                    r.hypothesized.name().into(),
                    r.estimator.name().into(),
                    num(r.tau),
                    r.margins.to_string(),
                    r.r.to_string(),
                    r.s.to_string(),
                    r.q.to_string(),
                    r.n.to_string(),
                    num(r.rejection_rate),
                    r.issues.to_string(),
                    r.ipfp_failures.to_string(),
                ],
            ],
        }
    }

    fn pretty(&self) -> String {
        match &self.report {
            SimulationReport::Estimation(r) => {
                let mut s = format!(
                    "{} tau={} margins={} ({}x{}) n={} reps={} theta0={:.4} U={}\n",
                    r.family.name(),
                    r.tau,
                    r.margins,
                    r.r,
                    r.s,
                    r.n,
                    r.reps,
                    r.theta0,
                    r.ipfp_failures
                );
                for e in &r.estimators {
                    s.push_str(&format!(
                        "  {:<5} bias {:>8.3}  mse {:>8.3}  ni {}\n",
                        e.estimator.name(),
                        e.bias,
                        e.mse,
                        e.fit_issues
                    ));
                }
                s
            }
            SimulationReport::Gof(r) => format!(
                "{} data, {} hypothesized ({}), tau={} margins={} ({}x{}) q={} n={} reps={}: rejected {:.1}% (ni {}, U {})\n",
                r.family.name(),
                r.hypothesized.name(),
                r.estimator.name(),
                r.tau,
                r.margins,
                r.r,
                r.s,
                r.q,
                r.n,
                r.reps,
                r.rejection_rate,
                r.issues,
                r.ipfp_failures
            ),
        }
    }
}
