//! Monte Carlo experiments: bias/MSE of the four estimators and rejection
//! rates of the asymptotic goodness-of-fit test.
//!
//! Replicate `l` samples from stream `(seed, l)`; the mixture draws of its
//! test use root seed `child_seed(seed, l)`. Replicates run in parallel and
//! are reduced in index order, so reports do not depend on the thread count.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::estimators::{fit_copula, Estimator};
use crate::families::{DiscretizedFamily, Family};
use crate::gof::{asymptotic_pvalue, GroupingMatrix};
use crate::ipfp::{sklar_compose, IpfpConfig};
use crate::nonparametric::empirical_copula;
use crate::numerics::{CategoricalSampler, RngStream};
use crate::pmf::{BivariatePmf, ContingencyTable, MarginalPmf};

/// Rejection threshold for the test.
pub const LEVEL: f64 = 0.05;

/// Marginal scenarios: uniform, linear `k / (r(r+1)/2)`, binomial(r−1, 1/2).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Margins {
    Uniform = 1,
    Linear = 2,
    Binomial = 3,
}

impl Margins {
    pub fn from_index(k: u8) -> Option<Self> {
        match k {
            1 => Some(Margins::Uniform),
            2 => Some(Margins::Linear),
            3 => Some(Margins::Binomial),
            _ => None,
        }
    }

    pub fn index(self) -> u8 {
        self as u8
    }

    pub fn marginal(self, k: usize) -> MarginalPmf {
        match self {
            Margins::Uniform => MarginalPmf::uniform(k),
            Margins::Linear => MarginalPmf::normalized((1..=k).map(|i| i as f64).collect()).expect("positive"),
            Margins::Binomial => {
                let mut w = vec![1.0; k];
                for i in 1..k {
                    w[i] = w[i - 1] * (k - i) as f64 / i as f64;
                }
                MarginalPmf::normalized(w).expect("positive")
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    pub family: Family,
    /// Kendall's tau of the continuous copula.
    pub tau: f64,
    pub theta: f64,
    pub margins: Margins,
    pub r: usize,
    pub s: usize,
    pub copula: BivariatePmf,
    pub generating_pmf: BivariatePmf,
}

/// `p = I_{a,b}(u^[θ])` with `θ` chosen from the continuous copula's tau.
pub fn build_scenario(family: Family, tau: f64, margins: Margins, r: usize, s: usize) -> Result<Scenario> {
    let theta = family.tau_to_theta(tau)?;
    let copula = DiscretizedFamily::new(family, r, s)?.discretize(theta)?;
    let generating_pmf = match margins {
        Margins::Uniform => copula.clone(),
        _ => {
            let (a, b) = (margins.marginal(r), margins.marginal(s));
            let res = sklar_compose(&copula, &a, &b, &IpfpConfig::default())?;
            let (rows, cols) = (res.fitted.row_sums(), res.fitted.col_sums());
            let gap = rows.iter().zip(a.values()).chain(cols.iter().zip(b.values()));
            if !res.converged || gap.map(|(x, y)| (x - y).abs()).fold(0.0, f64::max) > 1e-9 {
                return Err(Error::Numerical("scenario composition did not reach its margins".into()));
            }
            res.fitted
        }
    };
    Ok(Scenario { family, tau, theta, margins, r, s, copula, generating_pmf })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EstimatorSummary {
    pub estimator: Estimator,
    pub bias: f64,
    pub mse: f64,
    /// Replicates that produced an estimate.
    pub n_ok: usize,
    /// Replicates whose fit failed (column `ni`).
    pub fit_issues: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EstimationReport {
    pub family: Family,
    pub tau: f64,
    pub theta0: f64,
    pub margins: u8,
    pub r: usize,
    pub s: usize,
    pub n: u64,
    pub reps: usize,
    pub seed: u64,
    /// Replicates where IPFP hit its iteration cap (column `U`); their last
    /// iterate is still used.
    pub ipfp_failures: usize,
    pub estimators: Vec<EstimatorSummary>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GofReport {
    pub family: Family,
    pub hypothesized: Family,
    pub estimator: Estimator,
    pub tau: f64,
    pub margins: u8,
    pub r: usize,
    pub s: usize,
    pub q: usize,
    pub n: u64,
    pub reps: usize,
    pub m: usize,
    pub seed: u64,
    /// Percentage of completed replicates with p-value below [`LEVEL`].
    pub rejection_rate: f64,
    pub rejections: usize,
    pub ipfp_failures: usize,
    /// Replicates where fitting or the eigen-decomposition failed; they are
    /// excluded from the rejection rate.
    pub issues: usize,
}

fn draw_table(sampler: &CategoricalSampler, sc: &Scenario, n: u64, seed: u64, l: usize) -> ContingencyTable {
    let mut stream = RngStream::new(seed, l as u64);
    ContingencyTable::new(sc.r, sc.s, sampler.sample_counts(&mut stream, n)).expect("n ≥ 1")
}

fn check_run(n: u64, reps: usize) -> Result<()> {
    if n == 0 || reps == 0 {
        return Err(Error::Precondition("n and reps must be positive".into()));
    }
    Ok(())
}

/// Bias and MSE of all four estimators over `reps` samples of size `n`.
pub fn run_estimation_experiment(sc: &Scenario, n: u64, reps: usize, seed: u64, cfg: &IpfpConfig) -> Result<EstimationReport> {
    check_run(n, reps)?;
    let fam = DiscretizedFamily::new(sc.family, sc.r, sc.s)?;
    let sampler = CategoricalSampler::new(&sc.generating_pmf);
    let outcomes: Vec<(bool, [Option<f64>; 4])> = (0..reps)
        .into_par_iter()
        .map(|l| {
            let t = draw_table(&sampler, sc, n, seed, l);
            let Ok(est) = empirical_copula(&t, cfg) else {
                return (false, [None; 4]);
            };
            let thetas = Estimator::ALL.map(|e| fit_copula(&est.empirical_copula, &fam, e).ok().map(|f| f.theta_hat));
            (est.ipfp.converged, thetas)
        })
        .collect();
    let estimators = Estimator::ALL
        .iter()
        .enumerate()
        .map(|(k, &estimator)| {
            let ok: Vec<f64> = outcomes.iter().filter_map(|o| o.1[k]).collect();
            let m = ok.len() as f64;
            EstimatorSummary {
                estimator,
                bias: ok.iter().map(|t| t - sc.theta).sum::<f64>() / m,
                mse: ok.iter().map(|t| (t - sc.theta).powi(2)).sum::<f64>() / m,
                n_ok: ok.len(),
                fit_issues: reps - ok.len(),
            }
        })
        .collect();
    Ok(EstimationReport {
        family: sc.family,
        tau: sc.tau,
        theta0: sc.theta,
        margins: sc.margins.index(),
        r: sc.r,
        s: sc.s,
        n,
        reps,
        seed,
        ipfp_failures: outcomes.iter().filter(|o| !o.0).count(),
        estimators,
    })
}

/// Rejection rate at [`LEVEL`] of the asymptotic test of `hypothesized`.
#[allow(clippy::too_many_arguments)]
pub fn run_gof_experiment(
    sc: &Scenario,
    hypothesized: Family,
    estimator: Estimator,
    n: u64,
    reps: usize,
    g: &GroupingMatrix,
    m: usize,
    seed: u64,
    cfg: &IpfpConfig,
) -> Result<GofReport> {
    check_run(n, reps)?;
    let fam = DiscretizedFamily::new(hypothesized, sc.r, sc.s)?;
    let sampler = CategoricalSampler::new(&sc.generating_pmf);
    // (ipfp converged, p-value)
    let outcomes: Vec<(bool, Option<f64>)> = (0..reps)
        .into_par_iter()
        .map(|l| {
            let t = draw_table(&sampler, sc, n, seed, l);
            let converged = empirical_copula(&t, cfg).is_ok_and(|e| e.ipfp.converged);
            let p = asymptotic_pvalue(&t, &fam, estimator, g, m, RngStream::child_seed(seed, l as u64), cfg)
                .ok()
                .map(|r| r.p_value);
            (converged, p)
        })
        .collect();
    let done: Vec<f64> = outcomes.iter().filter_map(|o| o.1).collect();
    let rejections = done.iter().filter(|p| **p < LEVEL).count();
    Ok(GofReport {
        family: sc.family,
        hypothesized,
        estimator,
        tau: sc.tau,
        margins: sc.margins.index(),
        r: sc.r,
        s: sc.s,
        q: g.q(),
        n,
        reps,
        m,
        seed,
        rejection_rate: 100.0 * rejections as f64 / done.len() as f64,
        rejections,
        ipfp_failures: outcomes.iter().filter(|o| !o.0).count(),
        issues: reps - done.len(),
    })
}
