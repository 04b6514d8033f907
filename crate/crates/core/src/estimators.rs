//! Parameter estimation for a discretized family from an empirical copula p.m.f.
//!
//! * Method of moments: solve `g(θ) = measure(u^[n])` for ρ, γ or τ_b.
//! * Maximum pseudo-likelihood: maximize `Σ u^[n]_ij log u^[θ]_ij`, starting
//!   from the γ moment estimate.
//!
//! Both search the family's clipped domain.

use serde::{Deserialize, Serialize};

use crate::dependence::Measure;
use crate::error::{Error, Result};
use crate::families::DiscretizedFamily;
use crate::ipfp::IpfpConfig;
use crate::nonparametric::empirical_copula;
use crate::numerics::{bounded_minimize_from, brent_root};
use crate::pmf::{BivariatePmf, ContingencyTable};

/// Root-finding tolerance in θ for moment inversion.
pub const MOM_TOL: f64 = 1e-10;
/// Bracket-width tolerance in θ for pseudo-likelihood maximization.
pub const MPL_TOL: f64 = 1e-8;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Estimator {
    Rho,
    Gamma,
    Tau,
    Mpl,
}

impl Estimator {
    pub const ALL: [Estimator; 4] = [Estimator::Rho, Estimator::Gamma, Estimator::Tau, Estimator::Mpl];

    pub fn name(self) -> &'static str {
        match self {
            Estimator::Rho => "rho",
            Estimator::Gamma => "gamma",
            Estimator::Tau => "tau",
            Estimator::Mpl => "mpl",
        }
    }

    pub fn from_name(name: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|e| e.name() == name)
    }

    /// The moment a method-of-moments estimator inverts.
    pub fn measure(self) -> Option<Measure> {
        match self {
            Estimator::Rho => Some(Measure::Rho),
            Estimator::Gamma => Some(Measure::Gamma),
            Estimator::Tau => Some(Measure::Tau),
            Estimator::Mpl => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FitResult {
    pub theta_hat: f64,
    pub estimator: Estimator,
    /// `−Σ u^[n]_ij log u^[θ̂]_ij`, for pseudo-likelihood fits.
    pub objective_value: Option<f64>,
    pub iterations: usize,
    pub converged: bool,
    /// The estimate sits on an end of the clipped domain. For moment
    /// estimators this means the empirical measure lies outside the range of
    /// `g`, and the nearer end was returned.
    pub at_boundary: bool,
}

/// Moment estimate from an empirical copula p.m.f.
///
/// When the empirical measure lies outside `g` over the clipped domain, the
/// nearer end of the domain is returned with `at_boundary` set.
pub fn fit_mom_copula(u_n: &BivariatePmf, fam: &DiscretizedFamily, measure: Measure) -> Result<FitResult> {
    let target = measure.value(u_n)?;
    let (lo, hi) = fam.family.clipped_domain();
    let f = |theta: f64| fam.g_moment(theta, measure).map(|g| g - target);
    let (f_lo, f_hi) = (f(lo)?, f(hi)?);
    let estimator = match measure {
        Measure::Rho => Estimator::Rho,
        Measure::Gamma => Estimator::Gamma,
        Measure::Tau => Estimator::Tau,
    };
    if !(f_lo.is_finite() && f_hi.is_finite()) {
        return Err(Error::Range { measure: measure.name().into(), value: target });
    }
    if f_lo.signum() == f_hi.signum() && f_lo != 0.0 && f_hi != 0.0 {
        let theta_hat = if f_lo.abs() <= f_hi.abs() { lo } else { hi };
        return Ok(FitResult { theta_hat, estimator, objective_value: None, iterations: 0, converged: true, at_boundary: true });
    }
    let mut failure = None;
    let sol = brent_root(
        |theta| match f(theta) {
            Ok(v) => v,
            Err(e) => {
                failure.get_or_insert(e);
                f64::NAN
            }
        },
        lo,
        hi,
        MOM_TOL,
    )?;
    if let Some(e) = failure {
        return Err(e);
    }
    Ok(FitResult {
        theta_hat: sol.x,
        estimator,
        objective_value: None,
        iterations: sol.iterations,
        converged: sol.converged,
        at_boundary: sol.x == lo || sol.x == hi,
    })
}

/// `Σ u^[n]_ij log u^[θ]_ij`, skipping cells where `u^[n]` is zero.
pub fn pseudo_loglik(u_n: &BivariatePmf, fam: &DiscretizedFamily, theta: f64) -> Result<f64> {
    let u_theta = fam.discretize(theta)?;
    u_n.same_shape(&u_theta)?;
    let mut total = 0.0;
    for (k, (a, b)) in u_n.values().iter().zip(u_theta.values()).enumerate() {
        if *b <= 0.0 {
            return Err(Error::SingularSupport { i: k / u_n.s(), j: k % u_n.s() });
        }
        if *a > 0.0 {
            total += a * b.ln();
        }
    }
    Ok(total)
}

/// Pseudo-likelihood estimate from an empirical copula p.m.f., searched from `start`.
pub fn fit_mpl_copula_from(u_n: &BivariatePmf, fam: &DiscretizedFamily, start: f64) -> Result<FitResult> {
    let (lo, hi) = fam.family.clipped_domain();
    let sol = bounded_minimize_from(
        |theta| pseudo_loglik(u_n, fam, theta).map_or(f64::INFINITY, |l| -l),
        lo,
        hi,
        start,
        MPL_TOL,
    );
    if !sol.fx.is_finite() {
        return Err(Error::Numerical(format!("pseudo-likelihood is undefined across the domain of {}", fam.family.name())));
    }
    Ok(FitResult {
        theta_hat: sol.x,
        estimator: Estimator::Mpl,
        objective_value: Some(sol.fx),
        iterations: sol.iterations,
        converged: sol.converged,
        at_boundary: sol.x - lo <= MPL_TOL || hi - sol.x <= MPL_TOL,
    })
}

/// Pseudo-likelihood estimate started at the γ moment estimate (or the
/// middle of the clipped domain when that fails).
pub fn fit_mpl_copula(u_n: &BivariatePmf, fam: &DiscretizedFamily) -> Result<FitResult> {
    let start = fit_mom_copula(u_n, fam, Measure::Gamma).map(|f| f.theta_hat).unwrap_or_else(|_| {
        let (lo, hi) = fam.family.clipped_domain();
        0.5 * (lo + hi)
    });
    fit_mpl_copula_from(u_n, fam, start)
}

/// Any of the four estimators, from an empirical copula p.m.f.
pub fn fit_copula(u_n: &BivariatePmf, fam: &DiscretizedFamily, estimator: Estimator) -> Result<FitResult> {
    match estimator.measure() {
        Some(m) => fit_mom_copula(u_n, fam, m),
        None => fit_mpl_copula(u_n, fam),
    }
}

fn check_table(t: &ContingencyTable, fam: &DiscretizedFamily) -> Result<()> {
    if (t.r(), t.s()) != (fam.r, fam.s) {
        return Err(Error::DimensionMismatch {
            expected: format!("{}x{}", fam.r, fam.s),
            got: format!("{}x{}", t.r(), t.s()),
        });
    }
    Ok(())
}

/// Method-of-moments estimate from a contingency table.
pub fn fit_mom(t: &ContingencyTable, fam: &DiscretizedFamily, measure: Measure, cfg: &IpfpConfig) -> Result<FitResult> {
    check_table(t, fam)?;
    fit_mom_copula(&empirical_copula(t, cfg)?.empirical_copula, fam, measure)
}

/// Maximum pseudo-likelihood estimate from a contingency table.
pub fn fit_mpl(t: &ContingencyTable, fam: &DiscretizedFamily, cfg: &IpfpConfig) -> Result<FitResult> {
    check_table(t, fam)?;
    fit_mpl_copula(&empirical_copula(t, cfg)?.empirical_copula, fam)
}

pub fn fit(t: &ContingencyTable, fam: &DiscretizedFamily, estimator: Estimator, cfg: &IpfpConfig) -> Result<FitResult> {
    check_table(t, fam)?;
    fit_copula(&empirical_copula(t, cfg)?.empirical_copula, fam, estimator)
}
