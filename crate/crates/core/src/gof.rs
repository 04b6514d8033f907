//! Chi-square goodness-of-fit tests for a parametric copula p.m.f. family.
//!
//! The statistic is
//! `S_G = n ‖diag(G vec u^[θ̂])^{-1/2} G vec(u^[n] − u^[θ̂])‖²`.
//! Its null law is approximated either by the eigenvalue mixture `Σ λ_k Z_k²`
//! of the plug-in covariance, or by a semi-parametric bootstrap.

use std::collections::BTreeMap;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::asymptotics::{estimator_v, plug_in_bundle, JacobianBundle, VMatrix};
use crate::error::{Error, Result};
use crate::estimators::{fit_copula, Estimator};
use crate::families::{DiscretizedFamily, Family};
use crate::ipfp::{sklar_compose, IpfpConfig};
use crate::nonparametric::empirical_copula;
use crate::numerics::{sym_eigenvalues, CategoricalSampler, Matrix, RngStream};
use crate::pmf::{BivariatePmf, ContingencyTable};

/// Cell-to-group assignment, indexed by column-major cell position.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GroupingMatrix {
    r: usize,
    s: usize,
    q: usize,
    assignment: Vec<usize>,
}

impl GroupingMatrix {
    pub fn identity(r: usize, s: usize) -> Self {
        Self { r, s, q: r * s, assignment: (0..r * s).collect() }
    }

    /// Builds from an `r × s` label grid. Cells sharing a positive label form
    /// one group; each 0 cell is its own group. Labelled groups come first,
    /// in increasing label order, then singletons in column-major order.
    pub fn from_labels(labels: &[Vec<i64>]) -> Result<Self> {
        let r = labels.len();
        let s = labels.first().map_or(0, Vec::len);
        if r == 0 || s == 0 {
            return Err(Error::Format { line: 0, msg: "empty label grid".into() });
        }
        for (i, row) in labels.iter().enumerate() {
            if row.len() != s {
                return Err(Error::Format { line: i + 1, msg: format!("expected {s} labels, found {}", row.len()) });
            }
            if let Some(x) = row.iter().find(|x| **x < 0) {
                return Err(Error::Format { line: i + 1, msg: format!("negative label {x}") });
            }
        }
        let mut ids = BTreeMap::new();
        for row in labels {
            for &x in row.iter().filter(|x| **x > 0) {
                ids.entry(x).or_insert(0usize);
            }
        }
        for (k, id) in ids.values_mut().enumerate() {
            *id = k;
        }
        let mut next = ids.len();
        let mut assignment = vec![0; r * s];
        for j in 0..s {
            for i in 0..r {
                assignment[i + r * j] = match labels[i][j] {
                    0 => {
                        next += 1;
                        next - 1
                    }
                    x => ids[&x],
                };
            }
        }
        Ok(Self { r, s, q: next, assignment })
    }

    /// Merges the `k × k` lower-left and upper-right corner blocks into one
    /// group each; every other cell stays alone.
    pub fn corner_blocks(r: usize, s: usize, k: usize) -> Result<Self> {
        if k == 0 || 2 * k > r || 2 * k > s {
            return Err(Error::Precondition(format!("corner block {k} does not fit a {r}x{s} grid")));
        }
        let mut labels = vec![vec![0i64; s]; r];
        for i in 0..k {
            for j in 0..k {
                labels[r - k + i][j] = 1;
                labels[i][s - k + j] = 2;
            }
        }
        Self::from_labels(&labels)
    }

    pub fn r(&self) -> usize {
        self.r
    }

    pub fn s(&self) -> usize {
        self.s
    }

    pub fn q(&self) -> usize {
        self.q
    }

    pub fn assignment(&self) -> &[usize] {
        &self.assignment
    }

    /// The `q × rs` 0/1 matrix `G`.
    pub fn to_matrix(&self) -> Matrix {
        let mut g = Matrix::zeros(self.q, self.r * self.s);
        for (c, &k) in self.assignment.iter().enumerate() {
            g[(k, c)] = 1.0;
        }
        g
    }

    /// `G v` for a column-major vector `v`.
    pub fn apply(&self, v: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.q];
        for (x, &k) in v.iter().zip(&self.assignment) {
            out[k] += x;
        }
        out
    }

    fn check_shape(&self, u: &BivariatePmf) -> Result<()> {
        if (u.r(), u.s()) != (self.r, self.s) {
            return Err(Error::DimensionMismatch {
                expected: format!("{}x{}", self.r, self.s),
                got: format!("{}x{}", u.r(), u.s()),
            });
        }
        Ok(())
    }
}

pub fn grouping_from_labels(labels: &[Vec<i64>]) -> Result<GroupingMatrix> {
    GroupingMatrix::from_labels(labels)
}

/// `n Σ (u^[n] − u^[θ])² / u^[θ]`.
pub fn stat_s(u_n: &BivariatePmf, u_theta: &BivariatePmf, n: f64) -> Result<f64> {
    stat_sg(u_n, u_theta, &GroupingMatrix::identity(u_theta.r(), u_theta.s()), n)
}

pub fn stat_sg(u_n: &BivariatePmf, u_theta: &BivariatePmf, g: &GroupingMatrix, n: f64) -> Result<f64> {
    u_n.same_shape(u_theta)?;
    g.check_shape(u_theta)?;
    let mass = g.apply(&u_theta.vec());
    let diff: Vec<f64> = u_n.vec().iter().zip(u_theta.vec()).map(|(a, b)| a - b).collect();
    let gd = g.apply(&diff);
    let mut total = 0.0;
    for (k, (d, m)) in gd.iter().zip(&mass).enumerate() {
        if *m <= 0.0 {
            return Err(Error::Numerical(format!("group {k} has no mass under the fitted copula")));
        }
        total += d * d / m;
    }
    Ok(n * total)
}

/// `D^{-1/2} G (J − u̇ V) Σ_p (J − u̇ V)ᵀ Gᵀ D^{-1/2}` with `D = diag(G vec w)`.
///
/// Under the null `w = u^[θ₀] = u`, so either `u^[θ̂]` or `u^[n]` is a
/// consistent plug-in for `w`; [`asymptotic_pvalue`] uses `u^[n]`.
pub fn sigma_g(
    g: &GroupingMatrix,
    weights: &BivariatePmf,
    bundle: &JacobianBundle,
    v: &VMatrix,
    udot: &[f64],
) -> Result<Matrix> {
    g.check_shape(weights)?;
    let d = g.r * g.s;
    if udot.len() != d || v.cols() != d || v.rows() != 1 {
        return Err(Error::DimensionMismatch { expected: format!("{d}"), got: format!("{}", udot.len()) });
    }
    let mass = g.apply(&weights.vec());
    if let Some(k) = mass.iter().position(|m| *m <= 0.0) {
        return Err(Error::Numerical(format!("group {k} has no mass in the covariance weights")));
    }
    // B = D^{-1/2} G (J − u̇ V), assembled row by row.
    let mut b = Matrix::zeros(g.q, d);
    for (a, &grp) in g.assignment.iter().enumerate() {
        for c in 0..d {
            b[(grp, c)] += bundle.j[(a, c)] - udot[a] * v[(0, c)];
        }
    }
    for (k, m) in mass.iter().enumerate() {
        let w = 1.0 / m.sqrt();
        for c in 0..d {
            b[(k, c)] *= w;
        }
    }
    let out = b.mul(&bundle.sigma_p).mul(&b.transpose());
    // Symmetrize away roundoff.
    let mut sym = out.clone();
    for i in 0..g.q {
        for j in 0..g.q {
            sym[(i, j)] = 0.5 * (out[(i, j)] + out[(j, i)]);
        }
    }
    Ok(sym)
}

/// Negative eigenvalues above `−EIGEN_CLAMP · max(1, λ_max)` are set to 0.
pub const EIGEN_CLAMP: f64 = 1e-10;

/// Eigenvalues of a covariance, clamped at 0 within roundoff.
pub fn mixture_weights(sigma: &Matrix) -> Result<Vec<f64>> {
    let eig = sym_eigenvalues(sigma)?;
    let scale = eig.first().copied().unwrap_or(0.0).max(1.0);
    eig.into_iter()
        .map(|l| {
            if l >= 0.0 {
                Ok(l)
            } else if l >= -EIGEN_CLAMP * scale {
                Ok(0.0)
            } else {
                Err(Error::Numerical(format!("covariance has eigenvalue {l}")))
            }
        })
        .collect()
}

/// `M` draws of `Σ λ_k Z_k²`; draw `l` uses stream `(seed, l)`.
pub fn mixture_draws(lambdas: &[f64], m: usize, seed: u64) -> Vec<f64> {
    (0..m)
        .into_par_iter()
        .map(|l| {
            let mut stream = RngStream::new(seed, l as u64);
            lambdas
                .iter()
                .map(|lam| {
                    let z = stream.standard_normal();
                    lam * z * z
                })
                .sum()
        })
        .collect()
}

/// Share of replicates at or above the observed statistic.
pub fn tail_proportion(replicates: &[f64], statistic: f64) -> f64 {
    if replicates.is_empty() {
        return f64::NAN;
    }
    replicates.iter().filter(|x| **x >= statistic).count() as f64 / replicates.len() as f64
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum GofMethod {
    Asymptotic,
    Bootstrap,
}

impl GofMethod {
    pub fn name(self) -> &'static str {
        match self {
            GofMethod::Asymptotic => "asymptotic",
            GofMethod::Bootstrap => "bootstrap",
        }
    }

    pub fn from_name(name: &str) -> Option<Self> {
        [GofMethod::Asymptotic, GofMethod::Bootstrap].into_iter().find(|m| m.name() == name)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GofResult {
    pub family: Family,
    pub estimator: Estimator,
    pub method: GofMethod,
    pub theta_hat: f64,
    pub statistic: f64,
    pub q: usize,
    pub p_value: f64,
    /// Mixture weights, for the asymptotic method.
    pub eigenvalues: Option<Vec<f64>>,
    /// Null replicates of the statistic, in replicate order.
    pub replicates: Vec<f64>,
    /// Replicates requested.
    pub m: usize,
    /// Failed replicate attempts (bootstrap) or 0.
    pub numerical_issues: usize,
}

impl GofResult {
    pub fn n_replicates(&self) -> usize {
        self.replicates.len()
    }
}

fn check_inputs(t: &ContingencyTable, fam: &DiscretizedFamily, g: &GroupingMatrix, m: usize) -> Result<()> {
    if (t.r(), t.s()) != (fam.r, fam.s) || (g.r, g.s) != (fam.r, fam.s) {
        return Err(Error::DimensionMismatch {
            expected: format!("{}x{}", fam.r, fam.s),
            got: format!("table {}x{}, grouping {}x{}", t.r(), t.s(), g.r, g.s),
        });
    }
    if m == 0 {
        return Err(Error::Precondition("at least one replicate is required".into()));
    }
    Ok(())
}

/// Eigenvalue-mixture test: fit, compute `S_G`, plug `(θ̂, u^[n], p^[n])` into
/// the covariance, and simulate `M` mixture draws.
///
/// `J` comes from the smoothed pair, `Σ_p` from the raw `p̂`, and the
/// normalizing weights from `u^[n]`.
pub fn asymptotic_pvalue(
    t: &ContingencyTable,
    fam: &DiscretizedFamily,
    estimator: Estimator,
    g: &GroupingMatrix,
    m: usize,
    seed: u64,
    cfg: &IpfpConfig,
) -> Result<GofResult> {
    check_inputs(t, fam, g, m)?;
    let est = empirical_copula(t, cfg)?;
    let theta_hat = fit_copula(&est.empirical_copula, fam, estimator)?.theta_hat;
    let u_theta = fam.discretize(theta_hat)?;
    let statistic = stat_sg(&est.empirical_copula, &u_theta, g, t.n() as f64)?;
    let bundle = plug_in_bundle(&est)?;
    let v = estimator_v(&bundle, fam, theta_hat, estimator)?;
    let sigma = sigma_g(g, &est.empirical_copula, &bundle, &v, &fam.dtheta_vec(theta_hat)?)?;
    let lambdas = mixture_weights(&sigma)?;
    let replicates = mixture_draws(&lambdas, m, seed);
    Ok(GofResult {
        family: fam.family,
        estimator,
        method: GofMethod::Asymptotic,
        theta_hat,
        statistic,
        q: g.q,
        p_value: tail_proportion(&replicates, statistic),
        eigenvalues: Some(lambdas),
        replicates,
        m,
        numerical_issues: 0,
    })
}

/// `S_G` recomputed on a fresh table; `None` when IPFP or the fit fails.
fn replicate_statistic(
    t: &ContingencyTable,
    fam: &DiscretizedFamily,
    estimator: Estimator,
    g: &GroupingMatrix,
    cfg: &IpfpConfig,
) -> Option<f64> {
    let est = empirical_copula(t, cfg).ok()?;
    if !est.ipfp.converged {
        return None;
    }
    let theta = fit_copula(&est.empirical_copula, fam, estimator).ok()?.theta_hat;
    let u_theta = fam.discretize(theta).ok()?;
    stat_sg(&est.empirical_copula, &u_theta, g, t.n() as f64).ok().filter(|x| x.is_finite())
}

/// Semi-parametric bootstrap: resample from the fitted copula composed with
/// the smoothed margins, refit, and recompute the statistic.
///
/// Replicate `l` draws from stream `(child_seed(seed, l), 0)`; if that draw
/// fails it is redrawn once from stream `(child_seed(seed, l), 1)`, and
/// skipped after a second failure.
pub fn bootstrap_pvalue(
    t: &ContingencyTable,
    fam: &DiscretizedFamily,
    estimator: Estimator,
    g: &GroupingMatrix,
    m: usize,
    seed: u64,
    cfg: &IpfpConfig,
) -> Result<GofResult> {
    check_inputs(t, fam, g, m)?;
    let est = empirical_copula(t, cfg)?;
    let theta_hat = fit_copula(&est.empirical_copula, fam, estimator)?.theta_hat;
    let u_theta = fam.discretize(theta_hat)?;
    let statistic = stat_sg(&est.empirical_copula, &u_theta, g, t.n() as f64)?;
    let (a, b) = est.smoothed_p.margins();
    let generating = sklar_compose(&u_theta, &a, &b, cfg)?;
    if !generating.converged {
        return Err(Error::Numerical("IPFP did not converge for the bootstrap p.m.f.".into()));
    }
    let sampler = CategoricalSampler::new(&generating.fitted);
    let (r, s, n) = (t.r(), t.s(), t.n());
    let outcomes: Vec<(Option<f64>, usize)> = (0..m)
        .into_par_iter()
        .map(|l| {
            let root = RngStream::child_seed(seed, l as u64);
            let mut failures = 0;
            for attempt in 0..2 {
                let mut stream = RngStream::new(root, attempt);
                let counts = sampler.sample_counts(&mut stream, n);
                let table = ContingencyTable::new(r, s, counts).expect("n ≥ 1");
                match replicate_statistic(&table, fam, estimator, g, cfg) {
                    Some(x) => return (Some(x), failures),
                    None => failures += 1,
                }
            }
            (None, failures)
        })
        .collect();
    let numerical_issues = outcomes.iter().map(|o| o.1).sum();
    let replicates: Vec<f64> = outcomes.into_iter().filter_map(|o| o.0).collect();
    if replicates.is_empty() {
        return Err(Error::Numerical("every bootstrap replicate failed".into()));
    }
    Ok(GofResult {
        family: fam.family,
        estimator,
        method: GofMethod::Bootstrap,
        theta_hat,
        statistic,
        q: g.q,
        p_value: tail_proportion(&replicates, statistic),
        eigenvalues: None,
        replicates,
        m,
        numerical_issues,
    })
}

/// Dispatches on the method.
#[allow(clippy::too_many_arguments)]
pub fn gof_test(
    t: &ContingencyTable,
    fam: &DiscretizedFamily,
    estimator: Estimator,
    method: GofMethod,
    g: &GroupingMatrix,
    m: usize,
    seed: u64,
    cfg: &IpfpConfig,
) -> Result<GofResult> {
    match method {
        GofMethod::Asymptotic => asymptotic_pvalue(t, fam, estimator, g, m, seed, cfg),
        GofMethod::Bootstrap => bootstrap_pvalue(t, fam, estimator, g, m, seed, cfg),
    }
}
