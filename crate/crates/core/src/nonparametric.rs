//! Empirical, smoothed and copula p.m.f.s of a contingency table.

use crate::error::Result;
use crate::ipfp::{copula_pmf, IpfpConfig, IpfpSummary};
use crate::pmf::{BivariatePmf, ContingencyTable};

/// The three nonparametric estimates derived from one table.
#[derive(Debug, Clone, PartialEq)]
pub struct EmpiricalEstimate {
    /// `counts / n`.
    pub hat_p: BivariatePmf,
    /// `(counts + 1/(rs)) / (n + 1)`.
    pub smoothed_p: BivariatePmf,
    /// IPFP of `smoothed_p` to uniform margins.
    pub empirical_copula: BivariatePmf,
    pub ipfp: IpfpSummary,
}

pub fn empirical_pmf(t: &ContingencyTable) -> BivariatePmf {
    let n = t.n() as f64;
    BivariatePmf::new_unchecked(t.r(), t.s(), t.counts().iter().map(|c| *c as f64 / n).collect())
}

/// Adds mass `1/(rs)` spread evenly over the grid, so every cell is positive.
///
/// Equal to `(n/(n+1))·p̂ + (1/(n+1))·π`.
pub fn smoothed_pmf(t: &ContingencyTable) -> BivariatePmf {
    let n = t.n() as f64;
    let extra = 1.0 / (t.r() * t.s()) as f64;
    BivariatePmf::new_unchecked(t.r(), t.s(), t.counts().iter().map(|c| (*c as f64 + extra) / (n + 1.0)).collect())
}

/// The empirical copula p.m.f. `u^[n] = U(p^[n])`.
///
/// IPFP non-convergence is recorded in [`EmpiricalEstimate::ipfp`], not raised.
pub fn empirical_copula(t: &ContingencyTable, cfg: &IpfpConfig) -> Result<EmpiricalEstimate> {
    let smoothed_p = smoothed_pmf(t);
    let res = copula_pmf(&smoothed_p, cfg)?;
    Ok(EmpiricalEstimate { hat_p: empirical_pmf(t), smoothed_p, ipfp: res.summary(), empirical_copula: res.fitted })
}
