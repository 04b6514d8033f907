//! Iterative proportional fitting (Sinkhorn scaling) and the copula
//! decomposition built on it.
//!
//! One iteration is a row scaling `R_a` followed by a column scaling `C_b`.
//! The loop stops once two consecutive post-column iterates differ by at most
//! `epsilon` in the entrywise L¹ norm and the row sums of the latest iterate
//! are within `epsilon` of `a` (also in L¹). The second test matters only for
//! infeasible targets, where post-column iterates can settle while the row
//! margins stay wrong. Running out of iterations is reported in
//! [`IpfpResult::converged`] rather than as an error.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::pmf::{BivariatePmf, MarginalPmf};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IpfpConfig {
    pub epsilon: f64,
    pub max_iterations: usize,
}

impl Default for IpfpConfig {
    fn default() -> Self {
        Self { epsilon: 1e-10, max_iterations: 1000 }
    }
}

impl IpfpConfig {
    pub fn new(epsilon: f64, max_iterations: usize) -> Result<Self> {
        if !(epsilon > 0.0 && epsilon.is_finite()) {
            return Err(Error::Precondition(format!("epsilon must be positive, got {epsilon}")));
        }
        if max_iterations == 0 {
            return Err(Error::Precondition("max_iterations must be at least 1".into()));
        }
        Ok(Self { epsilon, max_iterations })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct IpfpResult {
    pub fitted: BivariatePmf,
    /// Number of row-then-column alternations performed.
    pub iterations: usize,
    pub converged: bool,
    /// L¹ distance between the last two post-column iterates.
    pub final_delta: f64,
}

/// Convergence metadata of an [`IpfpResult`], without the fitted p.m.f.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IpfpSummary {
    pub iterations: usize,
    pub converged: bool,
    pub final_delta: f64,
}

impl IpfpResult {
    pub fn summary(&self) -> IpfpSummary {
        IpfpSummary { iterations: self.iterations, converged: self.converged, final_delta: self.final_delta }
    }
}

fn check_target(target: &MarginalPmf, len: usize, what: &str) -> Result<()> {
    if target.len() != len {
        return Err(Error::DimensionMismatch { expected: format!("{what} of length {len}"), got: target.len().to_string() });
    }
    if !target.is_strictly_positive() {
        return Err(Error::Precondition(format!("{what} must be strictly positive")));
    }
    Ok(())
}

/// `R_a(x)_ij = a_i x_ij / x_{i+}`.
pub fn row_scale(x: &BivariatePmf, a: &MarginalPmf) -> Result<BivariatePmf> {
    check_target(a, x.r(), "row target")?;
    let sums = x.row_sums();
    if let Some(i) = sums.iter().position(|v| *v <= 0.0) {
        return Err(Error::Precondition(format!("row {i} of the input has zero mass")));
    }
    Ok(row_scale_unchecked(x, a.values(), &sums))
}

fn row_scale_unchecked(x: &BivariatePmf, a: &[f64], sums: &[f64]) -> BivariatePmf {
    let s = x.s();
    let values = x
        .values()
        .chunks(s)
        .zip(a.iter().zip(sums))
        .flat_map(|(row, (ai, si))| row.iter().map(move |v| ai * v / si))
        .collect();
    BivariatePmf::new_unchecked(x.r(), s, values)
}

/// `C_b(x)_ij = b_j x_ij / x_{+j}`.
pub fn col_scale(x: &BivariatePmf, b: &MarginalPmf) -> Result<BivariatePmf> {
    check_target(b, x.s(), "column target")?;
    let sums = x.col_sums();
    if let Some(j) = sums.iter().position(|v| *v <= 0.0) {
        return Err(Error::Precondition(format!("column {j} of the input has zero mass")));
    }
    Ok(col_scale_unchecked(x, b.values(), &sums))
}

fn col_scale_unchecked(x: &BivariatePmf, b: &[f64], sums: &[f64]) -> BivariatePmf {
    let factors: Vec<f64> = b.iter().zip(sums).map(|(bj, sj)| bj / sj).collect();
    let values = x
        .values()
        .chunks(x.s())
        .flat_map(|row| row.iter().zip(&factors).map(|(v, f)| v * f))
        .collect();
    BivariatePmf::new_unchecked(x.r(), x.s(), values)
}

/// One alternation `C_b ∘ R_a`.
pub fn alternation(x: &BivariatePmf, a: &MarginalPmf, b: &MarginalPmf) -> Result<BivariatePmf> {
    col_scale(&row_scale(x, a)?, b)
}

/// Runs the IPFP from `x` towards margins `(a, b)`.
pub fn ipfp_fit(x: &BivariatePmf, a: &MarginalPmf, b: &MarginalPmf, cfg: &IpfpConfig) -> Result<IpfpResult> {
    check_target(a, x.r(), "row target")?;
    check_target(b, x.s(), "column target")?;
    if !x.has_positive_margins() {
        return Err(Error::Precondition("input p.m.f. has an empty row or column".into()));
    }
    let mut current = x.clone();
    let mut delta = f64::INFINITY;
    for iteration in 1..=cfg.max_iterations {
        let rows = row_scale_unchecked(&current, a.values(), &current.row_sums());
        let next = col_scale_unchecked(&rows, b.values(), &rows.col_sums());
        delta = next.l1_distance(&current);
        current = next;
        if delta <= cfg.epsilon && row_gap(&current, a) <= cfg.epsilon {
            return Ok(IpfpResult { fitted: current, iterations: iteration, converged: true, final_delta: delta });
        }
    }
    Ok(IpfpResult { fitted: current, iterations: cfg.max_iterations, converged: false, final_delta: delta })
}

fn row_gap(x: &BivariatePmf, a: &MarginalPmf) -> f64 {
    x.row_sums().iter().zip(a.values()).map(|(u, v)| (u - v).abs()).sum()
}

/// The copula p.m.f. `U(x)`: IPFP towards uniform margins.
pub fn copula_pmf(x: &BivariatePmf, cfg: &IpfpConfig) -> Result<IpfpResult> {
    ipfp_fit(x, &MarginalPmf::uniform(x.r()), &MarginalPmf::uniform(x.s()), cfg)
}

/// Recombines a copula p.m.f. `u` with margins `(a, b)`.
pub fn sklar_compose(u: &BivariatePmf, a: &MarginalPmf, b: &MarginalPmf, cfg: &IpfpConfig) -> Result<IpfpResult> {
    if !u.has_uniform_margins(1e-9) {
        return Err(Error::Precondition("copula p.m.f. must have uniform margins".into()));
    }
    ipfp_fit(u, a, b, cfg)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum FeasibilityKind {
    /// Some p.m.f. with margins `(a, b)` has the same support as `x`.
    EqualSupport,
    /// Margins `(a, b)` are attainable only on a strict subset of `supp(x)`.
    SubsetSupportOnly,
    /// No p.m.f. supported in `supp(x)` has margins `(a, b)`.
    Infeasible,
}

/// Rows `R` and columns `C` (0-based) of a zero block of `x`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Witness {
    pub rows: Vec<usize>,
    pub cols: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FeasibilityVerdict {
    pub kind: FeasibilityKind,
    pub witness: Option<Witness>,
}

const FEASIBILITY_TOL: f64 = 1e-12;
const FEASIBILITY_MAX_DIM: usize = 30;

/// Checks `P_a(R) ≤ P_b(I_s ∖ C)` over every zero block `R × C` of `x`.
///
/// Only maximal zero blocks can bind, so the search enumerates subsets of the
/// shorter side and pairs each with the largest zero block it spans. The
/// witness is the first equality found, or the largest violation.
pub fn check_feasibility(x: &BivariatePmf, a: &MarginalPmf, b: &MarginalPmf) -> Result<FeasibilityVerdict> {
    if a.len() != x.r() || b.len() != x.s() {
        return Err(Error::DimensionMismatch {
            expected: format!("margins of lengths {} and {}", x.r(), x.s()),
            got: format!("{} and {}", a.len(), b.len()),
        });
    }
    if x.is_strictly_positive() {
        return Ok(FeasibilityVerdict { kind: FeasibilityKind::EqualSupport, witness: None });
    }
    if x.r() + x.s() > FEASIBILITY_MAX_DIM {
        return Err(Error::TooLarge(x.r() + x.s()));
    }

    let by_rows = x.r() <= x.s();
    let (short, long) = if by_rows { (x.r(), x.s()) } else { (x.s(), x.r()) };
    let zero = |k: usize, l: usize| if by_rows { x.get(k, l) == 0.0 } else { x.get(l, k) == 0.0 };

    let mut equality: Option<Witness> = None;
    let mut violation: Option<(f64, Witness)> = None;
    for mask in 1u32..(1u32 << short) {
        let chosen: Vec<usize> = (0..short).filter(|k| mask & (1 << k) != 0).collect();
        let spanned: Vec<usize> = (0..long).filter(|l| chosen.iter().all(|k| zero(*k, *l))).collect();
        if spanned.is_empty() {
            continue;
        }
        let (rows, cols) = if by_rows { (chosen, spanned) } else { (spanned, chosen) };
        let excess = a.mass(rows.iter().copied()) + b.mass(cols.iter().copied()) - 1.0;
        if excess > FEASIBILITY_TOL {
            if violation.as_ref().is_none_or(|(e, _)| excess > *e) {
                violation = Some((excess, Witness { rows, cols }));
            }
        } else if excess.abs() <= FEASIBILITY_TOL && equality.is_none() {
            equality = Some(Witness { rows, cols });
        }
    }
    Ok(match (violation, equality) {
        (Some((_, w)), _) => FeasibilityVerdict { kind: FeasibilityKind::Infeasible, witness: Some(w) },
        (None, Some(w)) => FeasibilityVerdict { kind: FeasibilityKind::SubsetSupportOnly, witness: Some(w) },
        (None, None) => FeasibilityVerdict { kind: FeasibilityKind::EqualSupport, witness: None },
    })
}
