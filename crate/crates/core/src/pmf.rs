//! Probability mass functions on rectangular grids.
//!
//! Cells are addressed 0-based as `(i, j)` with `i < r`, `j < s`. Storage is
//! row-major; [`BivariatePmf::vec`] gives the column-major vectorization used
//! by every matrix formula in the crate (cell `(i, j)` sits at `i + r·j`).

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numerics::Matrix;

/// Tolerance on the total mass of a p.m.f.
pub const MASS_TOLERANCE: f64 = 1e-12;

/// A bivariate p.m.f. on `{0..r} × {0..s}`.
///
/// Construction checks nonnegativity and total mass. Positive row and column
/// sums (membership in the set the IPFP works on) is checked where needed,
/// via [`BivariatePmf::has_positive_margins`], since raw empirical p.m.f.s
/// may have empty rows.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "PmfJson", into = "PmfJson")]
pub struct BivariatePmf {
    r: usize,
    s: usize,
    values: Vec<f64>,
}

#[derive(Serialize, Deserialize)]
struct PmfJson {
    r: usize,
    s: usize,
    values: Vec<Vec<f64>>,
}

impl TryFrom<PmfJson> for BivariatePmf {
    type Error = Error;
    fn try_from(j: PmfJson) -> Result<Self> {
        if j.values.len() != j.r || j.values.iter().any(|row| row.len() != j.s) {
            return Err(Error::DimensionMismatch {
                expected: format!("{} rows of {} values", j.r, j.s),
                got: format!("{} rows", j.values.len()),
            });
        }
        BivariatePmf::new(j.r, j.s, j.values.concat())
    }
}

impl From<BivariatePmf> for PmfJson {
    fn from(p: BivariatePmf) -> Self {
        PmfJson { r: p.r, s: p.s, values: p.to_rows() }
    }
}

fn check_shape(r: usize, s: usize, len: usize) -> Result<()> {
    if r == 0 || s == 0 {
        return Err(Error::DegenerateDimension { r, s });
    }
    if len != r * s {
        return Err(Error::DimensionMismatch { expected: format!("{} values", r * s), got: len.to_string() });
    }
    Ok(())
}

impl BivariatePmf {
    /// Validated constructor from row-major values.
    pub fn new(r: usize, s: usize, values: Vec<f64>) -> Result<Self> {
        check_shape(r, s, values.len())?;
        if let Some(k) = values.iter().position(|v| !v.is_finite() || *v < 0.0) {
            return Err(Error::InvalidPmf(format!(
                "entry ({}, {}) = {} is not a finite nonnegative number",
                k / s,
                k % s,
                values[k]
            )));
        }
        let total: f64 = values.iter().sum();
        if (total - 1.0).abs() > MASS_TOLERANCE {
            return Err(Error::InvalidPmf(format!("total mass {total} differs from 1")));
        }
        Ok(Self { r, s, values })
    }

    /// Divides nonnegative weights by their total.
    pub fn normalized(r: usize, s: usize, weights: Vec<f64>) -> Result<Self> {
        check_shape(r, s, weights.len())?;
        let total: f64 = weights.iter().sum();
        if !(total.is_finite() && total > 0.0) {
            return Err(Error::InvalidPmf(format!("cannot normalize weights with total {total}")));
        }
        Self::new(r, s, weights.into_iter().map(|w| w / total).collect())
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let r = rows.len();
        let s = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|row| row.len() != s) {
            return Err(Error::DimensionMismatch { expected: format!("rows of length {s}"), got: "ragged rows".into() });
        }
        Self::new(r, s, rows.concat())
    }

    /// Inverse of [`BivariatePmf::vec`].
    pub fn from_vec(r: usize, s: usize, v: &[f64]) -> Result<Self> {
        check_shape(r, s, v.len())?;
        let mut values = vec![0.0; r * s];
        for j in 0..s {
            for i in 0..r {
                values[i * s + j] = v[i + r * j];
            }
        }
        Self::new(r, s, values)
    }

    /// Skips validation; for results of operations that preserve validity up
    /// to roundoff.
    pub(crate) fn new_unchecked(r: usize, s: usize, values: Vec<f64>) -> Self {
        debug_assert_eq!(values.len(), r * s);
        Self { r, s, values }
    }

    /// The independence copula p.m.f. π with all entries `1/(rs)`.
    pub fn uniform(r: usize, s: usize) -> Self {
        Self { r, s, values: vec![1.0 / (r * s) as f64; r * s] }
    }

    /// Outer product `a_i b_j`.
    pub fn outer(a: &MarginalPmf, b: &MarginalPmf) -> Self {
        let values = a.values().iter().flat_map(|ai| b.values().iter().map(move |bj| ai * bj)).collect();
        Self { r: a.len(), s: b.len(), values }
    }

    pub fn r(&self) -> usize {
        self.r
    }

    pub fn s(&self) -> usize {
        self.s
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.values[i * self.s + j]
    }

    /// Row-major values.
    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn to_rows(&self) -> Vec<Vec<f64>> {
        self.values.chunks(self.s).map(<[f64]>::to_vec).collect()
    }

    /// Column-major vectorization: cell `(i, j)` at position `i + r·j`.
    pub fn vec(&self) -> Vec<f64> {
        let mut v = Vec::with_capacity(self.r * self.s);
        for j in 0..self.s {
            for i in 0..self.r {
                v.push(self.get(i, j));
            }
        }
        v
    }

    /// Entries over `cells`, in the column-major order of the grid.
    pub fn vec_subset(&self, cells: &SupportSet) -> Vec<f64> {
        let mut sorted: Vec<_> = cells.iter().collect();
        sorted.sort_by_key(|(i, j)| (*j, *i));
        sorted.into_iter().map(|(i, j)| self.get(i, j)).collect()
    }

    pub fn row_sums(&self) -> Vec<f64> {
        self.values.chunks(self.s).map(|row| row.iter().sum()).collect()
    }

    pub fn col_sums(&self) -> Vec<f64> {
        let mut c = vec![0.0; self.s];
        for row in self.values.chunks(self.s) {
            for (cj, v) in c.iter_mut().zip(row) {
                *cj += v;
            }
        }
        c
    }

    /// Row and column margins.
    pub fn margins(&self) -> (MarginalPmf, MarginalPmf) {
        (MarginalPmf { values: self.row_sums() }, MarginalPmf { values: self.col_sums() })
    }

    pub fn has_positive_margins(&self) -> bool {
        self.row_sums().iter().all(|x| *x > 0.0) && self.col_sums().iter().all(|x| *x > 0.0)
    }

    pub fn is_strictly_positive(&self) -> bool {
        self.values.iter().all(|x| *x > 0.0)
    }

    /// Checks that both margins are uniform within `tol`.
    pub fn has_uniform_margins(&self, tol: f64) -> bool {
        let (ri, si) = (1.0 / self.r as f64, 1.0 / self.s as f64);
        self.row_sums().iter().all(|x| (x - ri).abs() <= tol) && self.col_sums().iter().all(|x| (x - si).abs() <= tol)
    }

    pub fn transpose(&self) -> Self {
        let mut values = vec![0.0; self.r * self.s];
        for i in 0..self.r {
            for j in 0..self.s {
                values[j * self.r + i] = self.get(i, j);
            }
        }
        Self { r: self.s, s: self.r, values }
    }

    /// Rotation by 180°: cell `(i, j)` moves to `(r−1−i, s−1−j)`.
    pub fn rotate_half_turn(&self) -> Self {
        let mut values = self.values.clone();
        values.reverse();
        Self { r: self.r, s: self.s, values }
    }

    pub fn support(&self) -> SupportSet {
        let cells = (0..self.r)
            .flat_map(|i| (0..self.s).map(move |j| (i, j)))
            .filter(|(i, j)| self.get(*i, *j) > 0.0)
            .collect();
        SupportSet { cells }
    }

    /// Largest absolute entrywise difference.
    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        self.values.iter().zip(&other.values).fold(0.0, |m, (a, b)| m.max((a - b).abs()))
    }

    /// `Σ |x_ij − y_ij|`.
    pub fn l1_distance(&self, other: &Self) -> f64 {
        self.values.iter().zip(&other.values).map(|(a, b)| (a - b).abs()).sum()
    }

    pub(crate) fn same_shape(&self, other: &Self) -> Result<()> {
        if (self.r, self.s) != (other.r, other.s) {
            return Err(Error::DimensionMismatch {
                expected: format!("{}x{}", self.r, self.s),
                got: format!("{}x{}", other.r, other.s),
            });
        }
        Ok(())
    }
}

/// A univariate p.m.f. on `{0..k}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<f64>", into = "Vec<f64>")]
pub struct MarginalPmf {
    values: Vec<f64>,
}

impl TryFrom<Vec<f64>> for MarginalPmf {
    type Error = Error;
    fn try_from(v: Vec<f64>) -> Result<Self> {
        MarginalPmf::new(v)
    }
}

impl From<MarginalPmf> for Vec<f64> {
    fn from(m: MarginalPmf) -> Self {
        m.values
    }
}

impl MarginalPmf {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::InvalidPmf("empty marginal".into()));
        }
        if values.iter().any(|v| !v.is_finite() || *v < 0.0) {
            return Err(Error::InvalidPmf("marginal entries must be finite and nonnegative".into()));
        }
        let total: f64 = values.iter().sum();
        if (total - 1.0).abs() > MASS_TOLERANCE {
            return Err(Error::InvalidPmf(format!("marginal mass {total} differs from 1")));
        }
        Ok(Self { values })
    }

    pub fn normalized(weights: Vec<f64>) -> Result<Self> {
        let total: f64 = weights.iter().sum();
        if !(total.is_finite() && total > 0.0) {
            return Err(Error::InvalidPmf(format!("cannot normalize weights with total {total}")));
        }
        Self::new(weights.into_iter().map(|w| w / total).collect())
    }

    pub fn uniform(k: usize) -> Self {
        Self { values: vec![1.0 / k as f64; k] }
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn is_strictly_positive(&self) -> bool {
        self.values.iter().all(|x| *x > 0.0)
    }

    /// Mass of a set of categories.
    pub fn mass(&self, indices: impl IntoIterator<Item = usize>) -> f64 {
        indices.into_iter().map(|i| self.values[i]).sum()
    }
}

/// Observed counts on an `r × s` grid.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ContingencyTable {
    r: usize,
    s: usize,
    counts: Vec<u64>,
    n: u64,
}

impl ContingencyTable {
    /// Row-major counts; the total must be positive.
    pub fn new(r: usize, s: usize, counts: Vec<u64>) -> Result<Self> {
        check_shape(r, s, counts.len())?;
        let n = counts.iter().sum();
        if n == 0 {
            return Err(Error::Precondition("contingency table has no observations".into()));
        }
        Ok(Self { r, s, counts, n })
    }

    pub fn from_rows(rows: &[Vec<u64>]) -> Result<Self> {
        let r = rows.len();
        let s = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|row| row.len() != s) {
            return Err(Error::DimensionMismatch { expected: format!("rows of length {s}"), got: "ragged rows".into() });
        }
        Self::new(r, s, rows.concat())
    }

    pub fn r(&self) -> usize {
        self.r
    }

    pub fn s(&self) -> usize {
        self.s
    }

    pub fn n(&self) -> u64 {
        self.n
    }

    pub fn get(&self, i: usize, j: usize) -> u64 {
        self.counts[i * self.s + j]
    }

    /// Row-major counts.
    pub fn counts(&self) -> &[u64] {
        &self.counts
    }

    pub fn to_rows(&self) -> Vec<Vec<u64>> {
        self.counts.chunks(self.s).map(<[u64]>::to_vec).collect()
    }
}

/// A set of cells.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct SupportSet {
    cells: BTreeSet<(usize, usize)>,
}

impl SupportSet {
    pub fn new(cells: impl IntoIterator<Item = (usize, usize)>) -> Self {
        Self { cells: cells.into_iter().collect() }
    }

    pub fn contains(&self, i: usize, j: usize) -> bool {
        self.cells.contains(&(i, j))
    }

    pub fn len(&self) -> usize {
        self.cells.len()
    }

    pub fn is_empty(&self) -> bool {
        self.cells.is_empty()
    }

    pub fn is_subset(&self, other: &Self) -> bool {
        self.cells.is_subset(&other.cells)
    }

    pub fn iter(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.cells.iter().copied()
    }
}

/// Result of an I-divergence evaluation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Divergence {
    Finite(f64),
    /// `supp(y)` is not contained in `supp(x)`.
    Infinite,
}

impl Divergence {
    pub fn is_infinite(&self) -> bool {
        matches!(self, Divergence::Infinite)
    }

    /// The value, with [`Divergence::Infinite`] mapped to `f64::INFINITY`.
    pub fn value(&self) -> f64 {
        match self {
            Divergence::Finite(v) => *v,
            Divergence::Infinite => f64::INFINITY,
        }
    }
}

/// `D(y‖x) = Σ y_ij log(y_ij / x_ij)` with `0 log 0 = 0`.
pub fn i_divergence(y: &BivariatePmf, x: &BivariatePmf) -> Result<Divergence> {
    y.same_shape(x)?;
    let mut d = 0.0;
    for (yv, xv) in y.values.iter().zip(&x.values) {
        if *yv > 0.0 {
            if *xv <= 0.0 {
                return Ok(Divergence::Infinite);
            }
            d += yv * (yv / xv).ln();
        }
    }
    Ok(Divergence::Finite(d))
}

/// Local odds ratios `x_ij x_{i+1,j+1} / (x_{i,j+1} x_{i+1,j})` as an
/// `(r−1) × (s−1)` matrix.
pub fn local_odds_ratios(x: &BivariatePmf) -> Result<Matrix> {
    if let Some(k) = x.values.iter().position(|v| *v <= 0.0) {
        return Err(Error::SingularSupport { i: k / x.s, j: k % x.s });
    }
    let mut m = Matrix::zeros(x.r - 1, x.s - 1);
    for i in 0..x.r - 1 {
        for j in 0..x.s - 1 {
            m[(i, j)] = x.get(i, j) * x.get(i + 1, j + 1) / (x.get(i, j + 1) * x.get(i + 1, j));
        }
    }
    Ok(m)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn sevenths() -> BivariatePmf {
        let z = 1.0 / 7.0;
        BivariatePmf::from_rows(&[vec![z, z, z], vec![z, 0.0, z], vec![z, 0.0, z]]).unwrap()
    }

    #[test]
    fn margins_of_examples() {
        let (a, b) = BivariatePmf::uniform(3, 3).margins();
        for v in a.values().iter().chain(b.values()) {
            assert!((v - 1.0 / 3.0).abs() < 1e-15);
        }
        let (a, _) = sevenths().margins();
        let want = [3.0 / 7.0, 2.0 / 7.0, 2.0 / 7.0];
        assert!(a.values().iter().zip(want).all(|(x, y)| (x - y).abs() < 1e-15));
        let p = BivariatePmf::from_rows(&[vec![0.1, 0.2], vec![0.3, 0.4]]).unwrap();
        let (a, b) = p.margins();
        assert!((a.values()[0] - 0.3).abs() < 1e-15 && (a.values()[1] - 0.7).abs() < 1e-15);
        assert!((b.values()[0] - 0.4).abs() < 1e-15 && (b.values()[1] - 0.6).abs() < 1e-15);
    }

    #[test]
    fn column_major_vec() {
        let p = BivariatePmf::from_rows(&[vec![0.1, 0.3], vec![0.2, 0.4]]).unwrap();
        assert_eq!(p.vec(), vec![0.1, 0.2, 0.3, 0.4]);
        assert_eq!(BivariatePmf::from_vec(2, 2, &p.vec()).unwrap(), p);
        assert_eq!(p.vec_subset(&SupportSet::new([(1, 1), (0, 0)])), vec![0.1, 0.4]);
    }

    #[test]
    fn validation() {
        assert!(BivariatePmf::new(2, 2, vec![0.5, 0.5, 0.1, 0.0]).is_err());
        assert!(BivariatePmf::new(2, 2, vec![1.5, -0.5, 0.0, 0.0]).is_err());
        assert!(BivariatePmf::new(2, 2, vec![0.5, 0.5]).is_err());
        assert!(BivariatePmf::normalized(2, 2, vec![1.0, 1.0, 1.0, 1.0]).unwrap() == BivariatePmf::uniform(2, 2));
        assert!(ContingencyTable::new(2, 2, vec![0; 4]).is_err());
    }

    #[test]
    fn divergence_examples() {
        let x = sevenths();
        assert_eq!(i_divergence(&x, &x).unwrap(), Divergence::Finite(0.0));
        assert!(i_divergence(&BivariatePmf::uniform(3, 3), &x).unwrap().is_infinite());
        let y = BivariatePmf::from_rows(&[vec![0.5, 0.0], vec![0.0, 0.5]]).unwrap();
        let d = i_divergence(&y, &BivariatePmf::uniform(2, 2)).unwrap().value();
        assert!((d - 2f64.ln()).abs() < 1e-15);
        assert!(i_divergence(&y, &x).is_err());
    }

    #[test]
    fn odds_ratios() {
        let pi = local_odds_ratios(&BivariatePmf::uniform(3, 4)).unwrap();
        assert!(pi.as_slice().iter().all(|v| (v - 1.0).abs() < 1e-14));
        let x = BivariatePmf::from_rows(&[vec![0.4, 0.1], vec![0.1, 0.4]]).unwrap();
        assert!((local_odds_ratios(&x).unwrap()[(0, 0)] - 16.0).abs() < 1e-12);
        assert!(matches!(local_odds_ratios(&sevenths()), Err(Error::SingularSupport { i: 1, j: 1 })));
    }

    #[test]
    fn json_round_trip() {
        let p = sevenths();
        let text = serde_json::to_string(&p).unwrap();
        assert!(text.starts_with("{\"r\":3,\"s\":3,\"values\":[["));
        let back: BivariatePmf = serde_json::from_str(&text).unwrap();
        assert_eq!(back, p);
        assert!(serde_json::from_str::<BivariatePmf>(r#"{"r":2,"s":2,"values":[[0.5,0.5],[0.5,0.5]]}"#).is_err());
    }

    #[test]
    fn half_turn() {
        let p = BivariatePmf::from_rows(&[vec![0.1, 0.2, 0.3], vec![0.0, 0.15, 0.25]]).unwrap();
        let q = p.rotate_half_turn();
        assert_eq!(q.get(0, 0), 0.25);
        assert_eq!(q.get(1, 2), 0.1);
    }

    fn positive_pmf(r: usize, s: usize) -> impl Strategy<Value = BivariatePmf> {
        prop::collection::vec(0.01f64..1.0, r * s).prop_map(move |w| BivariatePmf::normalized(r, s, w).unwrap())
    }

    fn shaped_pair() -> impl Strategy<Value = (BivariatePmf, BivariatePmf)> {
        (2usize..6, 2usize..6).prop_flat_map(|(r, s)| (positive_pmf(r, s), positive_pmf(r, s)))
    }

    proptest! {
        #[test]
        fn vec_round_trip((p, _) in shaped_pair()) {
            let back = BivariatePmf::from_vec(p.r(), p.s(), &p.vec()).unwrap();
            prop_assert_eq!(&back, &p);
            let v = p.vec();
            prop_assert_eq!(BivariatePmf::from_vec(p.r(), p.s(), &v).unwrap().vec(), v);
        }

        #[test]
        fn margins_are_pmfs((p, _) in shaped_pair()) {
            let (a, b) = p.margins();
            prop_assert!((a.values().iter().sum::<f64>() - 1.0).abs() < 1e-12);
            prop_assert!((b.values().iter().sum::<f64>() - 1.0).abs() < 1e-12);
        }

        #[test]
        fn divergence_nonnegative_and_pinsker((y, x) in shaped_pair()) {
            let d = i_divergence(&y, &x).unwrap().value();
            prop_assert!(d >= 0.0);
            prop_assert!(d >= 0.5 * y.l1_distance(&x).powi(2) - 1e-15);
            prop_assert_eq!(i_divergence(&x, &x).unwrap().value(), 0.0);
            if d < 1e-24 {
                prop_assert!(y.max_abs_diff(&x) < 1e-12);
            }
        }
    }
}
