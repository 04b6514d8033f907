//! Delta-method machinery for the empirical copula p.m.f. and the estimators
//! built on it.
//!
//! Index conventions (0-based, column-major):
//!
//! * `vec`: cell `(i, j)` at `i + r·j`, length `rs`.
//! * `vec_B`: `vec` without the last cell `(r−1, s−1)`, length `rs − 1`.
//! * `vec_A`: cells with `i < r−1, j < s−1`, `(k, l)` at `k + (r−1)·l`.
//!
//! The Jacobian of `p ↦ U(p)` is `J = −K L_u⁻¹ M_p N`.

use crate::dependence::Measure;
use crate::error::{Error, Result};
use crate::families::DiscretizedFamily;
use crate::nonparametric::EmpiricalEstimate;
use crate::numerics::{lu_inverse, Matrix};
use crate::pmf::{BivariatePmf, MarginalPmf};

/// Influence matrix of an estimator: `√n(θ̂ − θ₀) ≈ V √n vec(p̂ − p)`.
/// One row per parameter.
pub type VMatrix = Matrix;

#[derive(Debug, Clone, PartialEq)]
pub struct JacobianBundle {
    pub r: usize,
    pub s: usize,
    pub u: BivariatePmf,
    pub k: Matrix,
    pub n: Matrix,
    pub l: Matrix,
    pub m: Matrix,
    pub j: Matrix,
    pub sigma_p: Matrix,
}

impl JacobianBundle {
    /// Replaces `Σ_p` by the multinomial covariance of another p.m.f.
    pub fn with_sigma(mut self, p: &BivariatePmf) -> Result<Self> {
        self.u.same_shape(p)?;
        self.sigma_p = sigma_p(p);
        Ok(self)
    }

    /// `J Σ_p Jᵀ`, the asymptotic covariance of `√n vec(u^[n] − u)`.
    pub fn copula_covariance(&self) -> Matrix {
        self.j.mul(&self.sigma_p).mul(&self.j.transpose())
    }
}

fn check_grid(r: usize, s: usize) -> Result<()> {
    if r < 2 || s < 2 {
        return Err(Error::DegenerateDimension { r, s });
    }
    Ok(())
}

fn check_positive(p: &BivariatePmf) -> Result<()> {
    match p.values().iter().position(|x| *x <= 0.0) {
        Some(k) => Err(Error::SingularSupport { i: k / p.s(), j: k % p.s() }),
        None => Ok(()),
    }
}

pub fn vec_a(u: &BivariatePmf) -> Vec<f64> {
    let (r, s) = (u.r(), u.s());
    (0..s - 1).flat_map(|l| (0..r - 1).map(move |k| (k, l))).map(|(k, l)| u.get(k, l)).collect()
}

pub fn vec_b(p: &BivariatePmf) -> Vec<f64> {
    let mut v = p.vec();
    v.pop();
    v
}

/// `rs × (r−1)(s−1)` completion matrix: block diagonal `H`, last block row `−H`.
pub fn matrix_k(r: usize, s: usize) -> Result<Matrix> {
    check_grid(r, s)?;
    let mut k = Matrix::zeros(r * s, (r - 1) * (s - 1));
    for l in 0..s - 1 {
        for i in 0..r - 1 {
            let col = i + (r - 1) * l;
            k[(i + r * l, col)] = 1.0;
            k[(r - 1 + r * l, col)] = -1.0;
            k[(i + r * (s - 1), col)] = -1.0;
            k[(r - 1 + r * (s - 1), col)] = 1.0;
        }
    }
    Ok(k)
}

/// `(rs−1) × rs` selector dropping the last cell.
pub fn matrix_n(r: usize, s: usize) -> Result<Matrix> {
    check_grid(r, s)?;
    let d = r * s;
    let mut n = Matrix::zeros(d - 1, d);
    for i in 0..d - 1 {
        n[(i, i)] = 1.0;
    }
    Ok(n)
}

/// Hessian `L_u` of the divergence in the free cells of a uniform-margin p.m.f.
///
/// Uses the completion-map denominators `1/s − Σ_g u_gl`, `1/r − Σ_h u_kh`
/// and `1/r + 1/s − 1 + Σ u_gh`, so it is exact for any point of the
/// parametrization, including margins that are uniform only to tolerance.
pub fn matrix_l(u: &BivariatePmf) -> Result<Matrix> {
    let (r, s) = (u.r(), u.s());
    check_grid(r, s)?;
    check_positive(u)?;
    let (rf, sf) = (r as f64, s as f64);
    let last_row: Vec<f64> = (0..s - 1).map(|l| 1.0 / sf - (0..r - 1).map(|g| u.get(g, l)).sum::<f64>()).collect();
    let last_col: Vec<f64> = (0..r - 1).map(|k| 1.0 / rf - (0..s - 1).map(|h| u.get(k, h)).sum::<f64>()).collect();
    let inner: f64 = vec_a(u).iter().sum();
    let corner = 1.0 / rf + 1.0 / sf - 1.0 + inner;
    Ok(assemble_l(u, &last_row, &last_col, corner))
}

/// `L_u` with the denominators replaced by `u_{r−1,l}`, `u_{k,s−1}` and
/// `u_{r−1,s−1}`; equal to [`matrix_l`] when the margins are exactly uniform.
pub fn matrix_l_simplified(u: &BivariatePmf) -> Result<Matrix> {
    let (r, s) = (u.r(), u.s());
    check_grid(r, s)?;
    check_positive(u)?;
    let last_row: Vec<f64> = (0..s - 1).map(|l| u.get(r - 1, l)).collect();
    let last_col: Vec<f64> = (0..r - 1).map(|k| u.get(k, s - 1)).collect();
    Ok(assemble_l(u, &last_row, &last_col, u.get(r - 1, s - 1)))
}

fn assemble_l(u: &BivariatePmf, last_row: &[f64], last_col: &[f64], corner: f64) -> Matrix {
    let (r, s) = (u.r(), u.s());
    let a = (r - 1) * (s - 1);
    let mut m = Matrix::zeros(a, a);
    for l in 0..s - 1 {
        for k in 0..r - 1 {
            let row = k + (r - 1) * l;
            for j in 0..s - 1 {
                for i in 0..r - 1 {
                    let mut x = 1.0 / corner;
                    if i == k && j == l {
                        x += 1.0 / u.get(k, l);
                    }
                    if j == l {
                        x += 1.0 / last_row[l];
                    }
                    if i == k {
                        x += 1.0 / last_col[k];
                    }
                    m[(row, i + (r - 1) * j)] = x;
                }
            }
        }
    }
    m
}

/// Mixed second derivative `M_p`, `(r−1)(s−1) × (rs−1)`.
pub fn matrix_m(p: &BivariatePmf) -> Result<Matrix> {
    let (r, s) = (p.r(), p.s());
    check_grid(r, s)?;
    check_positive(p)?;
    let tail = 1.0 / (1.0 - vec_b(p).iter().sum::<f64>());
    let mut m = Matrix::zeros((r - 1) * (s - 1), r * s - 1);
    for l in 0..s - 1 {
        for k in 0..r - 1 {
            let row = k + (r - 1) * l;
            for c in 0..r * s - 1 {
                m[(row, c)] = tail;
            }
            m[(row, k + r * l)] -= 1.0 / p.get(k, l);
            m[(row, r - 1 + r * l)] += 1.0 / p.get(r - 1, l);
            m[(row, k + r * (s - 1))] += 1.0 / p.get(k, s - 1);
        }
    }
    Ok(m)
}

/// `diag(vec p) − vec p vec pᵀ`.
pub fn sigma_p(p: &BivariatePmf) -> Matrix {
    let v = p.vec();
    let d = v.len();
    let mut m = Matrix::zeros(d, d);
    for a in 0..d {
        for b in 0..d {
            m[(a, b)] = if a == b { v[a] } else { 0.0 } - v[a] * v[b];
        }
    }
    m
}

/// Assembles `J_{u,p} = −K L_u⁻¹ M_p N` with `Σ_p` taken from `p`.
///
/// `u` should be `U(p)`; the formulas only need both to be strictly positive.
pub fn jacobian_j(u: &BivariatePmf, p: &BivariatePmf) -> Result<JacobianBundle> {
    u.same_shape(p)?;
    let (r, s) = (u.r(), u.s());
    let k = matrix_k(r, s)?;
    let n = matrix_n(r, s)?;
    let l = matrix_l(u)?;
    let m = matrix_m(p)?;
    let j = k.mul(&lu_inverse(&l)?).mul(&m).mul(&n).scale(-1.0);
    Ok(JacobianBundle { r, s, u: u.clone(), k, n, l, m, j, sigma_p: sigma_p(p) })
}

/// Plug-in bundle: `L`, `M` from the smoothed pair, `Σ_p` from the raw `p̂`.
pub fn plug_in_bundle(est: &EmpiricalEstimate) -> Result<JacobianBundle> {
    jacobian_j(&est.empirical_copula, &est.smoothed_p)?.with_sigma(&est.hat_p)
}

/// Inverse of `vec_B`: fills the last cell with `1 − Σ w`.
pub fn reconstruct_d(w: &[f64], r: usize, s: usize) -> Result<BivariatePmf> {
    check_grid(r, s)?;
    if w.len() != r * s - 1 {
        return Err(Error::DimensionMismatch { expected: format!("{}", r * s - 1), got: format!("{}", w.len()) });
    }
    let mut v = w.to_vec();
    v.push(1.0 - w.iter().sum::<f64>());
    check_completion(&v)?;
    BivariatePmf::from_vec(r, s, &v)
}

/// Inverse of `vec_A` on the p.m.f.s with margins `a`, `b`: completes the last
/// row and column from the margin constraints.
pub fn reconstruct_c(z: &[f64], a: &MarginalPmf, b: &MarginalPmf) -> Result<BivariatePmf> {
    let (r, s) = (a.len(), b.len());
    check_grid(r, s)?;
    if z.len() != (r - 1) * (s - 1) {
        return Err(Error::DimensionMismatch { expected: format!("{}", (r - 1) * (s - 1)), got: format!("{}", z.len()) });
    }
    let (a, b) = (a.values(), b.values());
    let mut x = vec![0.0; r * s];
    for l in 0..s - 1 {
        for k in 0..r - 1 {
            x[k * s + l] = z[k + (r - 1) * l];
        }
    }
    for k in 0..r - 1 {
        x[k * s + s - 1] = a[k] - (0..s - 1).map(|l| x[k * s + l]).sum::<f64>();
    }
    for l in 0..s {
        x[(r - 1) * s + l] = b[l] - (0..r - 1).map(|k| x[k * s + l]).sum::<f64>();
    }
    check_completion(&x)?;
    BivariatePmf::new(r, s, x)
}

fn check_completion(v: &[f64]) -> Result<()> {
    match v.iter().find(|x| !(**x > 0.0 && **x < 1.0)) {
        Some(x) => Err(Error::Precondition(format!("completed entry {x} lies outside (0, 1)"))),
        None => Ok(()),
    }
}

/// Asymptotic variance of `√n(measure(u^[n]) − measure(u))`:
/// `∇ᵀ J Σ_p Jᵀ ∇` with the gradient taken at the bundle's `u`.
pub fn moment_variance(bundle: &JacobianBundle, measure: Measure) -> Result<f64> {
    let grad = measure.grad(&bundle.u)?;
    let jt_grad = bundle.j.vec_mul(&grad);
    let sig = bundle.sigma_p.mul_vec(&jt_grad);
    Ok(jt_grad.iter().zip(&sig).map(|(a, b)| a * b).sum())
}

/// `V = ∇measure(u)ᵀ J / g'(θ₀)` for the method-of-moments estimator.
pub fn mom_v(bundle: &JacobianBundle, fam: &DiscretizedFamily, theta0: f64, measure: Measure) -> Result<VMatrix> {
    let g_prime = fam.g_prime(theta0, measure)?;
    if !g_prime.is_finite() || g_prime.abs() < f64::MIN_POSITIVE {
        return Err(Error::DegenerateEstimator(format!("g' vanishes at θ = {theta0}")));
    }
    let grad = measure.grad(&bundle.u)?;
    let row = bundle.j.vec_mul(&grad).into_iter().map(|x| x / g_prime).collect();
    Ok(Matrix::from_row_major(1, bundle.r * bundle.s, row))
}

/// `V = {E(ℓ̇ℓ̇ᵀ)}⁻¹ ℓ̇ J` for the pseudo-likelihood estimator, with
/// `ℓ̇_ij = u̇_ij / u_ij` at `θ₀`.
pub fn mpl_v(bundle: &JacobianBundle, fam: &DiscretizedFamily, theta0: f64) -> Result<VMatrix> {
    let u = fam.discretize(theta0)?;
    check_positive(&u)?;
    let score: Vec<f64> = u.vec().iter().zip(fam.dtheta_vec(theta0)?).map(|(p, d)| d / p).collect();
    let info: f64 = u.vec().iter().zip(&score).map(|(p, l)| p * l * l).sum();
    if !info.is_finite() || info <= 0.0 {
        return Err(Error::DegenerateEstimator(format!("zero Fisher information at θ = {theta0}")));
    }
    let row = bundle.j.vec_mul(&score).into_iter().map(|x| x / info).collect();
    Ok(Matrix::from_row_major(1, bundle.r * bundle.s, row))
}

/// `V` for any of the four estimators.
pub fn estimator_v(
    bundle: &JacobianBundle,
    fam: &DiscretizedFamily,
    theta0: f64,
    estimator: crate::estimators::Estimator,
) -> Result<VMatrix> {
    match estimator.measure() {
        Some(m) => mom_v(bundle, fam, theta0, m),
        None => mpl_v(bundle, fam, theta0),
    }
}

/// Asymptotic variance `V Σ_p Vᵀ` of `√n(θ̂ − θ₀)` (one-parameter case).
pub fn estimator_variance(bundle: &JacobianBundle, v: &VMatrix) -> f64 {
    let row = v.row(0);
    let sig = bundle.sigma_p.mul_vec(row);
    row.iter().zip(&sig).map(|(a, b)| a * b).sum()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dependence::yule_grad;
    use crate::families::Family;
    use crate::ipfp::{copula_pmf, IpfpConfig};
    use crate::numerics::{central_diff, sym_eigenvalues};
    use proptest::prelude::*;

    fn tight() -> IpfpConfig {
        IpfpConfig::new(1e-15, 100_000).unwrap()
    }

    fn copula_of(p: &BivariatePmf) -> BivariatePmf {
        copula_pmf(p, &tight()).unwrap().fitted
    }

    fn positive(r: usize, s: usize) -> impl Strategy<Value = BivariatePmf> {
        prop::collection::vec(0.05f64..1.0, r * s).prop_map(move |w| BivariatePmf::normalized(r, s, w).unwrap())
    }

    fn tangent(r: usize, s: usize) -> impl Strategy<Value = Vec<f64>> {
        prop::collection::vec(-1.0f64..1.0, r * s).prop_map(|mut h| {
            let mean = h.iter().sum::<f64>() / h.len() as f64;
            h.iter_mut().for_each(|x| *x -= mean);
            h
        })
    }

    #[test]
    fn k_and_n_for_two_by_two() {
        let k = matrix_k(2, 2).unwrap();
        assert_eq!(k.as_slice(), &[1.0, -1.0, -1.0, 1.0]);
        let n = matrix_n(2, 2).unwrap();
        assert_eq!((n.rows(), n.cols()), (3, 4));
        assert_eq!(n.mul_vec(&[1.0, 2.0, 3.0, 4.0]), vec![1.0, 2.0, 3.0]);
        assert!(matrix_k(1, 3).is_err());
    }

    #[test]
    fn l_and_m_at_independence() {
        let pi = BivariatePmf::uniform(2, 2);
        assert!((matrix_l(&pi).unwrap()[(0, 0)] - 16.0).abs() < 1e-12);
        let m = matrix_m(&pi).unwrap();
        for (x, want) in m.as_slice().iter().zip([0.0, 8.0, 8.0]) {
            assert!((x - want).abs() < 1e-12);
        }
    }

    #[test]
    fn m_two_by_two_by_hand() {
        let p = BivariatePmf::from_rows(&[vec![0.1, 0.2], vec![0.3, 0.4]]).unwrap();
        let m = matrix_m(&p).unwrap();
        let (p11, p12, p21, p22) = (0.1, 0.2, 0.3, 0.4);
        let want = [-1.0 / p11 + 1.0 / p22, 1.0 / p21 + 1.0 / p22, 1.0 / p12 + 1.0 / p22];
        for (x, w) in m.as_slice().iter().zip(want) {
            assert!((x - w).abs() < 1e-10, "{x} vs {w}");
        }
    }

    #[test]
    fn literal_and_simplified_l_agree() {
        for f in [Family::Clayton, Family::Frank, Family::SurvivalJoe] {
            let u = DiscretizedFamily::new(f, 4, 5).unwrap().discretize(f.tau_to_theta(0.4).unwrap()).unwrap();
            let a = matrix_l(&u).unwrap();
            let b = matrix_l_simplified(&u).unwrap();
            let rel = a.sub(&b).max_abs() / a.max_abs();
            assert!(rel < 1e-12, "{f:?}: {rel}");
            assert!(a.sub(&a.transpose()).max_abs() == 0.0);
        }
    }

    #[test]
    fn completion_maps_invert_vectorizations() {
        let p = BivariatePmf::from_rows(&[vec![0.1, 0.2, 0.05], vec![0.3, 0.15, 0.2]]).unwrap();
        assert!(reconstruct_d(&vec_b(&p), 2, 3).unwrap().max_abs_diff(&p) < 1e-15);
        let u = DiscretizedFamily::new(Family::Frank, 3, 4).unwrap().discretize(3.0).unwrap();
        let (a, b) = (MarginalPmf::uniform(3), MarginalPmf::uniform(4));
        assert!(reconstruct_c(&vec_a(&u), &a, &b).unwrap().max_abs_diff(&u) < 1e-15);
        assert!(reconstruct_c(&[0.9, 0.0, 0.0, 0.0, 0.0, 0.0], &a, &b).is_err());
    }

    #[test]
    fn k_completes_differences() {
        let g = DiscretizedFamily::new(Family::Clayton, 3, 4).unwrap();
        let (y, y2) = (g.discretize(1.0).unwrap(), g.discretize(3.0).unwrap());
        let z: Vec<f64> = vec_a(&y).iter().zip(vec_a(&y2)).map(|(a, b)| a - b).collect();
        let full: Vec<f64> = y.vec().iter().zip(y2.vec()).map(|(a, b)| a - b).collect();
        let kz = matrix_k(3, 4).unwrap().mul_vec(&z);
        assert!(kz.iter().zip(&full).all(|(a, b)| (a - b).abs() < 1e-14));
    }

    #[test]
    fn image_of_j_is_tangent_to_uniform_margins() {
        let u = DiscretizedFamily::new(Family::Joe, 3, 4).unwrap().discretize(2.0).unwrap();
        let b = jacobian_j(&u, &u).unwrap();
        let h: Vec<f64> = (0..12).map(|k| ((k * 7) % 5) as f64 - 2.0).collect();
        let jh = BivariatePmf::new_unchecked(3, 4, {
            let v = b.j.mul_vec(&h);
            let mut rm = vec![0.0; 12];
            for j in 0..4 {
                for i in 0..3 {
                    rm[i * 4 + j] = v[i + 3 * j];
                }
            }
            rm
        });
        assert!(jh.row_sums().iter().chain(jh.col_sums().iter()).all(|x| x.abs() < 1e-12));
    }

    #[test]
    fn permutation_equivariance_at_independence() {
        let pi = BivariatePmf::uniform(3, 3);
        let j = jacobian_j(&pi, &pi).unwrap().j;
        let h: Vec<f64> = vec![0.3, -0.1, 0.2, -0.4, 0.1, 0.0, 0.05, -0.05, -0.1];
        let sigma = [2usize, 0, 1];
        let permute = |v: &[f64]| -> Vec<f64> { (0..9).map(|c| v[sigma[c % 3] + 3 * (c / 3)]).collect() };
        let lhs = j.mul_vec(&permute(&h));
        let rhs = permute(&j.mul_vec(&h));
        assert!(lhs.iter().zip(&rhs).all(|(a, b)| (a - b).abs() < 1e-12));
    }

    #[test]
    fn sigma_annihilates_ones() {
        let p = BivariatePmf::from_rows(&[vec![0.1, 0.2, 0.05], vec![0.3, 0.15, 0.2]]).unwrap();
        let s = sigma_p(&p);
        assert!(s.mul_vec(&[1.0; 6]).iter().all(|x| x.abs() < 1e-12));
    }

    #[test]
    fn rho_v_matches_closed_form() {
        let (r, s) = (4, 3);
        let fam = DiscretizedFamily::new(Family::GumbelHougaard, r, s).unwrap();
        let theta = 2.0;
        let u = fam.discretize(theta).unwrap();
        let p = BivariatePmf::from_rows(&[
            vec![0.05, 0.10, 0.02],
            vec![0.08, 0.12, 0.06],
            vec![0.04, 0.15, 0.10],
            vec![0.03, 0.05, 0.20],
        ])
        .unwrap();
        let bundle = jacobian_j(&copula_of(&p), &p).unwrap();
        let v = mom_v(&bundle, &fam, theta, Measure::Rho).unwrap();
        let c = 12.0 / (((r + 1) * (s + 1) * (r - 1) * (s - 1)) as f64).sqrt();
        let ud = fam.dtheta_vec(theta).unwrap();
        let ij: Vec<f64> = (0..s).flat_map(|j| (0..r).map(move |i| ((i + 1) * (j + 1)) as f64)).collect();
        let g_prime = c * ij.iter().zip(&ud).map(|(a, b)| a * b).sum::<f64>();
        let want: Vec<f64> = bundle.j.vec_mul(&ij).iter().map(|x| c * x / g_prime).collect();
        assert!(v.row(0).iter().zip(&want).all(|(a, b)| (a - b).abs() < 1e-10));
        // g' via the gradient matches a finite difference of g.
        let fd = central_diff(|t| fam.g_moment(t, Measure::Rho).unwrap(), theta, 1e-5);
        assert!((fd - g_prime).abs() < 1e-5);
        assert!(u.is_strictly_positive());
    }

    #[test]
    fn v_is_invariant_to_joint_rescaling() {
        let fam = DiscretizedFamily::new(Family::Frank, 3, 3).unwrap();
        let theta = 4.0;
        let u = fam.discretize(theta).unwrap();
        let bundle = jacobian_j(&u, &u).unwrap();
        let v = mom_v(&bundle, &fam, theta, Measure::Rho).unwrap();
        let grad: Vec<f64> = yule_grad(&u).unwrap().iter().map(|x| 2.0 * x).collect();
        let g2 = 2.0 * fam.g_prime(theta, Measure::Rho).unwrap();
        let v2: Vec<f64> = bundle.j.vec_mul(&grad).iter().map(|x| x / g2).collect();
        assert!(v.row(0).iter().zip(&v2).all(|(a, b)| (a - b).abs() < 1e-12));
    }

    #[test]
    fn mpl_v_scalar_reduction() {
        let fam = DiscretizedFamily::new(Family::Clayton, 3, 3).unwrap();
        let theta = 1.5;
        let u = fam.discretize(theta).unwrap();
        let bundle = jacobian_j(&u, &u).unwrap();
        let v = mpl_v(&bundle, &fam, theta).unwrap();
        let ud = fam.dtheta_vec(theta).unwrap();
        let uv = u.vec();
        let mean_score: f64 = uv.iter().zip(&ud).map(|(p, d)| p * (d / p)).sum();
        assert!(mean_score.abs() < 1e-10);
        let info: f64 = uv.iter().zip(&ud).map(|(p, d)| d * d / p).sum();
        for c in 0..9 {
            let want: f64 = (0..9).map(|a| ud[a] / uv[a] * bundle.j[(a, c)]).sum::<f64>() / info;
            assert!((v[(0, c)] - want).abs() < 1e-12);
        }
    }

    #[test]
    fn variance_at_independence_uses_pi() {
        let pi = BivariatePmf::uniform(3, 3);
        let bundle = jacobian_j(&pi, &pi).unwrap();
        let var = moment_variance(&bundle, Measure::Rho).unwrap();
        let g = yule_grad(&pi).unwrap();
        let cov = bundle.copula_covariance();
        let direct: f64 = (0..9).map(|a| (0..9).map(|b| g[a] * cov[(a, b)] * g[b]).sum::<f64>()).sum();
        assert!((var - direct).abs() < 1e-12 && var > 0.0);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(48))]

        #[test]
        fn l_dominates_identity(p in positive(3, 4)) {
            let u = copula_of(&p);
            let eig = sym_eigenvalues(&matrix_l(&u).unwrap()).unwrap();
            prop_assert!(*eig.last().unwrap() >= 1.0 - 1e-8);
        }

        #[test]
        fn literal_l_is_symmetric(p in positive(4, 3)) {
            let l = matrix_l(&copula_of(&p)).unwrap();
            prop_assert!(l.sub(&l.transpose()).max_abs() < 1e-12 * l.max_abs());
        }

        #[test]
        fn jacobian_matches_finite_differences(p in positive(3, 3), h in tangent(3, 3)) {
            let t = 1e-6;
            let u = copula_of(&p);
            let shifted = BivariatePmf::new(3, 3, p.values().iter().zip(row_major(&h, 3, 3)).map(|(a, b)| a + t * b).collect()).unwrap();
            let fd: Vec<f64> = copula_of(&shifted).vec().iter().zip(u.vec()).map(|(a, b)| (a - b) / t).collect();
            let jh = jacobian_j(&u, &p).unwrap().j.mul_vec(&h);
            let err = fd.iter().zip(&jh).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
            prop_assert!(err < 1e-4, "{}", err);
        }

        #[test]
        fn variances_are_nonnegative(p in positive(3, 4)) {
            let bundle = jacobian_j(&copula_of(&p), &p).unwrap();
            for m in Measure::ALL {
                prop_assert!(moment_variance(&bundle, m).unwrap() >= -1e-12);
            }
        }
    }

    /// Column-major `vec` to row-major storage.
    fn row_major(v: &[f64], r: usize, s: usize) -> Vec<f64> {
        let mut out = vec![0.0; r * s];
        for j in 0..s {
            for i in 0..r {
                out[i * s + j] = v[i + r * j];
            }
        }
        out
    }
}
