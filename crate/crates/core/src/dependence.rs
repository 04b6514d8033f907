//! Dependence measures of a copula p.m.f. and their gradients.
//!
//! For `(U, V)` with p.m.f. `u` on labels `1..=r` × `1..=s`:
//!
//! | measure | formula |
//! |---------|---------|
//! | κ (concordance) | `2 Σ_{i<i', j<j'} u_ij u_i'j'` |
//! | δ (discordance) | `2 Σ_{i>i', j<j'} u_ij u_i'j'` |
//! | Yule's ρ | `Cor(U, V) = 12 (Σ ij u_ij − (r+1)(s+1)/4) / √((r²−1)(s²−1))` |
//! | Goodman–Kruskal γ | `(κ − δ) / (κ + δ)` |
//! | Kendall's τ_b | `(κ − δ) / √((r−1)(s−1)/(rs))` |
//!
//! The closed forms for ρ and τ_b assume uniform margins. Gradients are taken
//! on the full grid and returned in column-major order.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::pmf::BivariatePmf;

/// One of the three moment-type measures used for estimation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Measure {
    Rho,
    Gamma,
    Tau,
}

impl Measure {
    pub const ALL: [Measure; 3] = [Measure::Rho, Measure::Gamma, Measure::Tau];

    pub fn name(self) -> &'static str {
        match self {
            Measure::Rho => "rho",
            Measure::Gamma => "gamma",
            Measure::Tau => "tau",
        }
    }

    pub fn value(self, u: &BivariatePmf) -> Result<f64> {
        match self {
            Measure::Rho => yule(u),
            Measure::Gamma => gamma(u),
            Measure::Tau => tau_b(u),
        }
    }

    pub fn grad(self, u: &BivariatePmf) -> Result<Vec<f64>> {
        match self {
            Measure::Rho => yule_grad(u),
            Measure::Gamma => gamma_grad(u),
            Measure::Tau => tau_grad(u),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DependenceSummary {
    pub rho: f64,
    pub gamma: f64,
    pub tau_b: f64,
    pub kappa: f64,
    pub delta: f64,
}

pub fn summary(u: &BivariatePmf) -> Result<DependenceSummary> {
    let (kappa, delta) = concordance(u);
    Ok(DependenceSummary { rho: yule(u)?, gamma: gamma(u)?, tau_b: tau_b(u)?, kappa, delta })
}

fn check_dims(u: &BivariatePmf) -> Result<()> {
    if u.r() < 2 || u.s() < 2 {
        return Err(Error::DegenerateDimension { r: u.r(), s: u.s() });
    }
    Ok(())
}

fn yule_scale(r: usize, s: usize) -> f64 {
    let (r, s) = (r as f64, s as f64);
    12.0 / ((r * r - 1.0) * (s * s - 1.0)).sqrt()
}

/// Yule's coefficient: the correlation of the labels under `u`.
pub fn yule(u: &BivariatePmf) -> Result<f64> {
    check_dims(u)?;
    let (r, s) = (u.r(), u.s());
    let mut moment = 0.0;
    for i in 0..r {
        for j in 0..s {
            moment += ((i + 1) * (j + 1)) as f64 * u.get(i, j);
        }
    }
    let centre = ((r + 1) * (s + 1)) as f64 / 4.0;
    Ok(yule_scale(r, s) * (moment - centre))
}

/// Gradient of [`yule`]: entry `(i, j)` is `12 ij / √((r²−1)(s²−1))` (1-based labels).
pub fn yule_grad(u: &BivariatePmf) -> Result<Vec<f64>> {
    check_dims(u)?;
    let (r, s) = (u.r(), u.s());
    let c = yule_scale(r, s);
    let mut g = Vec::with_capacity(r * s);
    for j in 0..s {
        for i in 0..r {
            g.push(c * ((i + 1) * (j + 1)) as f64);
        }
    }
    Ok(g)
}

/// Sums of `u` strictly to the south-east and north-east of every cell.
///
/// `se[i][j] = Σ_{i'>i, j'>j} u_i'j'` and `ne[i][j] = Σ_{i'<i, j'>j} u_i'j'`,
/// both row-major.
fn quadrant_sums(u: &BivariatePmf) -> (Vec<f64>, Vec<f64>, Vec<f64>, Vec<f64>) {
    let (r, s) = (u.r(), u.s());
    // Inclusive prefix sums P[i][j] = Σ_{i' ≤ i, j' ≤ j}, padded by one.
    let w = s + 1;
    let mut p = vec![0.0; (r + 1) * w];
    for i in 0..r {
        for j in 0..s {
            p[(i + 1) * w + j + 1] = u.get(i, j) + p[i * w + j + 1] + p[(i + 1) * w + j] - p[i * w + j];
        }
    }
    // Mass of rows [i0, i1) × cols [j0, j1).
    let block = |i0: usize, i1: usize, j0: usize, j1: usize| p[i1 * w + j1] - p[i0 * w + j1] - p[i1 * w + j0] + p[i0 * w + j0];
    let mut se = vec![0.0; r * s];
    let mut nw = vec![0.0; r * s];
    let mut ne = vec![0.0; r * s];
    let mut sw = vec![0.0; r * s];
    for i in 0..r {
        for j in 0..s {
            se[i * s + j] = block(i + 1, r, j + 1, s);
            nw[i * s + j] = block(0, i, 0, j);
            ne[i * s + j] = block(0, i, j + 1, s);
            sw[i * s + j] = block(i + 1, r, 0, j);
        }
    }
    (se, nw, ne, sw)
}

/// Concordance and discordance probabilities `(κ, δ)` of two independent draws.
pub fn concordance(u: &BivariatePmf) -> (f64, f64) {
    let (se, _, ne, _) = quadrant_sums(u);
    let v = u.values();
    let kappa = 2.0 * v.iter().zip(&se).map(|(a, b)| a * b).sum::<f64>();
    let delta = 2.0 * v.iter().zip(&ne).map(|(a, b)| a * b).sum::<f64>();
    (kappa, delta)
}

/// Gradients of `(κ, δ)`, column-major.
///
/// `∂κ/∂u_ab = 2 Σ 1{(a−i')(b−j') > 0} u_i'j'`, and likewise for δ with `< 0`.
pub fn concordance_grad(u: &BivariatePmf) -> (Vec<f64>, Vec<f64>) {
    let (r, s) = (u.r(), u.s());
    let (se, nw, ne, sw) = quadrant_sums(u);
    let mut dk = Vec::with_capacity(r * s);
    let mut dd = Vec::with_capacity(r * s);
    for j in 0..s {
        for i in 0..r {
            let k = i * s + j;
            dk.push(2.0 * (se[k] + nw[k]));
            dd.push(2.0 * (ne[k] + sw[k]));
        }
    }
    (dk, dd)
}

/// Goodman–Kruskal γ.
pub fn gamma(u: &BivariatePmf) -> Result<f64> {
    let (k, d) = concordance(u);
    if k + d <= 0.0 {
        return Err(Error::UndefinedGamma);
    }
    Ok((k - d) / (k + d))
}

pub fn gamma_grad(u: &BivariatePmf) -> Result<Vec<f64>> {
    let (k, d) = concordance(u);
    if k + d <= 0.0 {
        return Err(Error::UndefinedGamma);
    }
    let (dk, dd) = concordance_grad(u);
    let c = 2.0 / ((k + d) * (k + d));
    Ok(dk.iter().zip(&dd).map(|(a, b)| c * (d * a - k * b)).collect())
}

fn tau_denominator(r: usize, s: usize) -> f64 {
    (((r - 1) * (s - 1)) as f64 / (r * s) as f64).sqrt()
}

/// Kendall's τ_b, with the uniform-margin tie correction.
pub fn tau_b(u: &BivariatePmf) -> Result<f64> {
    check_dims(u)?;
    let (k, d) = concordance(u);
    Ok((k - d) / tau_denominator(u.r(), u.s()))
}

pub fn tau_grad(u: &BivariatePmf) -> Result<Vec<f64>> {
    check_dims(u)?;
    let (dk, dd) = concordance_grad(u);
    let c = tau_denominator(u.r(), u.s());
    Ok(dk.iter().zip(&dd).map(|(a, b)| (a - b) / c).collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ipfp::{copula_pmf, IpfpConfig};
    use proptest::prelude::*;

    fn diagonal(r: usize) -> BivariatePmf {
        let mut v = vec![0.0; r * r];
        for i in 0..r {
            v[i * r + i] = 1.0 / r as f64;
        }
        BivariatePmf::new(r, r, v).unwrap()
    }

    /// Concordance by enumerating every ordered pair of cells.
    fn brute_force(u: &BivariatePmf) -> (f64, f64) {
        let (r, s) = (u.r() as i64, u.s() as i64);
        let (mut k, mut d) = (0.0, 0.0);
        for i in 0..r {
            for j in 0..s {
                for i2 in 0..r {
                    for j2 in 0..s {
                        let w = u.get(i as usize, j as usize) * u.get(i2 as usize, j2 as usize);
                        let sign = (i - i2) * (j - j2);
                        if sign > 0 {
                            k += w;
                        } else if sign < 0 {
                            d += w;
                        }
                    }
                }
            }
        }
        (k, d)
    }

    /// Correlation from first principles: moments of the labels.
    fn pearson(u: &BivariatePmf) -> f64 {
        let (mut eu, mut ev, mut euu, mut evv, mut euv) = (0.0, 0.0, 0.0, 0.0, 0.0);
        for i in 0..u.r() {
            for j in 0..u.s() {
                let (a, b, p) = ((i + 1) as f64, (j + 1) as f64, u.get(i, j));
                eu += a * p;
                ev += b * p;
                euu += a * a * p;
                evv += b * b * p;
                euv += a * b * p;
            }
        }
        (euv - eu * ev) / ((euu - eu * eu) * (evv - ev * ev)).sqrt()
    }

    #[test]
    fn independence_and_comonotone() {
        let pi = BivariatePmf::uniform(4, 3);
        assert!(yule(&pi).unwrap().abs() < 1e-15);
        assert!(gamma(&pi).unwrap().abs() < 1e-15);
        assert!(tau_b(&pi).unwrap().abs() < 1e-15);
        for r in 2..7 {
            assert!((yule(&diagonal(r)).unwrap() - 1.0).abs() < 1e-14);
        }
        let d2 = diagonal(2);
        assert_eq!(concordance(&d2), (0.5, 0.0));
        assert_eq!(gamma(&d2).unwrap(), 1.0);
        assert!((tau_b(&d2).unwrap() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn two_by_two_independence_pairs() {
        let (k, d) = concordance(&BivariatePmf::uniform(2, 2));
        assert_eq!((k, d), (0.125, 0.125));
        assert_eq!(brute_force(&BivariatePmf::uniform(2, 2)), (0.125, 0.125));
    }

    #[test]
    fn yule_gradient_weights() {
        let g = yule_grad(&BivariatePmf::uniform(3, 4)).unwrap();
        let c = 12.0 / (8.0f64 * 15.0).sqrt();
        // column-major: (i, j) = (2, 3) 1-based sits at index 1 + 3·2.
        assert!((g[7] - c * 6.0).abs() < 1e-14);
        let dir = [1.0, -1.0, -1.0, 1.0]; // e11 - e21 - e12 + e22 in column-major order
        let g2 = yule_grad(&BivariatePmf::uniform(2, 2)).unwrap();
        assert!(g2.iter().zip(dir).map(|(a, b)| a * b).sum::<f64>() > 0.0);
    }

    #[test]
    fn degenerate_cases() {
        let row = BivariatePmf::new(1, 3, vec![0.2, 0.3, 0.5]).unwrap();
        assert!(matches!(yule(&row), Err(Error::DegenerateDimension { .. })));
        let point = BivariatePmf::new(2, 2, vec![1.0, 0.0, 0.0, 0.0]).unwrap();
        assert_eq!(gamma(&point), Err(Error::UndefinedGamma));
    }

    fn copula(r: usize, s: usize) -> impl Strategy<Value = BivariatePmf> {
        prop::collection::vec(0.02f64..1.0, r * s).prop_map(move |w| {
            let p = BivariatePmf::normalized(r, s, w).unwrap();
            copula_pmf(&p, &IpfpConfig { epsilon: 1e-15, max_iterations: 10_000 }).unwrap().fitted
        })
    }

    fn any_copula() -> impl Strategy<Value = BivariatePmf> {
        (2usize..6, 2usize..6).prop_flat_map(|(r, s)| copula(r, s))
    }

    /// Random direction with zero row and column sums.
    fn tangent(r: usize, s: usize, seed: &[f64]) -> Vec<f64> {
        let mut h = seed.to_vec();
        for _ in 0..50 {
            for i in 0..r {
                let m = (0..s).map(|j| h[i + r * j]).sum::<f64>() / s as f64;
                (0..s).for_each(|j| h[i + r * j] -= m);
            }
            for j in 0..s {
                let m = (0..r).map(|i| h[i + r * j]).sum::<f64>() / r as f64;
                (0..r).for_each(|i| h[i + r * j] -= m);
            }
        }
        h
    }

    fn shifted(u: &BivariatePmf, h: &[f64], t: f64) -> BivariatePmf {
        let v: Vec<f64> = u.vec().iter().zip(h).map(|(a, b)| a + t * b).collect();
        BivariatePmf::from_vec(u.r(), u.s(), &v).unwrap()
    }

    fn check_gradient(m: Measure, u: &BivariatePmf, seed: &[f64]) -> std::result::Result<(), TestCaseError> {
        let h = tangent(u.r(), u.s(), &seed[..u.r() * u.s()]);
        let t = 1e-6;
        let fd = (m.value(&shifted(u, &h, t)).unwrap() - m.value(&shifted(u, &h, -t)).unwrap()) / (2.0 * t);
        let an: f64 = m.grad(u).unwrap().iter().zip(&h).map(|(a, b)| a * b).sum();
        prop_assert!((fd - an).abs() <= 1e-5 * an.abs().max(1.0), "{m:?}: fd {fd} analytic {an}");
        Ok(())
    }

    proptest! {
        #[test]
        fn concordance_matches_pair_enumeration(u in any_copula()) {
            let (k, d) = concordance(&u);
            let (bk, bd) = brute_force(&u);
            prop_assert!((k - bk).abs() < 1e-14 && (d - bd).abs() < 1e-14);
            prop_assert!(k + d <= 1.0 + 1e-15);
        }

        #[test]
        fn yule_is_pearson_correlation(u in any_copula()) {
            prop_assert!((yule(&u).unwrap() - pearson(&u)).abs() < 1e-12);
        }

        #[test]
        fn gamma_dominates_tau(u in any_copula()) {
            let g = gamma(&u).unwrap();
            let t = tau_b(&u).unwrap();
            prop_assert!(g.abs() + 1e-12 >= t.abs());
            prop_assert!(t.abs() <= 1.0 && g.abs() <= 1.0);
        }

        #[test]
        fn gradients_match_finite_differences(
            u in any_copula(),
            seed in prop::collection::vec(-1.0f64..1.0, 25),
        ) {
            for m in Measure::ALL {
                check_gradient(m, &u, &seed)?;
            }
        }
    }

    #[test]
    fn gamma_dominates_tau_over_many_copulas() {
        let mut stream = crate::numerics::RngStream::new(17, 0);
        let cfg = IpfpConfig { epsilon: 1e-13, max_iterations: 10_000 };
        for k in 0..1000 {
            let (r, s) = (2 + k % 4, 2 + (k / 4) % 5);
            let w: Vec<f64> = (0..r * s).map(|_| 0.01 + stream.uniform()).collect();
            let u = copula_pmf(&BivariatePmf::normalized(r, s, w).unwrap(), &cfg).unwrap().fitted;
            assert!(gamma(&u).unwrap().abs() + 1e-12 >= tau_b(&u).unwrap().abs());
        }
    }
}
