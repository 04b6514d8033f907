//! One-parameter copula families and their discretization on an `r × s` grid.
//!
//! A copula `C_θ` induces the copula p.m.f.
//!
//! ```text
//! u_ij = C(i/r, j/s) − C(i/r, (j−1)/s) − C((i−1)/r, j/s) + C((i−1)/r, (j−1)/s)
//! ```
//!
//! with 1-based `i, j`. Its margins are exactly uniform by telescoping.
//!
//! | family | `C_θ(u, v)` | standard domain | clipped domain |
//! |--------|-------------|-----------------|----------------|
//! | Clayton | `(u^−θ + v^−θ − 1)^(−1/θ)` | θ > 0 | [1e-4, 50] |
//! | Gumbel–Hougaard | `exp(−((−ln u)^θ + (−ln v)^θ)^(1/θ))` | θ ≥ 1 | [1 + 1e-4, 50] |
//! | Frank | `−ln(1 + (e^−θu − 1)(e^−θv − 1)/(e^−θ − 1))/θ` | θ ∈ ℝ (0 is independence) | [−50, 50] |
//! | Joe | `1 − ((1−u)^θ + (1−v)^θ − (1−u)^θ(1−v)^θ)^(1/θ)` | θ ≥ 1 | [1 + 1e-4, 50] |
//! | Plackett | `(S − √(S² − 4θ(θ−1)uv)) / (2(θ−1))`, `S = 1 + (θ−1)(u+v)` | θ > 0 | [1e-4, 1e4] |
//!
//! Survival versions use `C̄(u, v) = u + v − 1 + C(1−u, 1−v)`; their discretized
//! grids are the base grids rotated by 180°.

use serde::{Deserialize, Serialize};

use crate::dependence::Measure;
use crate::error::{Error, Result};
use crate::numerics::{brent_root, Matrix, Quadrature};
use crate::pmf::BivariatePmf;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Family {
    #[serde(rename = "clayton")]
    Clayton,
    #[serde(rename = "gumbel")]
    GumbelHougaard,
    #[serde(rename = "frank")]
    Frank,
    #[serde(rename = "joe")]
    Joe,
    #[serde(rename = "plackett")]
    Plackett,
    #[serde(rename = "surv-clayton")]
    SurvivalClayton,
    #[serde(rename = "surv-gumbel")]
    SurvivalGumbelHougaard,
    #[serde(rename = "surv-joe")]
    SurvivalJoe,
}

impl Family {
    pub const ALL: [Family; 8] = [
        Family::Clayton,
        Family::GumbelHougaard,
        Family::Joe,
        Family::Frank,
        Family::Plackett,
        Family::SurvivalClayton,
        Family::SurvivalGumbelHougaard,
        Family::SurvivalJoe,
    ];

    /// Command-line name.
    pub fn name(self) -> &'static str {
        match self {
            Family::Clayton => "clayton",
            Family::GumbelHougaard => "gumbel",
            Family::Frank => "frank",
            Family::Joe => "joe",
            Family::Plackett => "plackett",
            Family::SurvivalClayton => "surv-clayton",
            Family::SurvivalGumbelHougaard => "surv-gumbel",
            Family::SurvivalJoe => "surv-joe",
        }
    }

    /// Short label used in tables.
    pub fn abbreviation(self) -> &'static str {
        match self {
            Family::Clayton => "Cl",
            Family::GumbelHougaard => "GH",
            Family::Frank => "F",
            Family::Joe => "J",
            Family::Plackett => "P",
            Family::SurvivalClayton => "sCl",
            Family::SurvivalGumbelHougaard => "sGH",
            Family::SurvivalJoe => "sJ",
        }
    }

    pub fn from_name(name: &str) -> Option<Family> {
        Family::ALL.into_iter().find(|f| f.name() == name)
    }

    /// The family a survival family rotates; identity otherwise.
    pub fn base(self) -> Family {
        match self {
            Family::SurvivalClayton => Family::Clayton,
            Family::SurvivalGumbelHougaard => Family::GumbelHougaard,
            Family::SurvivalJoe => Family::Joe,
            f => f,
        }
    }

    pub fn is_survival(self) -> bool {
        self.base() != self
    }

    /// Closed standard parameter range, with infinite ends where unbounded.
    ///
    /// Open ends (Clayton and Plackett at 0) are reported as their limit
    /// value; [`Family::contains`] excludes them.
    pub fn domain(self) -> (f64, f64) {
        match self.base() {
            Family::Clayton | Family::Plackett => (0.0, f64::INFINITY),
            Family::GumbelHougaard | Family::Joe => (1.0, f64::INFINITY),
            _ => (f64::NEG_INFINITY, f64::INFINITY),
        }
    }

    pub fn contains(self, theta: f64) -> bool {
        let (lo, hi) = self.domain();
        match self.base() {
            Family::Clayton | Family::Plackett => theta > lo && theta < hi,
            _ => theta.is_finite() && theta >= lo && theta <= hi,
        }
    }

    /// Compact interval searched by the estimators.
    pub fn clipped_domain(self) -> (f64, f64) {
        match self.base() {
            Family::Clayton => (1e-4, 50.0),
            Family::GumbelHougaard | Family::Joe => (1.0 + 1e-4, 50.0),
            Family::Frank => (-50.0, 50.0),
            Family::Plackett => (1e-4, 1e4),
            _ => unreachable!("base family"),
        }
    }

    /// Whether `∂C/∂θ` has a closed form (otherwise finite differences).
    pub fn has_analytic_dtheta(self) -> bool {
        matches!(self.base(), Family::Clayton | Family::GumbelHougaard | Family::Frank)
    }

    fn check(self, theta: f64) -> Result<()> {
        if self.contains(theta) {
            Ok(())
        } else {
            Err(Error::Domain { family: self.name().into(), theta })
        }
    }

    /// The copula `C_θ(u, v)`.
    pub fn cdf(self, theta: f64, u: f64, v: f64) -> Result<f64> {
        self.check(theta)?;
        Ok(self.cdf_unchecked(theta, u, v))
    }

    fn cdf_unchecked(self, theta: f64, u: f64, v: f64) -> f64 {
        if self.is_survival() {
            if u <= 0.0 || v <= 0.0 {
                return 0.0;
            }
            return (u + v - 1.0 + self.base().cdf_unchecked(theta, 1.0 - u, 1.0 - v)).max(0.0);
        }
        if u <= 0.0 || v <= 0.0 {
            return 0.0;
        }
        if u >= 1.0 {
            return v.min(1.0);
        }
        if v >= 1.0 {
            return u;
        }
        base_cdf(self, theta, u, v)
    }

    /// `∂C_θ(u, v)/∂θ` in closed form, where available.
    pub fn dcdf_dtheta(self, theta: f64, u: f64, v: f64) -> Result<Option<f64>> {
        self.check(theta)?;
        if !self.has_analytic_dtheta() {
            return Ok(None);
        }
        if self.is_survival() {
            return Ok(Some(if u <= 0.0 || v <= 0.0 { 0.0 } else { base_dcdf(self.base(), theta, 1.0 - u, 1.0 - v) }));
        }
        Ok(Some(base_dcdf(self, theta, u, v)))
    }

    /// Kendall's tau of the continuous copula.
    pub fn kendall_tau(self, theta: f64) -> Result<f64> {
        self.check(theta)?;
        Ok(match self.base() {
            Family::Clayton => theta / (theta + 2.0),
            Family::GumbelHougaard => 1.0 - 1.0 / theta,
            Family::Frank => frank_tau(theta),
            Family::Joe => joe_tau(theta),
            Family::Plackett => plackett_tau(theta),
            _ => unreachable!("base family"),
        })
    }

    /// Parameter with continuous-copula Kendall's tau equal to `tau`.
    pub fn tau_to_theta(self, tau: f64) -> Result<f64> {
        let unattainable = || Error::Domain { family: self.name().into(), theta: tau };
        let base = self.base();
        let (lo_tau, lo_inclusive) = match base {
            Family::Clayton => (0.0, false),
            Family::GumbelHougaard | Family::Joe => (0.0, true),
            _ => (-1.0, false),
        };
        if !(tau < 1.0 && (tau > lo_tau || (lo_inclusive && tau == lo_tau))) {
            return Err(unattainable());
        }
        match base {
            Family::Clayton => Ok(2.0 * tau / (1.0 - tau)),
            Family::GumbelHougaard => Ok(1.0 / (1.0 - tau)),
            Family::Frank if tau == 0.0 => Ok(0.0),
            Family::Joe if tau == 0.0 => Ok(1.0),
            Family::Plackett if tau == 0.0 => Ok(1.0),
            Family::Frank => {
                let sign = tau.signum();
                let hi = expand_bracket(|t| frank_tau(t) - tau.abs(), 1.0).ok_or_else(unattainable)?;
                let root = brent_root(|t| frank_tau(t) - tau.abs(), 0.0, hi, 1e-10)?;
                Ok(sign * root.x)
            }
            Family::Joe => {
                let hi = 1.0 + expand_bracket(|t| joe_tau(1.0 + t) - tau, 1.0).ok_or_else(unattainable)?;
                Ok(brent_root(|t| joe_tau(t) - tau, 1.0, hi, 1e-10)?.x)
            }
            Family::Plackett => {
                // Solve in log θ; τ is odd in log θ.
                let target = tau.abs();
                let hi = expand_bracket(|x| plackett_tau(x.exp()) - target, 1.0).ok_or_else(unattainable)?;
                let x = brent_root(|x| plackett_tau(x.exp()) - target, 0.0, hi, 1e-12)?.x;
                Ok((tau.signum() * x).exp())
            }
            _ => unreachable!("base family"),
        }
    }
}

/// Doubles `hi` from `start` until `f(hi) > 0`.
fn expand_bracket<F: Fn(f64) -> f64>(f: F, start: f64) -> Option<f64> {
    let mut hi = start;
    for _ in 0..60 {
        if f(hi) > 0.0 {
            return Some(hi);
        }
        hi *= 2.0;
    }
    None
}

fn base_cdf(family: Family, theta: f64, u: f64, v: f64) -> f64 {
    match family {
        Family::Clayton => (u.powf(-theta) + v.powf(-theta) - 1.0).powf(-1.0 / theta),
        Family::GumbelHougaard => {
            let s = (-u.ln()).powf(theta) + (-v.ln()).powf(theta);
            (-s.powf(1.0 / theta)).exp()
        }
        Family::Frank => frank_cdf(theta, u, v),
        Family::Joe => {
            let a = (1.0 - u).powf(theta);
            let b = (1.0 - v).powf(theta);
            1.0 - (a + b - a * b).powf(1.0 / theta)
        }
        Family::Plackett => {
            if theta == 1.0 {
                return u * v;
            }
            let eta = theta - 1.0;
            let s = 1.0 + eta * (u + v);
            let root = (s * s - 4.0 * theta * eta * u * v).max(0.0).sqrt();
            if s >= 0.0 {
                2.0 * theta * u * v / (s + root)
            } else {
                (s - root) / (2.0 * eta)
            }
        }
        _ => unreachable!("base family"),
    }
}

fn base_dcdf(family: Family, theta: f64, u: f64, v: f64) -> f64 {
    if u <= 0.0 || v <= 0.0 || u >= 1.0 || v >= 1.0 {
        return 0.0;
    }
    match family {
        Family::Clayton => {
            let (pu, pv) = (u.powf(-theta), v.powf(-theta));
            let a = pu + pv - 1.0;
            let da = -pu * u.ln() - pv * v.ln();
            let c = a.powf(-1.0 / theta);
            c * (a.ln() / (theta * theta) - da / (theta * a))
        }
        Family::GumbelHougaard => {
            let (x, y) = (-u.ln(), -v.ln());
            let (px, py) = (x.powf(theta), y.powf(theta));
            let s = px + py;
            let ds = px * x.ln() + py * y.ln();
            let t = s.powf(1.0 / theta);
            let dt = t * (-s.ln() / (theta * theta) + ds / (theta * s));
            -(-t).exp() * dt
        }
        Family::Frank => frank_dcdf(theta, u, v),
        _ => unreachable!("analytic derivative"),
    }
}

/// Frank copula. Negative θ reflects through `C_θ(u, v) = u − C_−θ(u, 1 − v)`;
/// for θ ≥ 1 the argument of the logarithm is formed without cancellation.
fn frank_cdf(theta: f64, u: f64, v: f64) -> f64 {
    if theta < 0.0 {
        return u - frank_cdf(-theta, u, 1.0 - v);
    }
    if theta == 0.0 {
        return u * v;
    }
    if theta < 1.0 {
        let w = (-theta * u).exp_m1() * (-theta * v).exp_m1() / (-theta).exp_m1();
        return -w.ln_1p() / theta;
    }
    -frank_log_arg(theta, u, v).0.ln() / theta
}

/// `(W, dW/dθ / W)` for `C = −ln(W)/θ`, θ ≥ 1.
fn frank_log_arg(theta: f64, u: f64, v: f64) -> (f64, f64) {
    let (eu, ev, e1) = ((-theta * u).exp(), (-theta * v).exp(), (-theta).exp());
    let (mu, mv) = ((-theta * u).exp_m1(), (-theta * v).exp_m1());
    let num = -eu * mv - ev * (-theta * (1.0 - v)).exp_m1();
    let den = -(-theta).exp_m1();
    let dnum = u * eu * mv + v * ev * mu + e1;
    let dden = e1;
    (num / den, dnum / num - dden / den)
}

fn frank_dcdf(theta: f64, u: f64, v: f64) -> f64 {
    if theta < 0.0 {
        return frank_dcdf(-theta, u, 1.0 - v);
    }
    if theta < 1e-2 {
        // The closed form cancels badly near independence.
        let h = 1e-4;
        return (frank_cdf(theta + h, u, v) - frank_cdf(theta - h, u, v)) / (2.0 * h);
    }
    if theta < 1.0 {
        let (eu, ev, e1) = ((-theta * u).exp(), (-theta * v).exp(), (-theta).exp());
        let (a, b, c) = (eu - 1.0, ev - 1.0, e1 - 1.0);
        let w = 1.0 + a * b / c;
        let dw = (-u * eu * b - v * ev * a) / c + a * b * e1 / (c * c);
        return w.ln() / (theta * theta) - dw / (theta * w);
    }
    let (w, dlog) = frank_log_arg(theta, u, v);
    w.ln() / (theta * theta) - dlog / theta
}

/// `τ = 1 − 4/θ + 4 D₁(θ)/θ` with the Debye function `D₁`; odd in θ.
fn frank_tau(theta: f64) -> f64 {
    let t = theta.abs();
    if t < 1e-4 {
        return theta / 9.0;
    }
    let q = Quadrature::composite(0.0, t, 8, 20);
    let integral = q.integrate(|x| if x == 0.0 { 1.0 } else { x / x.exp_m1() });
    let debye = integral / t;
    theta.signum() * (1.0 - 4.0 / t + 4.0 * debye / t)
}

/// `τ = 1 − 4 Σ_k 1/(k(θk + 2)(θ(k−1) + 2))`.
fn joe_tau(theta: f64) -> f64 {
    const TERMS: usize = 4000;
    let mut sum = 0.0;
    for k in (1..=TERMS).rev() {
        let k = k as f64;
        sum += 1.0 / (k * (theta * k + 2.0) * (theta * (k - 1.0) + 2.0));
    }
    let k = TERMS as f64 + 0.5;
    sum += 1.0 / (2.0 * theta * theta * k * k);
    1.0 - 4.0 * sum
}

/// `τ = 1 − 4 ∫∫ ∂C/∂u · ∂C/∂v`, by composite Gauss–Legendre quadrature.
fn plackett_tau(theta: f64) -> f64 {
    if theta == 1.0 {
        return 0.0;
    }
    let eta = theta - 1.0;
    let q = Quadrature::composite(0.0, 1.0, 24, 12);
    let du = |u: f64, v: f64| {
        let s = 1.0 + eta * (u + v);
        0.5 - (s - 2.0 * theta * v) / (2.0 * (s * s - 4.0 * theta * eta * u * v).sqrt())
    };
    let integral = q.integrate(|u| q.integrate(|v| du(u, v) * du(v, u)));
    1.0 - 4.0 * integral
}

/// A family discretized on an `r × s` grid.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct DiscretizedFamily {
    pub family: Family,
    pub r: usize,
    pub s: usize,
}

impl DiscretizedFamily {
    pub fn new(family: Family, r: usize, s: usize) -> Result<Self> {
        if r < 2 || s < 2 {
            return Err(Error::DegenerateDimension { r, s });
        }
        Ok(Self { family, r, s })
    }

    /// Four-term differences of a function sampled on the grid corners.
    fn difference(&self, corner: impl Fn(f64, f64) -> f64) -> Vec<f64> {
        let (r, s) = (self.r, self.s);
        let mut g = vec![0.0; (r + 1) * (s + 1)];
        for a in 0..=r {
            for b in 0..=s {
                g[a * (s + 1) + b] = corner(a as f64 / r as f64, b as f64 / s as f64);
            }
        }
        let at = |a: usize, b: usize| g[a * (s + 1) + b];
        let mut out = Vec::with_capacity(r * s);
        for i in 1..=r {
            for j in 1..=s {
                out.push(at(i, j) - at(i, j - 1) - at(i - 1, j) + at(i - 1, j - 1));
            }
        }
        out
    }

    /// The base grid, rotated for survival families. Row-major.
    fn base_cells(&self, corner: impl Fn(f64, f64) -> f64) -> Vec<f64> {
        let mut cells = self.difference(corner);
        if self.family.is_survival() {
            cells.reverse();
        }
        cells
    }

    /// The copula p.m.f. `u^[θ]`.
    pub fn discretize(&self, theta: f64) -> Result<BivariatePmf> {
        self.family.check(theta)?;
        let base = self.family.base();
        let cells = self.base_cells(|u, v| base.cdf_unchecked(theta, u, v));
        if let Some(k) = cells.iter().position(|x| !x.is_finite()) {
            return Err(Error::Numerical(format!("non-finite cell {k} for {} at θ = {theta}", self.family.name())));
        }
        // Roundoff in the differences can leave -1e-17 where the mass is 0.
        Ok(BivariatePmf::new_unchecked(self.r, self.s, cells.into_iter().map(|x| x.max(0.0)).collect()))
    }

    /// `∂u^[θ]/∂θ` as an `r × s` matrix.
    pub fn dtheta(&self, theta: f64) -> Result<Matrix> {
        self.family.check(theta)?;
        let base = self.family.base();
        let cells = if self.family.has_analytic_dtheta() {
            self.base_cells(|u, v| base_dcdf(base, theta, u, v))
        } else {
            let h = 1e-6 * theta.abs().max(1.0);
            let mut out = vec![0.0; self.r * self.s];
            for (t, w) in stencil(base, theta, h) {
                let grid = self.base_cells(|u, v| base.cdf_unchecked(t, u, v));
                for (o, x) in out.iter_mut().zip(grid) {
                    *o += w * x;
                }
            }
            out
        };
        Ok(Matrix::from_row_major(self.r, self.s, cells))
    }

    /// Column-major `vec(∂u^[θ]/∂θ)`.
    pub fn dtheta_vec(&self, theta: f64) -> Result<Vec<f64>> {
        let m = self.dtheta(theta)?;
        Ok((0..self.s).flat_map(|j| (0..self.r).map(move |i| (i, j))).map(|(i, j)| m[(i, j)]).collect())
    }

    /// `g(θ)`: the measure evaluated at `u^[θ]`.
    pub fn g_moment(&self, theta: f64, measure: Measure) -> Result<f64> {
        measure.value(&self.discretize(theta)?)
    }

    /// `g'(θ) = ∇measure(u^[θ]) · vec(∂u^[θ]/∂θ)`.
    pub fn g_prime(&self, theta: f64, measure: Measure) -> Result<f64> {
        let u = self.discretize(theta)?;
        let grad = measure.grad(&u)?;
        Ok(grad.iter().zip(self.dtheta_vec(theta)?).map(|(a, b)| a * b).sum())
    }
}

/// Finite-difference points and weights for `d/dθ` at `theta`: central when
/// both neighbours lie in the domain, one-sided second order otherwise.
fn stencil(family: Family, theta: f64, h: f64) -> Vec<(f64, f64)> {
    let c = 1.0 / (2.0 * h);
    if family.contains(theta - h) && family.contains(theta + h) {
        vec![(theta + h, c), (theta - h, -c)]
    } else if family.contains(theta + 2.0 * h) {
        vec![(theta, -3.0 * c), (theta + h, 4.0 * c), (theta + 2.0 * h, -c)]
    } else {
        vec![(theta, 3.0 * c), (theta - h, -4.0 * c), (theta - 2.0 * h, c)]
    }
}
