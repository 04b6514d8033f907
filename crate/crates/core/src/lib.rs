//! Copula p.m.f.s of discrete bivariate distributions on rectangular grids.
//!
//! A p.m.f. is split into its margins and a copula p.m.f. by iterative
//! proportional fitting. On top of that the crate estimates the copula p.m.f.
//! from contingency tables, fits parametric families, derives delta-method
//! covariances and tests goodness of fit.

pub mod asymptotics;
pub mod datasets;
pub mod dependence;
pub mod error;
pub mod estimators;
pub mod families;
pub mod gof;
pub mod harness;
pub mod io;
pub mod ipfp;
pub mod nonparametric;
pub mod numerics;
pub mod pmf;

pub use error::{Error, Result};

#[cfg(doctest)]
mod book {
    #[doc = include_str!("../../../book/src/introduction.md")]
    mod introduction {}
    #[doc = include_str!("../../../book/src/decomposition.md")]
    mod decomposition {}
    #[doc = include_str!("../../../book/src/dependence.md")]
    mod dependence {}
    #[doc = include_str!("../../../book/src/estimation.md")]
    mod estimation {}
    #[doc = include_str!("../../../book/src/asymptotics.md")]
    mod asymptotics {}
    #[doc = include_str!("../../../book/src/gof.md")]
    mod gof {}
    #[doc = include_str!("../../../book/src/simulation.md")]
    mod simulation {}
    #[doc = include_str!("../../../book/src/cli.md")]
    mod cli {}
    #[doc = include_str!("../../../book/src/schema.md")]
    mod schema {}
}
