//! Small numerical kernels: dense linear algebra, scalar solvers, finite
//! differences, quadrature and deterministic random streams.

mod calculus;
mod linalg;
mod optimize;
mod rng;

pub use calculus::{bounded_diff, central_diff, gauss_legendre, second_central_diff, Quadrature};
pub use linalg::{lu_inverse, sym_eigenvalues, Matrix, PIVOT_THRESHOLD};
pub use optimize::{bounded_minimize, bounded_minimize_from, brent_root, Solution};
pub use rng::{categorical, standard_normal, CategoricalSampler, RngStream};
