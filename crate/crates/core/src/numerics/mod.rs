//! Seedable randomness, Gaussian sampling and a regularized least-squares solver.

mod exp;
mod linalg;
mod rng;

pub use exp::exp_poly;
#[cfg(target_arch = "x86_64")]
pub(crate) use linalg::fma_available;
pub use linalg::{
    dot, gram_lower, normal_equation_residual, solve_normal_equations, solve_ridge_least_squares,
    Matrix,
};
pub use rng::{derive_seed, sample_complex_gaussian, sample_standard_normal, RngStream};

/// A complex baseband sample (channel coefficient, noise or received value).
pub type ComplexSample = num_complex::Complex64;

/// Ridge penalty used for every ELM output-weight solve unless overridden.
pub const DEFAULT_RIDGE_LAMBDA: f64 = 1e-6;
