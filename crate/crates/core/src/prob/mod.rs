//! Numerical kernel shared by the models, the chain driver and the evaluators.

pub mod density;
pub mod linalg;
mod rng;
pub mod sample;
pub mod special;

pub use linalg::{cholesky, sym_eigenvalues, Cholesky, SymMatrix};
pub use rng::{stream_id, RngStream};
pub use special::{
    binomial_midp_left, binomial_midp_tail, chi_square_gof, ks_uniform, log_mean_exp, log_sum_exp, mean,
    poisson_midp_tail, sample_variance, student_t_cdf,
};
