//! Bayesian leave-one-out predictive evaluation for latent variable models.
//!
//! Three model families (finite normal mixtures, proper CAR Poisson models,
//! random-effects logistic regression) are fitted by MCMC. From the retained
//! draws the crate computes actual cross-validation by refitting, and the
//! single-run approximations: non-integrated and integrated importance
//! sampling (nIS, iIS), non-integrated and integrated WAIC (nWAIC, iWAIC), DIC,
//! and posterior p-values by posterior checking, ghosting, nIS and iIS.

// `!(x > 0.0)` is used on purpose so that NaN fails validation; index loops
// mirror the linear algebra they implement.
#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

pub mod error;
pub mod evaluators;
pub mod io;
pub mod mcmc;
pub mod models;
pub mod prob;

#[cfg(test)]
mod testutil;

pub use error::{Error, Result};
