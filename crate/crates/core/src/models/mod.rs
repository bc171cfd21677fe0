//! Latent variable model families behind one contract.
//!
//! A model owns its observed data. Each unit `i` has an outcome `y_i` and a
//! scalar latent variable `b_i`; everything else is the parameter vector
//! `theta`. A retained draw is stored as `theta` followed by `b_1..b_n`.

pub mod car;
pub mod mixture;
pub mod seeds;
pub mod toy;
mod tuning;

pub use car::{CarModel, CarParams, CarPrior, CarStructure, CarVariant};
pub use mixture::{simulate_study_mixture, MixtureModel, MixturePrior, MixtureState};
pub use seeds::{Plate, SeedsModel, SeedsPrior, SeedsState};
pub use tuning::RwScale;

use crate::error::Result;
use crate::prob::{log_mean_exp, log_sum_exp, RngStream};

/// One retained draw: the parameter vector and all latent variables.
#[derive(Clone, Copy, Debug)]
pub struct Draw<'a> {
    pub theta: &'a [f64],
    pub latent: &'a [f64],
}

/// How a sweep should treat the chain.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct SweepMode {
    /// Unit whose likelihood factor is dropped; its latent is drawn from the conditional prior.
    pub holdout: Option<usize>,
    /// Whether random-walk proposal scales may still adapt.
    pub adapt: bool,
}

pub trait LatentModel: Sync {
    type State: Clone + Send;

    /// Short identifier used in reports, e.g. `mixture-k5`.
    fn tag(&self) -> String;

    fn n_units(&self) -> usize;

    fn theta_names(&self) -> Vec<String>;

    fn n_theta(&self) -> usize {
        self.theta_names().len()
    }

    /// Starting state. With a holdout the unit's outcome must not be read.
    fn init_state(&self, holdout: Option<usize>, rng: &mut RngStream) -> Result<Self::State>;

    /// One full sweep of the sampler. With a holdout the unit's likelihood is
    /// ignored entirely.
    fn sweep(&self, state: &mut Self::State, mode: SweepMode, rng: &mut RngStream) -> Result<()>;

    /// Called once when adaptation ends; resets acceptance counters.
    fn end_adaptation(&self, _state: &mut Self::State) {}

    /// Acceptance rates of the Metropolis steps since adaptation ended.
    fn acceptance_rates(&self, _state: &Self::State) -> Vec<(String, f64)> {
        Vec::new()
    }

    /// Write the current state as `theta` and `latent` (lengths `n_theta` and `n_units`).
    fn write_draw(&self, state: &Self::State, theta: &mut [f64], latent: &mut [f64]);

    /// `log P(y_i | theta, b_i)`.
    fn nonint_logpred(&self, i: usize, theta: &[f64], b_i: f64) -> f64;

    /// Draw `b_i` from `P(b_i | b_-i, theta)`. Never looks at `y_i`.
    fn regen_latent(&self, i: usize, draw: Draw<'_>, rng: &mut RngStream) -> Result<f64>;

    /// Exact support of `P(b_i | b_-i, theta)` as `(value, probability)` pairs
    /// when the latent is discrete.
    fn latent_atoms(&self, _i: usize, _draw: Draw<'_>) -> Option<Vec<(f64, f64)>> {
        None
    }

    /// `log P(y_i | theta, b_-i)` with `b_i` integrated over its conditional
    /// prior. Exact when atoms are available, otherwise a Monte Carlo average
    /// over `r` regenerated latents.
    fn int_logpred(&self, i: usize, draw: Draw<'_>, r: usize, rng: &mut RngStream) -> Result<f64> {
        if let Some(atoms) = self.latent_atoms(i, draw) {
            let terms: Vec<f64> = atoms
                .iter()
                .map(|&(b, p)| p.ln() + self.nonint_logpred(i, draw.theta, b))
                .collect();
            return log_sum_exp(&terms);
        }
        let mut terms = Vec::with_capacity(r);
        for _ in 0..r {
            let b = self.regen_latent(i, draw, rng)?;
            terms.push(self.nonint_logpred(i, draw.theta, b));
        }
        log_mean_exp(&terms)
    }

    /// Mid-p right tail `Pr(Y_i > y_i) + 0.5 Pr(Y_i = y_i)` for discrete outcomes.
    fn eval_midp(&self, _i: usize, _theta: &[f64], _b_i: f64) -> Option<f64> {
        None
    }
}

/// Numerically stable `log(1 + e^x)`.
#[inline]
pub(crate) fn softplus(x: f64) -> f64 {
    if x > 0.0 {
        x + (-x).exp().ln_1p()
    } else {
        x.exp().ln_1p()
    }
}

#[inline]
pub(crate) fn logistic(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

/// Metropolis accept/reject on a log acceptance ratio.
#[inline]
pub(crate) fn accept(rng: &mut RngStream, log_ratio: f64) -> bool {
    log_ratio >= 0.0 || rng.uniform().ln() < log_ratio
}
