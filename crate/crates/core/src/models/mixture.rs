//! Finite normal mixture with component labels as latent variables.
//!
//! `y_i | z_i = k ~ N(mu_k, sigma2_k)`, `z_i ~ Categorical(p)`,
//! `mu_k ~ N(m0, v0)`, `sigma2_k ~ InvGamma(a0, s0)`, `p ~ Dirichlet(c, ..., c)`.
//! Sampling is restricted to label vectors in which every component holds at
//! least one observed unit.

use serde::{Deserialize, Serialize};

use super::{Draw, LatentModel, SweepMode};
use crate::error::{Error, Result};
use crate::prob::density::{ln_normal, LN_2PI};
use crate::prob::sample::{categorical, categorical_log, dirichlet, inv_gamma, normal};
use crate::prob::{log_sum_exp, mean, sample_variance, RngStream};

/// Redraws of a full label sweep before keeping the previous labels.
const MAX_OCCUPANCY_ATTEMPTS: usize = 100;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct MixturePrior {
    pub mean: f64,
    pub var: f64,
    pub shape: f64,
    pub scale: f64,
    pub concentration: f64,
}

impl MixturePrior {
    /// Centre 20 and inverse-gamma scale 0.01 x 20 for the galaxy velocities in 1000 km/s.
    pub fn galaxy() -> Self {
        Self {
            mean: 20.0,
            var: 1e4,
            shape: 0.01,
            scale: 0.2,
            concentration: 1.0,
        }
    }

    /// The same construction with the centre and scale taken from the data:
    /// prior mean at the sample mean, inverse-gamma scale 0.01 x sample variance.
    pub fn from_data(y: &[f64]) -> Result<Self> {
        let v = sample_variance(y)?;
        Ok(Self {
            mean: mean(y),
            var: 1e4,
            shape: 0.01,
            scale: 0.01 * v,
            concentration: 1.0,
        })
    }
}

#[derive(Clone, Debug)]
pub struct MixtureModel {
    y: Vec<f64>,
    k: usize,
    prior: MixturePrior,
}

#[derive(Clone, Debug)]
pub struct MixtureState {
    pub mu: Vec<f64>,
    pub var: Vec<f64>,
    pub p: Vec<f64>,
    pub z: Vec<usize>,
    /// Sweeps in which no occupied label vector was found and the old one was kept.
    pub occupancy_fallbacks: u64,
    scratch: Vec<f64>,
    proposal: Vec<usize>,
}

impl MixtureModel {
    pub fn new(y: Vec<f64>, k: usize, prior: MixturePrior) -> Result<Self> {
        if k == 0 {
            return Err(Error::Config("mixture needs at least one component".into()));
        }
        if y.len() < k {
            return Err(Error::Config(format!(
                "mixture with {k} components needs at least {k} observations, got {}",
                y.len()
            )));
        }
        if y.iter().any(|v| !v.is_finite()) {
            return Err(Error::arg("mixture data must be finite"));
        }
        if !(prior.var > 0.0 && prior.shape > 0.0 && prior.scale > 0.0 && prior.concentration > 0.0) {
            return Err(Error::Config(format!("invalid mixture prior {prior:?}")));
        }
        Ok(Self { y, k, prior })
    }

    pub fn components(&self) -> usize {
        self.k
    }

    pub fn data(&self) -> &[f64] {
        &self.y
    }

    pub fn prior(&self) -> &MixturePrior {
        &self.prior
    }

    /// Split `theta` into `(mu, sigma2, p)`.
    pub fn unpack<'a>(&self, theta: &'a [f64]) -> (&'a [f64], &'a [f64], &'a [f64]) {
        let k = self.k;
        (&theta[..k], &theta[k..2 * k], &theta[2 * k..3 * k])
    }

    /// Mean of the component a latent label points at.
    pub fn component_mean(&self, theta: &[f64], b: f64) -> f64 {
        theta[b as usize]
    }

    /// `P(z_i = k | y_i, theta)` for every k.
    pub fn label_probs(&self, i: usize, theta: &[f64]) -> Vec<f64> {
        let (mu, var, p) = self.unpack(theta);
        let logw: Vec<f64> = (0..self.k)
            .map(|k| p[k].ln() + ln_normal(self.y[i], mu[k], var[k]))
            .collect();
        let total = log_sum_exp(&logw).unwrap_or(f64::NAN);
        logw.iter().map(|l| (l - total).exp()).collect()
    }

    /// `log sum_k p_k N(y | mu_k, sigma2_k)`.
    pub fn int_logpred_at(&self, y: f64, theta: &[f64]) -> f64 {
        let (mu, var, p) = self.unpack(theta);
        let terms: Vec<f64> = (0..self.k).map(|k| p[k].ln() + ln_normal(y, mu[k], var[k])).collect();
        log_sum_exp(&terms).unwrap_or(f64::NAN)
    }

    /// Conjugate normal conditional of `mu_k` given the labels, as `(mean, variance)`.
    pub fn mu_conditional(&self, z: &[usize], var_k: f64, k: usize, holdout: Option<usize>) -> (f64, f64) {
        let (mut n, mut sum) = (0.0, 0.0);
        for (i, (&zi, &yi)) in z.iter().zip(&self.y).enumerate() {
            if zi == k && Some(i) != holdout {
                n += 1.0;
                sum += yi;
            }
        }
        let prec = 1.0 / self.prior.var + n / var_k;
        let m = (self.prior.mean / self.prior.var + sum / var_k) / prec;
        (m, 1.0 / prec)
    }

    fn draw_params(&self, st: &mut MixtureState, holdout: Option<usize>, rng: &mut RngStream) -> Result<()> {
        for k in 0..self.k {
            let (m, v) = self.mu_conditional(&st.z, st.var[k], k, holdout);
            st.mu[k] = normal(rng, m, v)?;
        }
        let mut n_obs = vec![0.0; self.k];
        let mut ss = vec![0.0; self.k];
        let mut counts = vec![self.prior.concentration; self.k];
        for (i, &zi) in st.z.iter().enumerate() {
            counts[zi] += 1.0;
            if Some(i) != holdout {
                n_obs[zi] += 1.0;
                let d = self.y[i] - st.mu[zi];
                ss[zi] += d * d;
            }
        }
        for k in 0..self.k {
            st.var[k] = inv_gamma(rng, self.prior.shape + 0.5 * n_obs[k], self.prior.scale + 0.5 * ss[k])?;
        }
        st.p = dirichlet(rng, &counts)?;
        Ok(())
    }

    fn draw_labels(&self, st: &mut MixtureState, holdout: Option<usize>, rng: &mut RngStream) -> Result<()> {
        let k = self.k;
        let ln_p: Vec<f64> = st.p.iter().map(|p| p.ln()).collect();
        let base: Vec<f64> = (0..k).map(|c| ln_p[c] - 0.5 * (LN_2PI + st.var[c].ln())).collect();
        let half_prec: Vec<f64> = st.var.iter().map(|v| 0.5 / v).collect();
        let mut logw = vec![0.0; k];
        let mut occupied = vec![0usize; k];
        for _ in 0..MAX_OCCUPANCY_ATTEMPTS {
            occupied.iter_mut().for_each(|c| *c = 0);
            for i in 0..self.y.len() {
                let zi = if Some(i) == holdout {
                    categorical(rng, &st.p)?
                } else {
                    for c in 0..k {
                        let d = self.y[i] - st.mu[c];
                        logw[c] = base[c] - half_prec[c] * d * d;
                    }
                    let zi = categorical_log(rng, &logw, &mut st.scratch)?;
                    occupied[zi] += 1;
                    zi
                };
                st.proposal[i] = zi;
            }
            if occupied.iter().all(|&c| c > 0) {
                std::mem::swap(&mut st.z, &mut st.proposal);
                return Ok(());
            }
        }
        st.occupancy_fallbacks += 1;
        Ok(())
    }
}

impl LatentModel for MixtureModel {
    type State = MixtureState;

    fn tag(&self) -> String {
        format!("mixture-k{}", self.k)
    }

    fn n_units(&self) -> usize {
        self.y.len()
    }

    fn theta_names(&self) -> Vec<String> {
        let mut names = Vec::with_capacity(3 * self.k);
        for prefix in ["mu", "sigma2", "p"] {
            names.extend((1..=self.k).map(|k| format!("{prefix}[{k}]")));
        }
        names
    }

    fn n_theta(&self) -> usize {
        3 * self.k
    }

    fn init_state(&self, holdout: Option<usize>, rng: &mut RngStream) -> Result<MixtureState> {
        let n = self.y.len();
        // random labels with every component occupied: a shuffled prefix gets one unit each
        let mut order: Vec<usize> = (0..n).collect();
        for i in (1..n).rev() {
            let j = (rng.uniform() * (i + 1) as f64) as usize;
            order.swap(i, j.min(i));
        }
        let mut z = vec![0usize; n];
        let uniform = vec![1.0; self.k];
        for (pos, &i) in order.iter().enumerate() {
            z[i] = if pos < self.k { pos } else { categorical(rng, &uniform)? };
        }
        let observed: Vec<f64> = (0..n).filter(|&i| Some(i) != holdout).map(|i| self.y[i]).collect();
        let v0 = if observed.len() > 1 {
            sample_variance(&observed)?
        } else {
            1.0
        };
        let m0 = if observed.is_empty() {
            self.prior.mean
        } else {
            mean(&observed)
        };
        let mut st = MixtureState {
            mu: vec![m0; self.k],
            var: vec![v0.max(1e-6); self.k],
            p: vec![1.0 / self.k as f64; self.k],
            z,
            occupancy_fallbacks: 0,
            scratch: Vec::with_capacity(self.k),
            proposal: vec![0; n],
        };
        self.draw_params(&mut st, holdout, rng)?;
        Ok(st)
    }

    fn sweep(&self, st: &mut MixtureState, mode: SweepMode, rng: &mut RngStream) -> Result<()> {
        self.draw_labels(st, mode.holdout, rng)?;
        self.draw_params(st, mode.holdout, rng)
    }

    fn write_draw(&self, st: &MixtureState, theta: &mut [f64], latent: &mut [f64]) {
        let k = self.k;
        theta[..k].copy_from_slice(&st.mu);
        theta[k..2 * k].copy_from_slice(&st.var);
        theta[2 * k..].copy_from_slice(&st.p);
        for (dst, &z) in latent.iter_mut().zip(&st.z) {
            *dst = z as f64;
        }
    }

    #[inline]
    fn nonint_logpred(&self, i: usize, theta: &[f64], b_i: f64) -> f64 {
        let c = b_i as usize;
        ln_normal(self.y[i], theta[c], theta[self.k + c])
    }

    fn regen_latent(&self, _i: usize, draw: Draw<'_>, rng: &mut RngStream) -> Result<f64> {
        let (_, _, p) = self.unpack(draw.theta);
        Ok(categorical(rng, p)? as f64)
    }

    fn latent_atoms(&self, _i: usize, draw: Draw<'_>) -> Option<Vec<(f64, f64)>> {
        let (_, _, p) = self.unpack(draw.theta);
        Some(p.iter().enumerate().map(|(k, &pk)| (k as f64, pk)).collect())
    }
}

/// Draws from the equal-weight mixture of N(-7, 1), N(-2, 1), N(1, 1) and N(7, 1).
pub fn simulate_study_mixture(n: usize, rng: &mut RngStream) -> Vec<f64> {
    const MEANS: [f64; 4] = [-7.0, -2.0, 1.0, 7.0];
    (0..n)
        .map(|_| {
            let k = ((rng.uniform() * 4.0) as usize).min(3);
            MEANS[k] + crate::prob::sample::std_normal(rng)
        })
        .collect()
}
