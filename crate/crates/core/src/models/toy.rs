//! Small models with closed-form or enumerable posteriors, for checking the
//! driver and the estimators.

use super::{Draw, LatentModel, SweepMode};
use crate::error::{Error, Result};
use crate::mcmc::SampleStore;
use crate::prob::density::{ln_normal, ln_poisson};
use crate::prob::sample::{categorical, categorical_log, normal};
use crate::prob::{poisson_midp_tail, RngStream};

/// `y_i ~ N(mu, noise_var)` with `mu ~ N(prior_mean, prior_var)` and no latent
/// variables (every latent slot holds 0).
#[derive(Clone, Debug)]
pub struct NormalMeanModel {
    y: Vec<f64>,
    noise_var: f64,
    prior_mean: f64,
    prior_var: f64,
}

impl NormalMeanModel {
    pub fn new(y: Vec<f64>, noise_var: f64, prior_mean: f64, prior_var: f64) -> Result<Self> {
        if y.is_empty() || !(noise_var > 0.0) || !(prior_var > 0.0) {
            return Err(Error::arg("normal mean model needs data and positive variances"));
        }
        Ok(Self {
            y,
            noise_var,
            prior_mean,
            prior_var,
        })
    }

    pub fn data(&self) -> &[f64] {
        &self.y
    }

    /// Posterior mean and variance of `mu`, optionally without unit `holdout`.
    pub fn posterior(&self, holdout: Option<usize>) -> (f64, f64) {
        let (mut n, mut sum) = (0.0, 0.0);
        for (i, &v) in self.y.iter().enumerate() {
            if Some(i) != holdout {
                n += 1.0;
                sum += v;
            }
        }
        let prec = 1.0 / self.prior_var + n / self.noise_var;
        (
            (self.prior_mean / self.prior_var + sum / self.noise_var) / prec,
            1.0 / prec,
        )
    }

    /// `log P(y_i | y_-i)`.
    pub fn cv_log_predictive(&self, i: usize) -> f64 {
        let (m, v) = self.posterior(Some(i));
        ln_normal(self.y[i], m, v + self.noise_var)
    }

    /// Half the posterior variance of the deviance `sum_i (y_i - mu)^2 / noise_var + const`.
    pub fn deviance_half_variance(&self) -> f64 {
        let (m, v) = self.posterior(None);
        let n = self.y.len() as f64;
        let ybar = self.y.iter().sum::<f64>() / n;
        let k = n / self.noise_var;
        let delta = m - ybar;
        // D - const = k (mu - ybar)^2 with mu - ybar ~ N(delta, v)
        0.5 * k * k * (2.0 * v * v + 4.0 * delta * delta * v)
    }
}

impl LatentModel for NormalMeanModel {
    type State = f64;

    fn tag(&self) -> String {
        "normal-mean".into()
    }

    fn n_units(&self) -> usize {
        self.y.len()
    }

    fn theta_names(&self) -> Vec<String> {
        vec!["mu".into()]
    }

    fn n_theta(&self) -> usize {
        1
    }

    fn init_state(&self, _holdout: Option<usize>, _rng: &mut RngStream) -> Result<f64> {
        Ok(self.prior_mean)
    }

    fn sweep(&self, mu: &mut f64, mode: SweepMode, rng: &mut RngStream) -> Result<()> {
        let (m, v) = self.posterior(mode.holdout);
        *mu = normal(rng, m, v)?;
        Ok(())
    }

    fn write_draw(&self, mu: &f64, theta: &mut [f64], latent: &mut [f64]) {
        theta[0] = *mu;
        latent.iter_mut().for_each(|b| *b = 0.0);
    }

    fn nonint_logpred(&self, i: usize, theta: &[f64], _b_i: f64) -> f64 {
        ln_normal(self.y[i], theta[0], self.noise_var)
    }

    fn regen_latent(&self, _i: usize, _draw: Draw<'_>, _rng: &mut RngStream) -> Result<f64> {
        Ok(0.0)
    }

    fn latent_atoms(&self, _i: usize, _draw: Draw<'_>) -> Option<Vec<(f64, f64)>> {
        Some(vec![(0.0, 1.0)])
    }
}

/// One support point of the discrete parameter: Poisson base rate, latent
/// success probability and prior mass.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ToyAtom {
    pub rate: f64,
    pub q: f64,
    pub prior: f64,
}

/// Discrete parameter on a few atoms and binary latents:
/// `b_i ~ Bernoulli(q)`, `y_i ~ Poisson(rate (1 + boost b_i))`.
#[derive(Clone, Debug)]
pub struct EnumerableModel {
    y: Vec<u64>,
    atoms: Vec<ToyAtom>,
    boost: f64,
}

#[derive(Clone, Debug)]
pub struct EnumerableState {
    pub atom: usize,
    pub b: Vec<u8>,
}

impl EnumerableModel {
    pub fn new(y: Vec<u64>, atoms: Vec<ToyAtom>, boost: f64) -> Result<Self> {
        if y.is_empty() || y.len() > 16 {
            return Err(Error::arg("enumerable model supports 1 to 16 units"));
        }
        if atoms.is_empty()
            || atoms
                .iter()
                .any(|a| !(a.rate > 0.0 && a.q > 0.0 && a.q < 1.0 && a.prior > 0.0))
        {
            return Err(Error::arg("atoms need positive rate and prior mass, q in (0, 1)"));
        }
        if !(boost > -1.0) {
            return Err(Error::arg("boost must exceed -1"));
        }
        Ok(Self { y, atoms, boost })
    }

    /// Three atoms, four units.
    pub fn standard() -> Self {
        Self::new(
            vec![0, 3, 1, 6],
            vec![
                ToyAtom {
                    rate: 0.8,
                    q: 0.3,
                    prior: 0.5,
                },
                ToyAtom {
                    rate: 2.0,
                    q: 0.5,
                    prior: 0.3,
                },
                ToyAtom {
                    rate: 3.5,
                    q: 0.2,
                    prior: 0.2,
                },
            ],
            1.5,
        )
        .expect("valid standard toy")
    }

    pub fn atoms(&self) -> &[ToyAtom] {
        &self.atoms
    }

    pub fn data(&self) -> &[u64] {
        &self.y
    }

    pub fn boost(&self) -> f64 {
        self.boost
    }

    fn atom_index(&self, theta: &[f64]) -> usize {
        theta[2] as usize
    }

    fn rate(&self, theta: &[f64], b: f64) -> f64 {
        theta[0] * (1.0 + self.boost * b)
    }

    fn theta_of(&self, a: usize) -> [f64; 3] {
        [self.atoms[a].rate, self.atoms[a].q, a as f64]
    }

    /// Every `(atom, b)` configuration with its normalized log posterior mass,
    /// as a weighted store. With `holdout`, unit `holdout`'s likelihood is dropped.
    pub fn enumerate(&self, holdout: Option<usize>) -> Result<SampleStore> {
        let n = self.y.len();
        let mut rows = Vec::new();
        let mut logw = Vec::new();
        for a in 0..self.atoms.len() {
            let theta = self.theta_of(a);
            let atom = self.atoms[a];
            for mask in 0..(1u32 << n) {
                let mut lw = atom.prior.ln();
                rows.extend_from_slice(&theta);
                for i in 0..n {
                    let b = ((mask >> i) & 1) as f64;
                    lw += if b == 1.0 { atom.q.ln() } else { (1.0 - atom.q).ln() };
                    if Some(i) != holdout {
                        lw += self.nonint_logpred(i, &theta, b);
                    }
                    rows.push(b);
                }
                logw.push(lw);
            }
        }
        let total = crate::prob::log_sum_exp(&logw)?;
        logw.iter_mut().for_each(|l| *l -= total);
        let mut store = SampleStore::weighted(self.theta_names(), n, rows, logw)?;
        store.set_holdout(holdout);
        Ok(store)
    }
}

impl LatentModel for EnumerableModel {
    type State = EnumerableState;

    fn tag(&self) -> String {
        "enumerable".into()
    }

    fn n_units(&self) -> usize {
        self.y.len()
    }

    fn theta_names(&self) -> Vec<String> {
        vec!["rate".into(), "q".into(), "atom".into()]
    }

    fn n_theta(&self) -> usize {
        3
    }

    fn init_state(&self, _holdout: Option<usize>, _rng: &mut RngStream) -> Result<EnumerableState> {
        Ok(EnumerableState {
            atom: 0,
            b: vec![0; self.y.len()],
        })
    }

    fn sweep(&self, st: &mut EnumerableState, mode: SweepMode, rng: &mut RngStream) -> Result<()> {
        let theta = self.theta_of(st.atom);
        let q = self.atoms[st.atom].q;
        for i in 0..self.y.len() {
            let mut w = [(1.0 - q).ln(), q.ln()];
            if Some(i) != mode.holdout {
                w[0] += self.nonint_logpred(i, &theta, 0.0);
                w[1] += self.nonint_logpred(i, &theta, 1.0);
            }
            let mut scratch = Vec::with_capacity(2);
            st.b[i] = categorical_log(rng, &w, &mut scratch)? as u8;
        }
        let logw: Vec<f64> = (0..self.atoms.len())
            .map(|a| {
                let th = self.theta_of(a);
                let atom = self.atoms[a];
                let mut lw = atom.prior.ln();
                for i in 0..self.y.len() {
                    let b = st.b[i] as f64;
                    lw += if st.b[i] == 1 { atom.q.ln() } else { (1.0 - atom.q).ln() };
                    if Some(i) != mode.holdout {
                        lw += self.nonint_logpred(i, &th, b);
                    }
                }
                lw
            })
            .collect();
        let mut scratch = Vec::with_capacity(logw.len());
        st.atom = categorical_log(rng, &logw, &mut scratch)?;
        Ok(())
    }

    fn write_draw(&self, st: &EnumerableState, theta: &mut [f64], latent: &mut [f64]) {
        theta.copy_from_slice(&self.theta_of(st.atom));
        for (dst, &b) in latent.iter_mut().zip(&st.b) {
            *dst = b as f64;
        }
    }

    fn nonint_logpred(&self, i: usize, theta: &[f64], b_i: f64) -> f64 {
        ln_poisson(self.y[i], self.rate(theta, b_i))
    }

    fn regen_latent(&self, _i: usize, draw: Draw<'_>, rng: &mut RngStream) -> Result<f64> {
        let q = draw.theta[1];
        Ok(categorical(rng, &[1.0 - q, q])? as f64)
    }

    fn latent_atoms(&self, _i: usize, draw: Draw<'_>) -> Option<Vec<(f64, f64)>> {
        let q = self.atoms[self.atom_index(draw.theta)].q;
        Some(vec![(0.0, 1.0 - q), (1.0, q)])
    }

    fn eval_midp(&self, i: usize, theta: &[f64], b_i: f64) -> Option<f64> {
        poisson_midp_tail(self.y[i], self.rate(theta, b_i)).ok()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn enumeration_weights_normalize() {
        let m = EnumerableModel::standard();
        let store = m.enumerate(None).unwrap();
        assert_eq!(store.len(), 3 * 16);
        let total: f64 = store.log_weights().unwrap().iter().map(|l| l.exp()).sum();
        assert!((total - 1.0).abs() < 1e-12);
    }

    #[test]
    fn normal_mean_posterior_closed_form() {
        let m = NormalMeanModel::new(vec![1.0, 2.0, 4.0], 2.0, 0.0, 10.0).unwrap();
        let (mean, var) = m.posterior(None);
        let prec = 0.1 + 1.5;
        assert!((var - 1.0 / prec).abs() < 1e-15);
        assert!((mean - 3.5 / prec).abs() < 1e-15);
    }

    #[test]
    fn poisson_predictive_normalizes() {
        let m = EnumerableModel::standard();
        let theta = [3.5, 0.2, 2.0];
        for b in [0.0, 1.0] {
            let rate: f64 = 3.5 * (1.0 + 1.5 * b);
            let cap = (rate + 12.0 * rate.sqrt()).ceil() as u64;
            let total: f64 = (0..=cap).map(|k| ln_poisson(k, rate).exp()).sum();
            assert!((total - 1.0).abs() < 1e-6);
            assert!(m.nonint_logpred(0, &theta, b).is_finite());
        }
    }
}
