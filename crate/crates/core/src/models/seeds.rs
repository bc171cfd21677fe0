//! Random-effects logistic regression for germination counts on plates.
//!
//! `r_i ~ Binomial(n_i, p_i)`, `logit p_i = a0 + a1 x1_i + a2 x2_i + a12 x1_i x2_i + b_i`,
//! `b_i ~ N(0, sigma2)`. Coefficients have independent normal priors and
//! `sigma2` an inverse-gamma prior.

use serde::{Deserialize, Serialize};
use statrs::function::factorial::ln_binomial;

use super::tuning::RwScale;
use super::{accept, logistic, softplus, Draw, LatentModel, SweepMode};
use crate::error::{Error, Result};
use crate::prob::sample::{binomial, inv_gamma, normal, std_normal};
use crate::prob::{binomial_midp_tail, RngStream};

const N_COEF: usize = 4;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Plate {
    pub r: u64,
    pub n: u64,
    pub x1: f64,
    pub x2: f64,
}

impl Plate {
    fn design(&self) -> [f64; N_COEF] {
        [1.0, self.x1, self.x2, self.x1 * self.x2]
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SeedsPrior {
    pub coef_var: f64,
    pub shape: f64,
    pub scale: f64,
}

impl Default for SeedsPrior {
    fn default() -> Self {
        Self {
            coef_var: 1e6,
            shape: 0.001,
            scale: 0.001,
        }
    }
}

#[derive(Clone, Debug)]
pub struct SeedsModel {
    plates: Vec<Plate>,
    design: Vec<[f64; N_COEF]>,
    ln_choose: Vec<f64>,
    prior: SeedsPrior,
}

#[derive(Clone, Debug)]
pub struct SeedsState {
    pub alpha: [f64; N_COEF],
    pub sigma2: f64,
    pub b: Vec<f64>,
    /// Fixed-effect part of the linear predictor per plate.
    eta: Vec<f64>,
    alpha_tune: Vec<RwScale>,
    b_tune: Vec<RwScale>,
}

/// Binomial log likelihood up to the constant, as a function of the logit.
#[inline]
fn ll_logit(r: u64, n: u64, eta: f64) -> f64 {
    r as f64 * eta - n as f64 * softplus(eta)
}

impl SeedsModel {
    pub fn new(plates: Vec<Plate>, prior: SeedsPrior) -> Result<Self> {
        if plates.is_empty() {
            return Err(Error::Config("seeds model needs at least one plate".into()));
        }
        for (i, p) in plates.iter().enumerate() {
            if p.r > p.n {
                return Err(Error::arg(format!("plate {}: r = {} exceeds n = {}", i + 1, p.r, p.n)));
            }
        }
        if !(prior.coef_var > 0.0 && prior.shape > 0.0 && prior.scale > 0.0) {
            return Err(Error::Config(format!("invalid seeds prior {prior:?}")));
        }
        let design = plates.iter().map(Plate::design).collect();
        let ln_choose = plates.iter().map(|p| ln_binomial(p.n, p.r)).collect();
        Ok(Self {
            plates,
            design,
            ln_choose,
            prior,
        })
    }

    pub fn plates(&self) -> &[Plate] {
        &self.plates
    }

    pub fn prior(&self) -> &SeedsPrior {
        &self.prior
    }

    /// Logit of plate `i` under `theta = (a0, a1, a2, a12, sigma2)` and effect `b`.
    pub fn logit(&self, i: usize, theta: &[f64], b: f64) -> f64 {
        let d = &self.design[i];
        d.iter().zip(theta).map(|(x, a)| x * a).sum::<f64>() + b
    }

    /// Shape and scale of the inverse-gamma full conditional of `sigma2`.
    pub fn sigma2_conditional(&self, b: &[f64]) -> (f64, f64) {
        let ss: f64 = b.iter().map(|v| v * v).sum();
        (self.prior.shape + 0.5 * b.len() as f64, self.prior.scale + 0.5 * ss)
    }

    /// Fresh counts from the model at `theta` and plate effects `b`, keeping `n` and the design.
    pub fn simulate(&self, theta: &[f64], b: &[f64], rng: &mut RngStream) -> Result<Vec<Plate>> {
        self.plates
            .iter()
            .enumerate()
            .map(|(i, p)| {
                let prob = logistic(self.logit(i, theta, b[i]));
                Ok(Plate {
                    r: binomial(rng, p.n, prob)?,
                    ..*p
                })
            })
            .collect()
    }

    /// Same design and prior with new counts.
    pub fn with_plates(&self, plates: Vec<Plate>) -> Result<Self> {
        Self::new(plates, self.prior)
    }

    fn update_alpha(&self, st: &mut SeedsState, mode: SweepMode, rng: &mut RngStream) {
        for j in 0..N_COEF {
            let step = st.alpha_tune[j].scale() * std_normal(rng);
            let old = st.alpha[j];
            let new = old + step;
            let mut delta = (old * old - new * new) / (2.0 * self.prior.coef_var);
            for (i, p) in self.plates.iter().enumerate() {
                let x = self.design[i][j];
                if x == 0.0 || Some(i) == mode.holdout {
                    continue;
                }
                let e = st.eta[i] + st.b[i];
                delta += ll_logit(p.r, p.n, e + x * step) - ll_logit(p.r, p.n, e);
            }
            let ok = accept(rng, delta);
            if ok {
                st.alpha[j] = new;
                for i in 0..self.plates.len() {
                    st.eta[i] += self.design[i][j] * step;
                }
            }
            st.alpha_tune[j].record(ok, mode.adapt);
        }
    }

    fn update_effects(&self, st: &mut SeedsState, mode: SweepMode, rng: &mut RngStream) -> Result<()> {
        let inv2v = 0.5 / st.sigma2;
        for (i, p) in self.plates.iter().enumerate() {
            if Some(i) == mode.holdout {
                st.b[i] = normal(rng, 0.0, st.sigma2)?;
                continue;
            }
            let old = st.b[i];
            let new = old + st.b_tune[i].scale() * std_normal(rng);
            let delta = ll_logit(p.r, p.n, st.eta[i] + new) - ll_logit(p.r, p.n, st.eta[i] + old)
                + (old * old - new * new) * inv2v;
            let ok = accept(rng, delta);
            if ok {
                st.b[i] = new;
            }
            st.b_tune[i].record(ok, mode.adapt);
        }
        Ok(())
    }
}

impl LatentModel for SeedsModel {
    type State = SeedsState;

    fn tag(&self) -> String {
        "seeds".into()
    }

    fn n_units(&self) -> usize {
        self.plates.len()
    }

    fn theta_names(&self) -> Vec<String> {
        ["alpha0", "alpha1", "alpha2", "alpha12", "sigma2"]
            .iter()
            .map(|s| s.to_string())
            .collect()
    }

    fn n_theta(&self) -> usize {
        N_COEF + 1
    }

    fn init_state(&self, _holdout: Option<usize>, rng: &mut RngStream) -> Result<SeedsState> {
        let n = self.plates.len();
        let mut alpha = [0.0; N_COEF];
        // jitter so chains do not start identically
        for a in alpha.iter_mut() {
            *a = 0.1 * std_normal(rng);
        }
        let eta = (0..n)
            .map(|i| self.design[i].iter().zip(&alpha).map(|(x, a)| x * a).sum())
            .collect();
        Ok(SeedsState {
            alpha,
            sigma2: 0.1,
            b: vec![0.0; n],
            eta,
            alpha_tune: vec![RwScale::new(0.2); N_COEF],
            b_tune: vec![RwScale::new(0.3); n],
        })
    }

    fn sweep(&self, st: &mut SeedsState, mode: SweepMode, rng: &mut RngStream) -> Result<()> {
        self.update_alpha(st, mode, rng);
        self.update_effects(st, mode, rng)?;
        let (shape, scale) = self.sigma2_conditional(&st.b);
        st.sigma2 = inv_gamma(rng, shape, scale)?;
        Ok(())
    }

    fn end_adaptation(&self, st: &mut SeedsState) {
        st.alpha_tune
            .iter_mut()
            .chain(st.b_tune.iter_mut())
            .for_each(RwScale::reset_counts);
        // refresh the cached predictor against accumulated rounding
        for i in 0..self.plates.len() {
            st.eta[i] = self.design[i].iter().zip(&st.alpha).map(|(x, a)| x * a).sum();
        }
    }

    fn acceptance_rates(&self, st: &SeedsState) -> Vec<(String, f64)> {
        let names = ["alpha0", "alpha1", "alpha2", "alpha12"];
        let mut out: Vec<(String, f64)> = names
            .iter()
            .zip(&st.alpha_tune)
            .map(|(n, t)| (n.to_string(), t.rate()))
            .collect();
        out.extend(
            st.b_tune
                .iter()
                .enumerate()
                .map(|(i, t)| (format!("b[{}]", i + 1), t.rate())),
        );
        out
    }

    fn write_draw(&self, st: &SeedsState, theta: &mut [f64], latent: &mut [f64]) {
        theta[..N_COEF].copy_from_slice(&st.alpha);
        theta[N_COEF] = st.sigma2;
        latent.copy_from_slice(&st.b);
    }

    #[inline]
    fn nonint_logpred(&self, i: usize, theta: &[f64], b_i: f64) -> f64 {
        let p = &self.plates[i];
        self.ln_choose[i] + ll_logit(p.r, p.n, self.logit(i, theta, b_i))
    }

    fn regen_latent(&self, _i: usize, draw: Draw<'_>, rng: &mut RngStream) -> Result<f64> {
        normal(rng, 0.0, draw.theta[N_COEF])
    }

    fn eval_midp(&self, i: usize, theta: &[f64], b_i: f64) -> Option<f64> {
        let p = &self.plates[i];
        binomial_midp_tail(p.r, p.n, logistic(self.logit(i, theta, b_i))).ok()
    }
}
