//! Poisson disease-mapping models with a proper CAR prior on log relative risks.
//!
//! `y_i ~ Poisson(E_i exp(s_i))` and `s ~ N(alpha + x beta, tau2 (I - phi C)^-1 M)`
//! with `c_ij = sqrt(E_j / E_i)` on edges and `M = diag(1 / E_i)`. The
//! non-spatial variants replace the covariance by `tau2 I`.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::tuning::RwScale;
use super::{accept, Draw, LatentModel, SweepMode};
use crate::error::{Error, Result};
use crate::prob::density::{ln_normal, ln_poisson, LN_2PI};
use crate::prob::sample::{inv_gamma, std_normal};
use crate::prob::{log_mean_exp, poisson_midp_tail, sym_eigenvalues, RngStream, SymMatrix};

/// Half-width of the spatial parameter's range on a graph with no edges.
pub const UNBOUNDED_PHI: f64 = 1e3;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CarVariant {
    SpatialLinear,
    Spatial,
    Linear,
    Exchangeable,
}

impl CarVariant {
    pub const ALL: [CarVariant; 4] = [
        CarVariant::SpatialLinear,
        CarVariant::Linear,
        CarVariant::Spatial,
        CarVariant::Exchangeable,
    ];

    pub fn has_beta(self) -> bool {
        matches!(self, CarVariant::SpatialLinear | CarVariant::Linear)
    }

    pub fn is_spatial(self) -> bool {
        matches!(self, CarVariant::SpatialLinear | CarVariant::Spatial)
    }

    pub fn name(self) -> &'static str {
        match self {
            CarVariant::SpatialLinear => "spatial-linear",
            CarVariant::Spatial => "spatial",
            CarVariant::Linear => "linear",
            CarVariant::Exchangeable => "exchangeable",
        }
    }
}

impl fmt::Display for CarVariant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for CarVariant {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        CarVariant::ALL
            .into_iter()
            .find(|v| v.name() == s)
            .ok_or_else(|| Error::Config(format!("unknown CAR variant `{s}`")))
    }
}

/// Graph, expected counts and the derived spectral quantities.
#[derive(Clone, Debug)]
pub struct CarStructure {
    expected: Vec<f64>,
    neighbors: Vec<Vec<usize>>,
    /// `c_ij` aligned with `neighbors`.
    c: Vec<Vec<f64>>,
    /// `sqrt(E_i E_j)` aligned with `neighbors`: minus the off-diagonal precision per unit phi.
    w: Vec<Vec<f64>>,
    eigen: Vec<f64>,
    support: (f64, f64),
    ln_expected_sum: f64,
}

impl CarStructure {
    pub fn new(expected: Vec<f64>, neighbors: Vec<Vec<usize>>) -> Result<Self> {
        let n = expected.len();
        if n == 0 || neighbors.len() != n {
            return Err(Error::arg(format!(
                "{} expected counts but {} adjacency rows",
                n,
                neighbors.len()
            )));
        }
        if let Some(i) = expected.iter().position(|&e| !(e > 0.0) || !e.is_finite()) {
            return Err(Error::arg(format!("expected count of unit {} must be positive", i + 1)));
        }
        for (i, nb) in neighbors.iter().enumerate() {
            for &j in nb {
                if j >= n || j == i {
                    return Err(Error::arg(format!("unit {} has invalid neighbor {}", i + 1, j + 1)));
                }
                if !neighbors[j].contains(&i) {
                    return Err(Error::arg(format!("adjacency not symmetric: {} -> {}", i + 1, j + 1)));
                }
            }
        }
        let c = neighbors
            .iter()
            .enumerate()
            .map(|(i, nb)| nb.iter().map(|&j| (expected[j] / expected[i]).sqrt()).collect())
            .collect();
        let w = neighbors
            .iter()
            .enumerate()
            .map(|(i, nb)| nb.iter().map(|&j| (expected[i] * expected[j]).sqrt()).collect())
            .collect();
        let adjacency = SymMatrix::from_fn(n, |i, j| if neighbors[i].contains(&j) { 1.0 } else { 0.0 })?;
        let eigen = sym_eigenvalues(&adjacency)?;
        let support = phi_support(&eigen);
        let ln_expected_sum = expected.iter().map(|e| e.ln()).sum();
        Ok(Self {
            expected,
            neighbors,
            c,
            w,
            eigen,
            support,
            ln_expected_sum,
        })
    }

    pub fn n(&self) -> usize {
        self.expected.len()
    }

    pub fn expected(&self) -> &[f64] {
        &self.expected
    }

    pub fn neighbors(&self, i: usize) -> &[usize] {
        &self.neighbors[i]
    }

    /// `c_ij` for the neighbors of `i`, in the order of [`CarStructure::neighbors`].
    pub fn c_row(&self, i: usize) -> &[f64] {
        &self.c[i]
    }

    /// Ascending eigenvalues of the 0/1 adjacency matrix.
    pub fn adjacency_eigenvalues(&self) -> &[f64] {
        &self.eigen
    }

    /// Open interval of `phi` for which the covariance is positive definite.
    pub fn phi_support(&self) -> (f64, f64) {
        self.support
    }

    pub fn in_support(&self, phi: f64) -> bool {
        phi > self.support.0 && phi < self.support.1
    }

    /// `sum_i log(1 - phi lambda_i) = log det(I - phi C)`.
    pub fn log_det_factor(&self, phi: f64) -> f64 {
        self.eigen.iter().map(|l| (-phi * l).ln_1p()).sum()
    }

    /// Dense row-major `C`.
    pub fn c_dense(&self) -> Vec<f64> {
        let n = self.n();
        let mut out = vec![0.0; n * n];
        for i in 0..n {
            for (&j, &c) in self.neighbors[i].iter().zip(&self.c[i]) {
                out[i * n + j] = c;
            }
        }
        out
    }

    /// Precision `M^-1 (I - phi C) / tau2` of the spatial prior.
    pub fn precision(&self, phi: f64, tau2: f64) -> Result<SymMatrix> {
        let n = self.n();
        let mut q = SymMatrix::diagonal(&self.expected.iter().map(|e| e / tau2).collect::<Vec<_>>())?;
        for i in 0..n {
            for (&j, &w) in self.neighbors[i].iter().zip(&self.w[i]) {
                if j < i {
                    q.set(i, j, -phi * w / tau2);
                }
            }
        }
        Ok(q)
    }

    /// `(E v)_i - phi sum_j w_ij v_j`: the precision times `tau2` applied to `v`.
    fn scaled_precision_mul(&self, v: &[f64], phi: f64) -> Vec<f64> {
        (0..self.n())
            .map(|i| {
                let off: f64 = self.neighbors[i].iter().zip(&self.w[i]).map(|(&j, w)| w * v[j]).sum();
                self.expected[i] * v[i] - phi * off
            })
            .collect()
    }

    /// `(sum_i E_i d_i^2, sum_i d_i sum_j w_ij d_j)` so that `d' Q d tau2 = a - phi b`.
    fn quad_parts(&self, d: &[f64]) -> (f64, f64) {
        let mut a = 0.0;
        let mut b = 0.0;
        for i in 0..self.n() {
            a += self.expected[i] * d[i] * d[i];
            b += d[i]
                * self.neighbors[i]
                    .iter()
                    .zip(&self.w[i])
                    .map(|(&j, w)| w * d[j])
                    .sum::<f64>();
        }
        (a, b)
    }
}

/// `(1 / lambda_min, 1 / lambda_max)`, widened to `±UNBOUNDED_PHI` for a zero extreme eigenvalue.
pub fn phi_support(eigenvalues: &[f64]) -> (f64, f64) {
    let lo = eigenvalues.iter().cloned().fold(f64::INFINITY, f64::min);
    let hi = eigenvalues.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let tol = 1e-12;
    let a = if lo < -tol {
        (1.0 / lo).max(-UNBOUNDED_PHI)
    } else {
        -UNBOUNDED_PHI
    };
    let b = if hi > tol {
        (1.0 / hi).min(UNBOUNDED_PHI)
    } else {
        UNBOUNDED_PHI
    };
    (a, b)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CarPrior {
    pub coef_var: f64,
    pub shape: f64,
    pub scale: f64,
}

impl Default for CarPrior {
    fn default() -> Self {
        Self {
            coef_var: 1e6,
            shape: 0.5,
            scale: 0.0005,
        }
    }
}

/// Parameters of one variant; absent components are zero.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CarParams {
    pub alpha: f64,
    pub beta: f64,
    pub tau2: f64,
    pub phi: f64,
}

#[derive(Clone, Debug)]
pub struct CarModel {
    variant: CarVariant,
    y: Vec<u64>,
    x: Vec<f64>,
    structure: CarStructure,
    prior: CarPrior,
}

#[derive(Clone, Debug)]
pub struct CarState {
    pub params: CarParams,
    pub s: Vec<f64>,
    s_tune: Vec<RwScale>,
    phi_tune: RwScale,
}

impl CarModel {
    pub fn new(
        variant: CarVariant,
        y: Vec<u64>,
        x: Vec<f64>,
        structure: CarStructure,
        prior: CarPrior,
    ) -> Result<Self> {
        let n = structure.n();
        if y.len() != n || x.len() != n {
            return Err(Error::arg(format!(
                "CAR data lengths differ: {} counts, {} covariates, {} units",
                y.len(),
                x.len(),
                n
            )));
        }
        if !(prior.coef_var > 0.0 && prior.shape > 0.0 && prior.scale > 0.0) {
            return Err(Error::Config(format!("invalid CAR prior {prior:?}")));
        }
        Ok(Self {
            variant,
            y,
            x,
            structure,
            prior,
        })
    }

    pub fn variant(&self) -> CarVariant {
        self.variant
    }

    pub fn structure(&self) -> &CarStructure {
        &self.structure
    }

    pub fn counts(&self) -> &[u64] {
        &self.y
    }

    pub fn covariate(&self) -> &[f64] {
        &self.x
    }

    pub fn params(&self, theta: &[f64]) -> CarParams {
        let mut it = theta.iter().copied();
        let alpha = it.next().unwrap_or(0.0);
        let beta = if self.variant.has_beta() {
            it.next().unwrap_or(0.0)
        } else {
            0.0
        };
        let tau2 = it.next().unwrap_or(f64::NAN);
        let phi = if self.variant.is_spatial() {
            it.next().unwrap_or(0.0)
        } else {
            0.0
        };
        CarParams { alpha, beta, tau2, phi }
    }

    pub fn theta(&self, p: &CarParams) -> Vec<f64> {
        let mut out = vec![p.alpha];
        if self.variant.has_beta() {
            out.push(p.beta);
        }
        out.push(p.tau2);
        if self.variant.is_spatial() {
            out.push(p.phi);
        }
        out
    }

    #[inline]
    fn prior_mean(&self, i: usize, p: &CarParams) -> f64 {
        p.alpha + self.x[i] * p.beta
    }

    /// Mean and variance of `s_i` given `s_-i` (the value of `s[i]` is ignored).
    pub fn conditional(&self, i: usize, s: &[f64], p: &CarParams) -> (f64, f64) {
        let mu_i = self.prior_mean(i, p);
        if !self.variant.is_spatial() {
            return (mu_i, p.tau2);
        }
        let st = &self.structure;
        let pull: f64 = st.neighbors[i]
            .iter()
            .zip(&st.c[i])
            .map(|(&j, c)| c * (s[j] - self.prior_mean(j, p)))
            .sum();
        (mu_i + p.phi * pull, p.tau2 / st.expected[i])
    }

    /// Joint prior log density of `s`.
    pub fn log_joint_prior(&self, s: &[f64], p: &CarParams) -> Result<f64> {
        let n = self.structure.n();
        if s.len() != n {
            return Err(Error::arg(format!("expected {n} log risks, got {}", s.len())));
        }
        if !(p.tau2 > 0.0) {
            return Err(Error::arg(format!("tau2 must be positive, got {}", p.tau2)));
        }
        let d: Vec<f64> = (0..n).map(|i| s[i] - self.prior_mean(i, p)).collect();
        if !self.variant.is_spatial() {
            return Ok(d.iter().map(|&v| ln_normal(v, 0.0, p.tau2)).sum());
        }
        if !self.structure.in_support(p.phi) {
            let (lo, hi) = self.structure.phi_support();
            return Err(Error::arg(format!("phi = {} outside ({lo}, {hi})", p.phi)));
        }
        let (a, b) = self.structure.quad_parts(&d);
        let log_det = self.structure.ln_expected_sum + self.structure.log_det_factor(p.phi) - n as f64 * p.tau2.ln();
        Ok(0.5 * (log_det - n as f64 * LN_2PI - (a - p.phi * b) / p.tau2))
    }

    /// Gaussian full conditional of `(alpha, beta)` (or `alpha` alone) given `s`, `tau2`, `phi`.
    /// Returns the mean and the precision matrix; for the intercept-only variants the second
    /// coordinate is unused.
    pub fn coef_conditional(&self, s: &[f64], p: &CarParams) -> ([f64; 2], [[f64; 2]; 2]) {
        let n = self.structure.n();
        let ones = vec![1.0; n];
        let (q1, qx) = if self.variant.is_spatial() {
            (
                self.structure.scaled_precision_mul(&ones, p.phi),
                self.structure.scaled_precision_mul(&self.x, p.phi),
            )
        } else {
            (ones.clone(), self.x.clone())
        };
        let dot = |a: &[f64], b: &[f64]| a.iter().zip(b).map(|(u, v)| u * v).sum::<f64>();
        let prior_prec = 1.0 / self.prior.coef_var;
        if self.variant.has_beta() {
            let p11 = dot(&q1, &ones) / p.tau2 + prior_prec;
            let p12 = dot(&q1, &self.x) / p.tau2;
            let p22 = dot(&qx, &self.x) / p.tau2 + prior_prec;
            let h1 = dot(&q1, s) / p.tau2;
            let h2 = dot(&qx, s) / p.tau2;
            let det = p11 * p22 - p12 * p12;
            let m1 = (p22 * h1 - p12 * h2) / det;
            let m2 = (p11 * h2 - p12 * h1) / det;
            ([m1, m2], [[p11, p12], [p12, p22]])
        } else {
            let p11 = dot(&q1, &ones) / p.tau2 + prior_prec;
            let h1 = dot(&q1, s) / p.tau2;
            ([h1 / p11, 0.0], [[p11, 0.0], [0.0, 1.0]])
        }
    }

    fn draw_coefs(&self, st: &mut CarState, rng: &mut RngStream) {
        let (m, prec) = self.coef_conditional(&st.s, &st.params);
        if self.variant.has_beta() {
            // x = m + L^-T z with L L' = precision
            let l11 = prec[0][0].sqrt();
            let l21 = prec[1][0] / l11;
            let l22 = (prec[1][1] - l21 * l21).sqrt();
            let (z1, z2) = (std_normal(rng), std_normal(rng));
            let u2 = z2 / l22;
            let u1 = (z1 - l21 * u2) / l11;
            st.params.alpha = m[0] + u1;
            st.params.beta = m[1] + u2;
        } else {
            st.params.alpha = m[0] + std_normal(rng) / prec[0][0].sqrt();
        }
    }

    fn residuals(&self, s: &[f64], p: &CarParams) -> Vec<f64> {
        (0..s.len()).map(|i| s[i] - self.prior_mean(i, p)).collect()
    }

    fn draw_tau2(&self, st: &mut CarState, rng: &mut RngStream) -> Result<()> {
        let d = self.residuals(&st.s, &st.params);
        let quad = if self.variant.is_spatial() {
            let (a, b) = self.structure.quad_parts(&d);
            a - st.params.phi * b
        } else {
            d.iter().map(|v| v * v).sum()
        };
        let n = d.len() as f64;
        st.params.tau2 = inv_gamma(rng, self.prior.shape + 0.5 * n, self.prior.scale + 0.5 * quad)?;
        Ok(())
    }

    fn update_phi(&self, st: &mut CarState, adapt: bool, rng: &mut RngStream) {
        let d = self.residuals(&st.s, &st.params);
        let (a, b) = self.structure.quad_parts(&d);
        let tau2 = st.params.tau2;
        let target = |phi: f64| 0.5 * self.structure.log_det_factor(phi) - (a - phi * b) / (2.0 * tau2);
        let old = st.params.phi;
        let new = old + st.phi_tune.scale() * std_normal(rng);
        let ok = self.structure.in_support(new) && accept(rng, target(new) - target(old));
        if ok {
            st.params.phi = new;
        }
        st.phi_tune.record(ok, adapt);
    }

    fn update_risks(&self, st: &mut CarState, mode: SweepMode, rng: &mut RngStream) {
        let e = &self.structure.expected;
        for i in 0..self.structure.n() {
            let (m, v) = self.conditional(i, &st.s, &st.params);
            if Some(i) == mode.holdout {
                st.s[i] = m + v.sqrt() * std_normal(rng);
                continue;
            }
            let old = st.s[i];
            let new = old + st.s_tune[i].scale() * std_normal(rng);
            let y = self.y[i] as f64;
            let delta =
                y * (new - old) - e[i] * (new.exp() - old.exp()) + ((old - m).powi(2) - (new - m).powi(2)) / (2.0 * v);
            let ok = accept(rng, delta);
            if ok {
                st.s[i] = new;
            }
            st.s_tune[i].record(ok, mode.adapt);
        }
    }
}

impl LatentModel for CarModel {
    type State = CarState;

    fn tag(&self) -> String {
        format!("car-{}", self.variant)
    }

    fn n_units(&self) -> usize {
        self.structure.n()
    }

    fn theta_names(&self) -> Vec<String> {
        let mut out = vec!["alpha".to_string()];
        if self.variant.has_beta() {
            out.push("beta".into());
        }
        out.push("tau2".into());
        if self.variant.is_spatial() {
            out.push("phi".into());
        }
        out
    }

    fn n_theta(&self) -> usize {
        2 + self.variant.has_beta() as usize + self.variant.is_spatial() as usize
    }

    fn init_state(&self, holdout: Option<usize>, rng: &mut RngStream) -> Result<CarState> {
        let e = &self.structure.expected;
        let n = self.structure.n();
        let observed = |i: &usize| Some(*i) != holdout;
        let total_y: f64 = (0..n).filter(observed).map(|i| self.y[i] as f64).sum();
        let total_e: f64 = (0..n).filter(observed).map(|i| e[i]).sum();
        let alpha = ((total_y + 0.5) / total_e).ln();
        // the held-out unit starts at the overall rate
        let y_or_fit = |i: usize| {
            if Some(i) == holdout {
                total_y / total_e * e[i]
            } else {
                self.y[i] as f64
            }
        };
        let s: Vec<f64> = (0..n)
            .map(|i| ((y_or_fit(i) + 0.5) / e[i]).ln() + 0.05 * std_normal(rng))
            .collect();
        let s_tune = (0..n).map(|i| RwScale::new(1.0 / (y_or_fit(i) + 1.0).sqrt())).collect();
        Ok(CarState {
            params: CarParams {
                alpha,
                beta: 0.0,
                tau2: 0.5,
                phi: 0.0,
            },
            s,
            s_tune,
            phi_tune: RwScale::new(0.05),
        })
    }

    fn sweep(&self, st: &mut CarState, mode: SweepMode, rng: &mut RngStream) -> Result<()> {
        self.update_risks(st, mode, rng);
        self.draw_coefs(st, rng);
        self.draw_tau2(st, rng)?;
        if self.variant.is_spatial() {
            self.update_phi(st, mode.adapt, rng);
        }
        Ok(())
    }

    fn end_adaptation(&self, st: &mut CarState) {
        st.s_tune.iter_mut().for_each(RwScale::reset_counts);
        st.phi_tune.reset_counts();
    }

    fn acceptance_rates(&self, st: &CarState) -> Vec<(String, f64)> {
        let mut out: Vec<(String, f64)> = st
            .s_tune
            .iter()
            .enumerate()
            .map(|(i, t)| (format!("s[{}]", i + 1), t.rate()))
            .collect();
        if self.variant.is_spatial() {
            out.push(("phi".into(), st.phi_tune.rate()));
        }
        out
    }

    fn write_draw(&self, st: &CarState, theta: &mut [f64], latent: &mut [f64]) {
        theta.copy_from_slice(&self.theta(&st.params));
        latent.copy_from_slice(&st.s);
    }

    #[inline]
    fn nonint_logpred(&self, i: usize, _theta: &[f64], b_i: f64) -> f64 {
        ln_poisson(self.y[i], self.structure.expected[i] * b_i.exp())
    }

    fn regen_latent(&self, i: usize, draw: Draw<'_>, rng: &mut RngStream) -> Result<f64> {
        let (m, v) = self.conditional(i, draw.latent, &self.params(draw.theta));
        Ok(m + v.sqrt() * std_normal(rng))
    }

    /// Same draws as repeated [`regen_latent`](LatentModel::regen_latent), with the
    /// conditional computed once.
    fn int_logpred(&self, i: usize, draw: Draw<'_>, r: usize, rng: &mut RngStream) -> Result<f64> {
        let (m, v) = self.conditional(i, draw.latent, &self.params(draw.theta));
        let sd = v.sqrt();
        let terms: Vec<f64> = (0..r)
            .map(|_| self.nonint_logpred(i, draw.theta, m + sd * std_normal(rng)))
            .collect();
        log_mean_exp(&terms)
    }

    fn eval_midp(&self, i: usize, _theta: &[f64], b_i: f64) -> Option<f64> {
        poisson_midp_tail(self.y[i], self.structure.expected[i] * b_i.exp()).ok()
    }
}
