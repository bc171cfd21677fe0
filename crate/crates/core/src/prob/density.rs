//! Log densities and log mass functions.

use statrs::function::factorial::{ln_binomial, ln_factorial};
use statrs::function::gamma::ln_gamma;

use super::linalg::{cholesky, SymMatrix};
use crate::error::{Error, Result};

pub const LN_2PI: f64 = 1.837_877_066_409_345_5;

/// Unchecked normal log density with variance `var`.
#[inline]
pub(crate) fn ln_normal(x: f64, mean: f64, var: f64) -> f64 {
    let d = x - mean;
    -0.5 * (LN_2PI + var.ln() + d * d / var)
}

/// Unchecked Poisson log mass.
#[inline]
pub(crate) fn ln_poisson(k: u64, rate: f64) -> f64 {
    if rate == 0.0 {
        return if k == 0 { 0.0 } else { f64::NEG_INFINITY };
    }
    k as f64 * rate.ln() - rate - ln_factorial(k)
}

/// Unchecked binomial log mass, given `log p` and `log(1-p)`.
#[inline]
pub(crate) fn ln_binomial_from_logs(r: u64, n: u64, ln_p: f64, ln_q: f64) -> f64 {
    let a = if r == 0 { 0.0 } else { r as f64 * ln_p };
    let b = if r == n { 0.0 } else { (n - r) as f64 * ln_q };
    ln_binomial(n, r) + a + b
}

pub fn normal_logpdf(x: f64, mean: f64, var: f64) -> Result<f64> {
    if !(var > 0.0) || !var.is_finite() {
        return Err(Error::arg(format!("normal variance must be positive, got {var}")));
    }
    Ok(ln_normal(x, mean, var))
}

pub fn poisson_logpmf(k: u64, rate: f64) -> Result<f64> {
    if !(rate > 0.0) || !rate.is_finite() {
        return Err(Error::arg(format!("Poisson rate must be positive, got {rate}")));
    }
    Ok(ln_poisson(k, rate))
}

pub fn binomial_logpmf(r: u64, n: u64, p: f64) -> Result<f64> {
    if r > n {
        return Err(Error::arg(format!("binomial count {r} exceeds trials {n}")));
    }
    if !(0.0..=1.0).contains(&p) {
        return Err(Error::arg(format!("binomial probability {p} outside [0, 1]")));
    }
    Ok(ln_binomial_from_logs(r, n, p.ln(), (-p).ln_1p()))
}

/// Inverse-gamma with `shape` and `scale`: density ∝ x^(-shape-1) exp(-scale / x).
pub fn inv_gamma_logpdf(x: f64, shape: f64, scale: f64) -> Result<f64> {
    if !(shape > 0.0 && scale > 0.0) {
        return Err(Error::arg(format!(
            "inverse-gamma needs positive shape and scale, got ({shape}, {scale})"
        )));
    }
    if !(x > 0.0) {
        return Ok(f64::NEG_INFINITY);
    }
    Ok(shape * scale.ln() - ln_gamma(shape) - (shape + 1.0) * x.ln() - scale / x)
}

pub fn dirichlet_logpdf(x: &[f64], alpha: &[f64]) -> Result<f64> {
    if x.len() != alpha.len() || x.is_empty() {
        return Err(Error::arg("Dirichlet point and concentration differ in length"));
    }
    if alpha.iter().any(|&a| !(a > 0.0)) {
        return Err(Error::arg("Dirichlet concentrations must be positive"));
    }
    let total: f64 = x.iter().sum();
    if x.iter().any(|&v| v < 0.0) || (total - 1.0).abs() > 1e-9 {
        return Ok(f64::NEG_INFINITY);
    }
    let a0: f64 = alpha.iter().sum();
    let mut lp = ln_gamma(a0) - alpha.iter().map(|&a| ln_gamma(a)).sum::<f64>();
    for (&xi, &ai) in x.iter().zip(alpha) {
        lp += (ai - 1.0) * xi.ln();
    }
    Ok(lp)
}

/// Multivariate normal log density with covariance `cov`.
pub fn mvn_logpdf_cov(x: &[f64], mean: &[f64], cov: &SymMatrix) -> Result<f64> {
    let n = check_dims(x, mean, cov)?;
    let l = cholesky(cov)?;
    let d: Vec<f64> = x.iter().zip(mean).map(|(a, b)| a - b).collect();
    let z = l.forward(&d);
    let q: f64 = z.iter().map(|v| v * v).sum();
    Ok(-0.5 * (n as f64 * LN_2PI + l.log_det() + q))
}

/// Multivariate normal log density with precision `prec`.
pub fn mvn_logpdf_prec(x: &[f64], mean: &[f64], prec: &SymMatrix) -> Result<f64> {
    let n = check_dims(x, mean, prec)?;
    let l = cholesky(prec)?;
    let d: Vec<f64> = x.iter().zip(mean).map(|(a, b)| a - b).collect();
    let q = prec.quad_form(&d);
    Ok(-0.5 * (n as f64 * LN_2PI - l.log_det() + q))
}

fn check_dims(x: &[f64], mean: &[f64], m: &SymMatrix) -> Result<usize> {
    let n = m.dim();
    if x.len() != n || mean.len() != n {
        return Err(Error::arg(format!(
            "MVN dimension mismatch: x {}, mean {}, matrix {n}",
            x.len(),
            mean.len()
        )));
    }
    Ok(n)
}
