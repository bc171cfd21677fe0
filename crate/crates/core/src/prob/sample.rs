//! Random variate generation.

use rand::Rng;
use rand_distr::{Binomial, Distribution, Gamma, Poisson, StandardNormal};
use statrs::distribution::{ContinuousCDF, Normal};

use super::RngStream;
use crate::error::{Error, Result};

#[inline]
pub fn std_normal(rng: &mut RngStream) -> f64 {
    rng.sample(StandardNormal)
}

/// Normal draw with the given mean and variance.
pub fn normal(rng: &mut RngStream, mean: f64, var: f64) -> Result<f64> {
    if !(var >= 0.0) || !var.is_finite() {
        return Err(Error::arg(format!("normal variance must be >= 0, got {var}")));
    }
    Ok(mean + var.sqrt() * std_normal(rng))
}

pub fn gamma(rng: &mut RngStream, shape: f64, scale: f64) -> Result<f64> {
    let g = Gamma::new(shape, scale).map_err(|e| Error::arg(format!("gamma({shape}, {scale}): {e}")))?;
    Ok(g.sample(rng))
}

/// Inverse-gamma with `shape` and `scale` (mean `scale / (shape - 1)`).
pub fn inv_gamma(rng: &mut RngStream, shape: f64, scale: f64) -> Result<f64> {
    if !(shape > 0.0 && scale > 0.0) {
        return Err(Error::arg(format!(
            "inverse-gamma needs positive shape and scale, got ({shape}, {scale})"
        )));
    }
    let g = gamma(rng, shape, 1.0)?;
    Ok(scale / g)
}

pub fn dirichlet(rng: &mut RngStream, alpha: &[f64]) -> Result<Vec<f64>> {
    if alpha.is_empty() || alpha.iter().any(|&a| !(a > 0.0)) {
        return Err(Error::arg("Dirichlet concentrations must be positive"));
    }
    let mut g = alpha.iter().map(|&a| gamma(rng, a, 1.0)).collect::<Result<Vec<_>>>()?;
    let total: f64 = g.iter().sum();
    if !(total > 0.0) {
        // every component underflowed; fall back to the mean
        let a0: f64 = alpha.iter().sum();
        return Ok(alpha.iter().map(|a| a / a0).collect());
    }
    g.iter_mut().for_each(|v| *v /= total);
    Ok(g)
}

/// Index drawn with probability proportional to `weights` (non-negative, not all zero).
pub fn categorical(rng: &mut RngStream, weights: &[f64]) -> Result<usize> {
    let total: f64 = weights.iter().sum();
    if weights.is_empty() || weights.iter().any(|&w| !(w >= 0.0)) || !(total > 0.0) {
        return Err(Error::arg("categorical weights must be non-negative with positive sum"));
    }
    let u = rng.uniform() * total;
    let mut acc = 0.0;
    let mut last = 0;
    for (k, &w) in weights.iter().enumerate() {
        if w > 0.0 {
            acc += w;
            last = k;
            if u < acc {
                return Ok(k);
            }
        }
    }
    Ok(last)
}

/// Categorical draw from unnormalized log weights.
pub fn categorical_log(rng: &mut RngStream, log_weights: &[f64], scratch: &mut Vec<f64>) -> Result<usize> {
    let max = log_weights.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    if !max.is_finite() {
        return Err(Error::arg("categorical log weights have no finite maximum"));
    }
    scratch.clear();
    scratch.extend(log_weights.iter().map(|&l| (l - max).exp()));
    categorical(rng, scratch)
}

/// Normal(mean, sd²) restricted to `[lo, hi]`, by inversion.
pub fn truncated_normal(rng: &mut RngStream, mean: f64, sd: f64, lo: f64, hi: f64) -> Result<f64> {
    if !(sd > 0.0) || !(lo < hi) {
        return Err(Error::arg(format!(
            "truncated normal needs sd > 0 and lo < hi, got sd={sd}, [{lo}, {hi}]"
        )));
    }
    let z = Normal::new(0.0, 1.0).expect("standard normal");
    let (a, b) = ((lo - mean) / sd, (hi - mean) / sd);
    // work in the tail closer to zero mass loss
    if a > 0.0 {
        let (fa, fb) = (z.sf(a), z.sf(b));
        if !(fa > fb) {
            return Err(Error::Numerical("truncated normal interval has no mass".into()));
        }
        let u = fb + rng.uniform() * (fa - fb);
        Ok((mean + sd * -z.inverse_cdf(u)).clamp(lo, hi))
    } else {
        let (fa, fb) = (z.cdf(a), z.cdf(b));
        if !(fb > fa) {
            return Err(Error::Numerical("truncated normal interval has no mass".into()));
        }
        let u = fa + rng.uniform() * (fb - fa);
        Ok((mean + sd * z.inverse_cdf(u)).clamp(lo, hi))
    }
}

pub fn poisson(rng: &mut RngStream, rate: f64) -> Result<u64> {
    if rate == 0.0 {
        return Ok(0);
    }
    let d = Poisson::new(rate).map_err(|e| Error::arg(format!("Poisson({rate}): {e}")))?;
    Ok(d.sample(rng) as u64)
}

pub fn binomial(rng: &mut RngStream, n: u64, p: f64) -> Result<u64> {
    let d = Binomial::new(n, p).map_err(|e| Error::arg(format!("Binomial({n}, {p}): {e}")))?;
    Ok(d.sample(rng))
}
