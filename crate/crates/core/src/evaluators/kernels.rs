//! Slice kernels shared by every estimator. All averaging of densities is
//! done on the log scale; `store_lw` optionally gives each draw a log weight.

use crate::error::{Error, Result};
use crate::prob::log_sum_exp;

fn check_len(x: &[f64], store_lw: Option<&[f64]>) -> Result<()> {
    if x.is_empty() {
        return Err(Error::arg("no draws"));
    }
    if let Some(lw) = store_lw {
        if lw.len() != x.len() {
            return Err(Error::arg(format!("{} values but {} weights", x.len(), lw.len())));
        }
    }
    Ok(())
}

/// `log mean(exp(x))`, weighted when `store_lw` is given.
pub fn log_mean(x: &[f64], store_lw: Option<&[f64]>) -> Result<f64> {
    check_len(x, store_lw)?;
    match store_lw {
        None => Ok(log_sum_exp(x)? - (x.len() as f64).ln()),
        Some(lw) => {
            let terms: Vec<f64> = x.iter().zip(lw).map(|(a, b)| a + b).collect();
            Ok(log_sum_exp(&terms)? - log_sum_exp(lw)?)
        }
    }
}

/// Log of the harmonic mean of `exp(ld)`: `-log mean(exp(-ld))`.
/// A draw with `ld = -inf` has infinite weight and makes the result `-inf`.
pub fn harmonic_log_mean(ld: &[f64], store_lw: Option<&[f64]>) -> Result<f64> {
    check_len(ld, store_lw)?;
    if ld.iter().any(|v| v.is_nan()) {
        return Err(Error::Numerical("NaN log density".into()));
    }
    if ld.contains(&f64::NEG_INFINITY) {
        log::warn!("draw with zero predictive density: importance weight is infinite");
        return Ok(f64::NEG_INFINITY);
    }
    let neg: Vec<f64> = ld.iter().map(|v| -v).collect();
    Ok(-log_mean(&neg, store_lw)?)
}

/// Mean and variance of `x`; sample variance (`S - 1`) for plain draws,
/// weighted population variance for weighted rows.
pub fn mean_and_variance(x: &[f64], store_lw: Option<&[f64]>) -> Result<(f64, f64)> {
    check_len(x, store_lw)?;
    match store_lw {
        None => {
            if x.len() < 2 {
                return Err(Error::arg("variance needs at least two draws"));
            }
            let m = crate::prob::mean(x);
            Ok((m, crate::prob::sample_variance(x)?))
        }
        Some(lw) => {
            let total = log_sum_exp(lw)?;
            let w: Vec<f64> = lw.iter().map(|l| (l - total).exp()).collect();
            let m: f64 = x.iter().zip(&w).map(|(a, b)| a * b).sum();
            let v: f64 = x.iter().zip(&w).map(|(a, b)| b * (a - m) * (a - m)).sum();
            Ok((m, v))
        }
    }
}

/// WAIC form: `log mean(exp(ld)) - var(ld)`.
pub fn waic_log_ppd(ld: &[f64], store_lw: Option<&[f64]>) -> Result<f64> {
    if ld.iter().any(|v| !v.is_finite()) {
        return Err(Error::Numerical("WAIC needs finite log densities".into()));
    }
    let (_, var) = mean_and_variance(ld, store_lw)?;
    Ok(log_mean(ld, store_lw)? - var)
}

/// `sum_s a_s W_s / sum_s W_s` with `log W_s = log_w[s]` (plus the store weight).
///
/// `log_abs_a` holds `log |a_s|` and `negative` marks the draws with `a_s < 0`.
pub fn weighted_ratio(
    log_abs_a: &[f64],
    negative: Option<&[bool]>,
    log_w: &[f64],
    store_lw: Option<&[f64]>,
) -> Result<f64> {
    check_len(log_w, store_lw)?;
    if log_abs_a.len() != log_w.len() {
        return Err(Error::arg("evaluation values and weights differ in length"));
    }
    if log_w.iter().any(|v| v.is_nan()) || log_abs_a.iter().any(|v| v.is_nan()) {
        return Err(Error::Numerical("NaN in importance ratio".into()));
    }
    if log_w.contains(&f64::INFINITY) {
        return Err(Error::Numerical("infinite importance weight".into()));
    }
    let lw: Vec<f64> = match store_lw {
        None => log_w.to_vec(),
        Some(s) => log_w.iter().zip(s).map(|(a, b)| a + b).collect(),
    };
    let den = log_sum_exp(&lw)?;
    if den == f64::NEG_INFINITY {
        return Err(Error::Numerical("all importance weights are zero".into()));
    }
    let mut pos = Vec::with_capacity(lw.len());
    let mut neg = Vec::new();
    for (s, (&la, &w)) in log_abs_a.iter().zip(&lw).enumerate() {
        if negative.is_some_and(|n| n[s]) {
            neg.push(la + w);
        } else {
            pos.push(la + w);
        }
    }
    let part = |v: &[f64]| -> Result<f64> {
        if v.is_empty() {
            Ok(0.0)
        } else {
            Ok((log_sum_exp(v)? - den).exp())
        }
    };
    Ok(part(&pos)? - part(&neg)?)
}

/// Plain or store-weighted mean.
pub fn plain_mean(a: &[f64], store_lw: Option<&[f64]>) -> Result<f64> {
    check_len(a, store_lw)?;
    Ok(weighted_mean(a, store_lw))
}

fn weighted_mean(a: &[f64], store_lw: Option<&[f64]>) -> f64 {
    match store_lw {
        None => crate::prob::mean(a),
        Some(lw) => {
            let total = log_sum_exp(lw).unwrap_or(f64::NAN);
            let w: Vec<f64> = lw.iter().map(|l| (l - total).exp()).collect();
            a.iter().zip(&w).map(|(x, v)| x * v).sum::<f64>() / w.iter().sum::<f64>()
        }
    }
}
