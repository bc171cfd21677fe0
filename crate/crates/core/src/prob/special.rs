//! Scalar special functions and small reductions.

use statrs::distribution::{ChiSquared, ContinuousCDF};
use statrs::function::beta::beta_reg;
use statrs::function::gamma::gamma_lr;

use crate::error::{Error, Result};

/// `log Σ exp(x_j)`, shifted by the maximum.
pub fn log_sum_exp(xs: &[f64]) -> Result<f64> {
    if xs.is_empty() {
        return Err(Error::arg("log_sum_exp of an empty slice"));
    }
    let mut max = f64::NEG_INFINITY;
    for &x in xs {
        if x.is_nan() || x == f64::INFINITY {
            return Err(Error::arg(format!("log_sum_exp input {x} is not finite or -inf")));
        }
        if x > max {
            max = x;
        }
    }
    if max == f64::NEG_INFINITY {
        return Ok(f64::NEG_INFINITY);
    }
    let s: f64 = xs.iter().map(|&x| (x - max).exp()).sum();
    Ok(max + s.ln())
}

/// `log( (1/n) Σ exp(x_j) )`.
pub fn log_mean_exp(xs: &[f64]) -> Result<f64> {
    Ok(log_sum_exp(xs)? - (xs.len() as f64).ln())
}

pub fn mean(xs: &[f64]) -> f64 {
    xs.iter().sum::<f64>() / xs.len() as f64
}

/// Unbiased sample variance (denominator `n - 1`), two-pass.
pub fn sample_variance(xs: &[f64]) -> Result<f64> {
    if xs.len() < 2 {
        return Err(Error::arg(format!(
            "sample variance needs at least 2 values, got {}",
            xs.len()
        )));
    }
    let m = mean(xs);
    let ss: f64 = xs.iter().map(|&x| (x - m) * (x - m)).sum();
    Ok(ss / (xs.len() - 1) as f64)
}

/// CDF of Student's t with `df` degrees of freedom via the regularized incomplete beta.
pub fn student_t_cdf(t: f64, df: f64) -> Result<f64> {
    if !(df > 0.0) || !df.is_finite() {
        return Err(Error::arg(format!("t distribution needs df > 0, got {df}")));
    }
    if t.is_nan() {
        return Err(Error::arg("t statistic is NaN"));
    }
    if t == 0.0 {
        return Ok(0.5);
    }
    if t.is_infinite() {
        return Ok(if t > 0.0 { 1.0 } else { 0.0 });
    }
    let x = df / (df + t * t);
    // P(|T| > |t|) = I_x(df/2, 1/2)
    let two_tail = beta_reg(df / 2.0, 0.5, x);
    Ok(if t > 0.0 { 1.0 - 0.5 * two_tail } else { 0.5 * two_tail })
}

/// Mid-p right tail of Binomial(n, p): `Pr(Y > r) + 0.5 Pr(Y = r)`.
pub fn binomial_midp_tail(r_obs: u64, n: u64, p: f64) -> Result<f64> {
    let (_, at, above) = binomial_split(r_obs, n, p)?;
    Ok(above + 0.5 * at)
}

/// Mid-p left tail, `Pr(Y < r) + 0.5 Pr(Y = r)`; the complement of [`binomial_midp_tail`].
pub fn binomial_midp_left(r_obs: u64, n: u64, p: f64) -> Result<f64> {
    let (below, at, _) = binomial_split(r_obs, n, p)?;
    Ok(below + 0.5 * at)
}

/// Mid-p right tail of Poisson(rate).
pub fn poisson_midp_tail(r_obs: u64, rate: f64) -> Result<f64> {
    if !(rate >= 0.0) || !rate.is_finite() {
        return Err(Error::arg(format!("Poisson rate must be finite and >= 0, got {rate}")));
    }
    if rate == 0.0 {
        return Ok(if r_obs == 0 { 0.5 } else { 0.0 });
    }
    // Pr(Y > r) is the regularized lower incomplete gamma P(r + 1, rate)
    let above = gamma_lr(r_obs as f64 + 1.0, rate);
    let at = super::density::ln_poisson(r_obs, rate).exp();
    Ok((above + 0.5 * at).clamp(0.0, 1.0))
}

/// `(Pr(Y < r), Pr(Y = r), Pr(Y > r))`. The shorter tail is summed directly and
/// the other one is its complement, so the three parts add to one.
fn binomial_split(r: u64, n: u64, p: f64) -> Result<(f64, f64, f64)> {
    if r > n {
        return Err(Error::arg(format!("observed count {r} exceeds trials {n}")));
    }
    if !(0.0..=1.0).contains(&p) {
        return Err(Error::arg(format!("binomial probability {p} outside [0, 1]")));
    }
    if p == 0.0 {
        return Ok(if r == 0 { (0.0, 1.0, 0.0) } else { (1.0, 0.0, 0.0) });
    }
    if p == 1.0 {
        return Ok(if r == n { (0.0, 1.0, 0.0) } else { (0.0, 0.0, 1.0) });
    }
    let at = super::density::binomial_logpmf(r, n, p)?.exp();
    let odds = p / (1.0 - p);
    if r as f64 >= n as f64 * p {
        // r is above the mean: the upper tail is the small one
        let mut term = at;
        let mut above = 0.0;
        for k in r..n {
            term *= (n - k) as f64 / (k + 1) as f64 * odds;
            above += term;
        }
        let above = above.min(1.0 - at);
        let below = (1.0 - at - above).max(0.0);
        Ok((below, at, above))
    } else {
        let mut term = at;
        let mut below = 0.0;
        for k in (1..=r).rev() {
            term *= k as f64 / (n - k + 1) as f64 / odds;
            below += term;
        }
        let below = below.min(1.0 - at);
        let above = (1.0 - at - below).max(0.0);
        Ok((below, at, above))
    }
}

/// One-sample Kolmogorov–Smirnov test against Uniform(0, 1).
/// Returns `(D, p-value)` using the asymptotic distribution with Stephens' small-sample correction.
pub fn ks_uniform(xs: &[f64]) -> Result<(f64, f64)> {
    if xs.is_empty() {
        return Err(Error::arg("KS test on an empty sample"));
    }
    let mut v = xs.to_vec();
    v.sort_by(f64::total_cmp);
    let n = v.len() as f64;
    let mut d: f64 = 0.0;
    for (k, &x) in v.iter().enumerate() {
        let f = x.clamp(0.0, 1.0);
        d = d.max((k as f64 + 1.0) / n - f).max(f - k as f64 / n);
    }
    let lambda = (n.sqrt() + 0.12 + 0.11 / n.sqrt()) * d;
    Ok((d, kolmogorov_sf(lambda)))
}

fn kolmogorov_sf(lambda: f64) -> f64 {
    if lambda < 0.2 {
        return 1.0;
    }
    let mut s = 0.0;
    for j in 1..=100 {
        let j = j as f64;
        let term = (-2.0 * j * j * lambda * lambda).exp();
        s += if j as u64 % 2 == 1 { term } else { -term };
        if term < 1e-16 {
            break;
        }
    }
    (2.0 * s).clamp(0.0, 1.0)
}

/// Pearson chi-square goodness of fit. Cells with expected count below 5 are pooled
/// into their neighbour. Returns `(statistic, df, p-value)`.
pub fn chi_square_gof(observed: &[u64], probs: &[f64]) -> Result<(f64, usize, f64)> {
    if observed.len() != probs.len() || observed.is_empty() {
        return Err(Error::arg("observed and probability vectors differ in length"));
    }
    let total: u64 = observed.iter().sum();
    let total = total as f64;
    let mut cells: Vec<(f64, f64)> = Vec::new();
    let (mut o_acc, mut e_acc) = (0.0, 0.0);
    for (&o, &p) in observed.iter().zip(probs) {
        o_acc += o as f64;
        e_acc += p * total;
        if e_acc >= 5.0 {
            cells.push((o_acc, e_acc));
            o_acc = 0.0;
            e_acc = 0.0;
        }
    }
    if e_acc > 0.0 || o_acc > 0.0 {
        match cells.last_mut() {
            Some(last) => {
                last.0 += o_acc;
                last.1 += e_acc;
            }
            None => cells.push((o_acc, e_acc)),
        }
    }
    if cells.len() < 2 {
        return Err(Error::arg("too few cells for a chi-square test"));
    }
    let stat: f64 = cells.iter().map(|&(o, e)| (o - e) * (o - e) / e).sum();
    let df = cells.len() - 1;
    let dist = ChiSquared::new(df as f64).map_err(|e| Error::Numerical(e.to_string()))?;
    Ok((stat, df, 1.0 - dist.cdf(stat)))
}
