use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::prob::{mean, student_t_cdf, RngStream};

/// Mean absolute error of `estimate` against `reference`, each term scaled
/// by `min(p, 1 - p)`, in percent.
pub fn relative_error(estimate: &[f64], reference: &[f64]) -> Result<f64> {
    if estimate.len() != reference.len() || estimate.is_empty() {
        return Err(Error::arg(format!(
            "relative error needs equal non-empty lengths, got {} and {}",
            estimate.len(),
            reference.len()
        )));
    }
    let mut total = 0.0;
    for (i, (&e, &p)) in estimate.iter().zip(reference).enumerate() {
        if !(p > 0.0 && p < 1.0) {
            return Err(Error::arg(format!(
                "reference p-value {p} at unit {i} is not in (0, 1)"
            )));
        }
        total += (e - p).abs() / p.min(1.0 - p);
    }
    Ok(100.0 * total / estimate.len() as f64)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TTest {
    pub mean_diff: f64,
    pub t: f64,
    pub df: f64,
    pub p_value: f64,
}

/// One-sided paired t-test of `mean(a - b) > 0`.
///
/// With zero spread in the differences the statistic is degenerate: all
/// zero gives 0.5, otherwise 0 or 1 by the sign of the mean.
pub fn paired_onesided_ttest(a: &[f64], b: &[f64]) -> Result<TTest> {
    if a.len() != b.len() {
        return Err(Error::arg(format!(
            "paired t-test lengths differ: {} vs {}",
            a.len(),
            b.len()
        )));
    }
    if a.len() < 2 {
        return Err(Error::arg("paired t-test needs at least two pairs"));
    }
    let d: Vec<f64> = a.iter().zip(b).map(|(x, y)| x - y).collect();
    let n = d.len() as f64;
    let dbar = mean(&d);
    let sd = crate::prob::sample_variance(&d)?.sqrt();
    let df = n - 1.0;
    if sd == 0.0 {
        let (t, p) = if dbar == 0.0 {
            (0.0, 0.5)
        } else if dbar > 0.0 {
            (f64::INFINITY, 0.0)
        } else {
            (f64::NEG_INFINITY, 1.0)
        };
        return Ok(TTest {
            mean_diff: dbar,
            t,
            df,
            p_value: p,
        });
    }
    let t = dbar / (sd / n.sqrt());
    Ok(TTest {
        mean_diff: dbar,
        t,
        df,
        p_value: 1.0 - student_t_cdf(t, df)?,
    })
}

/// Mean p-value over `draws` pairings of a random run of `a` with a random
/// run of `b` (both drawn with replacement).
pub fn ttest_replication_average(
    runs_a: &[Vec<f64>],
    runs_b: &[Vec<f64>],
    draws: usize,
    rng: &mut RngStream,
) -> Result<f64> {
    if runs_a.is_empty() || runs_b.is_empty() || draws == 0 {
        return Err(Error::arg("replication t-test needs runs and at least one draw"));
    }
    let mut total = 0.0;
    for _ in 0..draws {
        let x = &runs_a[rng.random_range(0..runs_a.len())];
        let y = &runs_b[rng.random_range(0..runs_b.len())];
        total += paired_onesided_ttest(x, y)?.p_value;
    }
    Ok(total / draws as f64)
}
