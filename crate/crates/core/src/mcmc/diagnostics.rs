//! Convergence summaries. They are reported, never used to stop a run.

use serde::Serialize;

use super::SampleStore;
use crate::prob::{mean, sample_variance};

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ParamSummary {
    pub name: String,
    pub mean: f64,
    pub sd: f64,
    pub split_rhat: f64,
    pub ess: f64,
}

/// Split each chain in half and compute the potential scale reduction factor.
pub fn split_rhat(chains: &[&[f64]]) -> f64 {
    let halves: Vec<&[f64]> = chains
        .iter()
        .flat_map(|c| {
            let h = c.len() / 2;
            [&c[..h], &c[c.len() - h..]]
        })
        .collect();
    let n = halves.iter().map(|h| h.len()).min().unwrap_or(0);
    if halves.len() < 2 || n < 2 {
        return f64::NAN;
    }
    let means: Vec<f64> = halves.iter().map(|h| mean(h)).collect();
    let w = halves.iter().map(|h| sample_variance(h).unwrap_or(0.0)).sum::<f64>() / halves.len() as f64;
    let b = n as f64 * sample_variance(&means).unwrap_or(0.0);
    if w == 0.0 {
        return if b == 0.0 { 1.0 } else { f64::INFINITY };
    }
    let var_plus = (n as f64 - 1.0) / n as f64 * w + b / n as f64;
    (var_plus / w).sqrt()
}

fn autocovariance(x: &[f64], lag: usize) -> f64 {
    let m = mean(x);
    let n = x.len();
    (0..n - lag).map(|t| (x[t] - m) * (x[t + lag] - m)).sum::<f64>() / n as f64
}

/// Effective sample size with Geyer's initial positive sequence on the
/// chain-averaged autocorrelation.
pub fn effective_sample_size(chains: &[&[f64]]) -> f64 {
    let m = chains.len();
    let n = chains.iter().map(|c| c.len()).min().unwrap_or(0);
    if m == 0 || n < 4 {
        return f64::NAN;
    }
    let acov0: Vec<f64> = chains.iter().map(|c| autocovariance(&c[..n], 0)).collect();
    let w = mean(&acov0) * n as f64 / (n as f64 - 1.0);
    let chain_means: Vec<f64> = chains.iter().map(|c| mean(&c[..n])).collect();
    let b = if m > 1 {
        n as f64 * sample_variance(&chain_means).unwrap_or(0.0)
    } else {
        0.0
    };
    let var_plus = (n as f64 - 1.0) / n as f64 * w + b / n as f64;
    if !(var_plus > 0.0) {
        return (m * n) as f64;
    }
    let rho = |lag: usize| -> f64 {
        let acov: f64 = chains.iter().map(|c| autocovariance(&c[..n], lag)).sum::<f64>() / m as f64;
        1.0 - (w - acov) / var_plus
    };
    let mut sum = 0.0;
    let mut prev_pair = f64::INFINITY;
    let mut t = 0;
    while t + 1 < n {
        let pair = rho(t) + rho(t + 1);
        if pair <= 0.0 {
            break;
        }
        // monotone sequence
        let pair = pair.min(prev_pair);
        sum += pair;
        prev_pair = pair;
        t += 2;
    }
    let tau = (2.0 * sum - 1.0).max(1.0 / ((m * n) as f64).log10().max(1.0));
    (m * n) as f64 / tau
}

/// Mean, sd, split R-hat and ESS of every parameter in the store.
pub fn summarize(store: &SampleStore) -> Vec<ParamSummary> {
    let per = store.draws_per_chain();
    (0..store.n_theta())
        .map(|j| {
            let col = store.theta_column(j);
            let chains: Vec<&[f64]> = col.chunks(per.max(1)).collect();
            ParamSummary {
                name: store.theta_names()[j].clone(),
                mean: mean(&col),
                sd: sample_variance(&col).map(f64::sqrt).unwrap_or(f64::NAN),
                split_rhat: split_rhat(&chains),
                ess: effective_sample_size(&chains),
            }
        })
        .collect()
}
