//! Batch-means Monte Carlo standard errors.
//!
//! Each chain is cut into contiguous batches (about 20 in total across
//! chains); batch means are treated as independent. Ratios use the delta
//! method on the per-draw residual `u - R w`.

use std::ops::Range;

use crate::mcmc::SampleStore;

const TARGET_BATCHES: usize = 20;

pub(crate) struct Batches(Vec<Range<usize>>);

impl Batches {
    /// `None` for weighted stores, whose rows are not Monte Carlo draws.
    pub(crate) fn of(store: &SampleStore) -> Option<Self> {
        if store.log_weights().is_some() {
            return None;
        }
        let dpc = store.draws_per_chain();
        let per_chain = TARGET_BATCHES.div_ceil(store.n_chains().max(1)).min(dpc).max(1);
        let len = dpc / per_chain;
        let mut out = Vec::new();
        for c in 0..store.n_chains() {
            let base = c * dpc;
            for b in 0..per_chain {
                let end = if b + 1 == per_chain { dpc } else { (b + 1) * len };
                if end > b * len {
                    out.push(base + b * len..base + end);
                }
            }
        }
        Some(Self(out))
    }

    fn means(&self, x: &[f64]) -> Vec<f64> {
        self.0
            .iter()
            .map(|r| x[r.clone()].iter().sum::<f64>() / r.len() as f64)
            .collect()
    }

    /// Standard error of the mean of `x`.
    pub(crate) fn se_mean(&self, x: &[f64]) -> f64 {
        let m = self.means(x);
        let b = m.len();
        if b < 2 {
            return f64::NAN;
        }
        let mu = m.iter().sum::<f64>() / b as f64;
        let var = m.iter().map(|v| (v - mu) * (v - mu)).sum::<f64>() / (b - 1) as f64;
        (var / b as f64).sqrt()
    }

    /// Standard error of `log mean(exp(x))`.
    pub(crate) fn se_log_mean_exp(&self, x: &[f64]) -> f64 {
        let c = x.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        if !c.is_finite() {
            return f64::NAN;
        }
        let e: Vec<f64> = x.iter().map(|v| (v - c).exp()).collect();
        let mean = e.iter().sum::<f64>() / e.len() as f64;
        self.se_mean(&e) / mean
    }

    /// Standard error of `sum a w / sum w` with `log w = log_w`.
    pub(crate) fn se_ratio(&self, a: &[f64], log_w: &[f64]) -> f64 {
        let c = log_w.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        if !c.is_finite() {
            return f64::NAN;
        }
        let w: Vec<f64> = log_w.iter().map(|v| (v - c).exp()).collect();
        let sw: f64 = w.iter().sum();
        let r = a.iter().zip(&w).map(|(x, y)| x * y).sum::<f64>() / sw;
        let resid: Vec<f64> = a.iter().zip(&w).map(|(x, y)| (x - r) * y).collect();
        self.se_mean(&resid) / (sw / w.len() as f64)
    }

    /// Standard error of the WAIC form `log mean(exp(x)) - var(x)`.
    pub(crate) fn se_waic(&self, x: &[f64]) -> f64 {
        let m = x.iter().sum::<f64>() / x.len() as f64;
        let sq: Vec<f64> = x.iter().map(|v| (v - m) * (v - m)).collect();
        self.se_log_mean_exp(x).hypot(self.se_mean(&sq))
    }
}

/// Applies `f` when the store has batches, 0 for weighted stores.
pub(crate) fn se_or_zero(store: &SampleStore, f: impl FnOnce(&Batches) -> f64) -> f64 {
    Batches::of(store).map_or(0.0, |b| f(&b))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::prob::sample::std_normal;
    use crate::prob::RngStream;

    fn store(n_chains: usize, dpc: usize, x: &[f64]) -> SampleStore {
        SampleStore::new(vec!["x".into()], 0, n_chains, dpc, x.to_vec()).unwrap()
    }

    #[test]
    fn batches_cover_every_draw_once() {
        for (chains, dpc) in [(1, 1000), (2, 37), (3, 5), (5, 1)] {
            let s = store(chains, dpc, &vec![0.0; chains * dpc]);
            let b = Batches::of(&s).unwrap();
            let mut seen = vec![0u8; chains * dpc];
            for r in &b.0 {
                for j in r.clone() {
                    seen[j] += 1;
                }
            }
            assert!(seen.iter().all(|&v| v == 1));
        }
    }

    #[test]
    fn iid_standard_error_matches_sigma_over_root_n() {
        let mut rng = RngStream::new(7, 0);
        let n = 40_000;
        let x: Vec<f64> = (0..n).map(|_| std_normal(&mut rng)).collect();
        let s = store(2, n / 2, &x);
        let se = Batches::of(&s).unwrap().se_mean(&x);
        let target = 1.0 / (n as f64).sqrt();
        // 20 batches: relative error of the SE estimate is about 1/sqrt(38)
        assert!((se / target - 1.0).abs() < 0.6, "se {se} target {target}");
    }

    #[test]
    fn weighted_store_has_zero_se() {
        let s = SampleStore::weighted(vec!["x".into()], 0, vec![1.0, 2.0], vec![-0.5, -1.0]).unwrap();
        assert_eq!(se_or_zero(&s, |b| b.se_mean(&[1.0, 2.0])), 0.0);
    }
}
