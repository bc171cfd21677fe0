use crate::error::{Error, Result};
use crate::models::Draw;

/// Retained draws of `(theta, b_1..b_n)`, row-major by chain then iteration.
///
/// A store may carry normalized log weights, in which case every estimator
/// treats the rows as a weighted discrete distribution instead of an
/// equally weighted sample.
#[derive(Clone, Debug, PartialEq)]
pub struct SampleStore {
    theta_names: Vec<String>,
    n_units: usize,
    n_chains: usize,
    draws_per_chain: usize,
    data: Vec<f64>,
    log_weights: Option<Vec<f64>>,
    holdout: Option<usize>,
}

impl SampleStore {
    pub fn new(
        theta_names: Vec<String>,
        n_units: usize,
        n_chains: usize,
        draws_per_chain: usize,
        data: Vec<f64>,
    ) -> Result<Self> {
        let width = theta_names.len() + n_units;
        if data.len() != width * n_chains * draws_per_chain {
            return Err(Error::arg(format!(
                "store data has {} values, expected {} chains x {} draws x {} columns",
                data.len(),
                n_chains,
                draws_per_chain,
                width
            )));
        }
        Ok(Self {
            theta_names,
            n_units,
            n_chains,
            draws_per_chain,
            data,
            log_weights: None,
            holdout: None,
        })
    }

    /// A single-chain store whose rows carry log weights (normalized or not).
    pub fn weighted(theta_names: Vec<String>, n_units: usize, data: Vec<f64>, log_weights: Vec<f64>) -> Result<Self> {
        let mut store = Self::new(theta_names, n_units, 1, log_weights.len(), data)?;
        if log_weights.iter().any(|w| w.is_nan() || *w == f64::INFINITY) {
            return Err(Error::arg("log weights must not be NaN or +inf"));
        }
        store.log_weights = Some(log_weights);
        Ok(store)
    }

    pub fn set_holdout(&mut self, holdout: Option<usize>) {
        self.holdout = holdout;
    }

    /// Unit whose likelihood was dropped when these draws were generated.
    pub fn holdout(&self) -> Option<usize> {
        self.holdout
    }

    pub fn theta_names(&self) -> &[String] {
        &self.theta_names
    }

    pub fn n_theta(&self) -> usize {
        self.theta_names.len()
    }

    pub fn n_units(&self) -> usize {
        self.n_units
    }

    pub fn n_chains(&self) -> usize {
        self.n_chains
    }

    pub fn draws_per_chain(&self) -> usize {
        self.draws_per_chain
    }

    /// Total number of draws `S`.
    pub fn len(&self) -> usize {
        self.n_chains * self.draws_per_chain
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn width(&self) -> usize {
        self.theta_names.len() + self.n_units
    }

    pub fn log_weights(&self) -> Option<&[f64]> {
        self.log_weights.as_deref()
    }

    pub fn raw(&self) -> &[f64] {
        &self.data
    }

    pub fn row(&self, s: usize) -> &[f64] {
        let w = self.width();
        &self.data[s * w..(s + 1) * w]
    }

    pub fn draw(&self, s: usize) -> Draw<'_> {
        let row = self.row(s);
        let (theta, latent) = row.split_at(self.theta_names.len());
        Draw { theta, latent }
    }

    pub fn chain_draw(&self, chain: usize, iter: usize) -> Draw<'_> {
        self.draw(chain * self.draws_per_chain + iter)
    }

    pub fn draws(&self) -> impl Iterator<Item = Draw<'_>> + '_ {
        (0..self.len()).map(move |s| self.draw(s))
    }

    /// Column `j` of `theta` over all draws.
    pub fn theta_column(&self, j: usize) -> Vec<f64> {
        self.draws().map(|d| d.theta[j]).collect()
    }

    pub fn theta_index(&self, name: &str) -> Option<usize> {
        self.theta_names.iter().position(|n| n == name)
    }

    /// `b_i` over all draws.
    pub fn latent_column(&self, i: usize) -> Vec<f64> {
        self.draws().map(|d| d.latent[i]).collect()
    }

    /// Keep every `step`-th draw of each chain, starting from draw `step - 1`.
    pub fn thinned(&self, step: usize) -> Result<SampleStore> {
        if step == 0 {
            return Err(Error::arg("thinning step must be positive"));
        }
        if self.log_weights.is_some() {
            return Err(Error::arg("weighted stores cannot be thinned"));
        }
        let kept = self.draws_per_chain / step;
        let mut data = Vec::with_capacity(kept * self.n_chains * self.width());
        for c in 0..self.n_chains {
            for k in 0..kept {
                let s = c * self.draws_per_chain + (k + 1) * step - 1;
                data.extend_from_slice(self.row(s));
            }
        }
        let mut out = SampleStore::new(self.theta_names.clone(), self.n_units, self.n_chains, kept, data)?;
        out.holdout = self.holdout;
        Ok(out)
    }
}
