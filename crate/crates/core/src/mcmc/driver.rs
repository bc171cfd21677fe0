use log::{debug, warn};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::SampleStore;
use crate::error::{Error, Result};
use crate::models::{LatentModel, SweepMode};
use crate::prob::{stream_id, RngStream};

const TAG_CHAIN: u64 = 0x63_68_61_69_6e;
const TAG_HOLDOUT: u64 = 0x686f_6c64;

/// Fewest retained draws per run that the evaluators accept.
pub const MIN_RETAINED: usize = 100;

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ChainConfig {
    pub n_chains: usize,
    pub n_adapt: usize,
    pub n_burn: usize,
    pub n_sample: usize,
    pub thin: usize,
    pub seed: u64,
}

impl ChainConfig {
    /// One chain, 1000 adaptation, 2000 burn-in and 20000 sampling sweeps, thinned by 2.
    pub fn desk() -> Self {
        Self {
            n_chains: 1,
            n_adapt: 1000,
            n_burn: 2000,
            n_sample: 20_000,
            thin: 2,
            seed: 1,
        }
    }

    /// Five chains of 2000 adaptation, 2000 burn-in and 100000 sampling sweeps, thinned by 5.
    pub fn full_scale() -> Self {
        Self {
            n_chains: 5,
            n_adapt: 2000,
            n_burn: 2000,
            n_sample: 100_000,
            thin: 5,
            seed: 1,
        }
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn with_chains(mut self, n_chains: usize) -> Self {
        self.n_chains = n_chains;
        self
    }

    pub fn retained_per_chain(&self) -> usize {
        self.n_sample / self.thin.max(1)
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_chains == 0 {
            return Err(Error::Config("n_chains must be at least 1".into()));
        }
        if self.thin == 0 {
            return Err(Error::Config("thin must be at least 1".into()));
        }
        if self.retained_per_chain() * self.n_chains < MIN_RETAINED {
            return Err(Error::Config(format!(
                "{} retained draws; at least {MIN_RETAINED} are required",
                self.retained_per_chain() * self.n_chains
            )));
        }
        Ok(())
    }
}

/// Per-chain facts worth reporting next to the draws.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ChainReport {
    pub chain: usize,
    pub acceptance: Vec<(String, f64)>,
}

fn chain_stream(seed: u64, holdout: Option<usize>, chain: usize) -> RngStream {
    let id = match holdout {
        None => stream_id(&[TAG_CHAIN, chain as u64]),
        Some(i) => stream_id(&[TAG_HOLDOUT, i as u64, chain as u64]),
    };
    RngStream::new(seed, id)
}

fn run_one_chain<M: LatentModel>(
    model: &M,
    config: &ChainConfig,
    holdout: Option<usize>,
    chain: usize,
) -> Result<(Vec<f64>, ChainReport)> {
    let mut rng = chain_stream(config.seed, holdout, chain);
    let n_theta = model.n_theta();
    let n = model.n_units();
    let width = n_theta + n;
    let kept = config.retained_per_chain();
    let mut out = vec![0.0; kept * width];
    let mut state = model.init_state(holdout, &mut rng)?;

    let total = config.n_adapt + config.n_burn + config.n_sample;
    let start = config.n_adapt + config.n_burn;
    let mut k = 0;
    if config.n_adapt == 0 {
        model.end_adaptation(&mut state);
    }
    for it in 0..total {
        let mode = SweepMode {
            holdout,
            adapt: it < config.n_adapt,
        };
        model.sweep(&mut state, mode, &mut rng)?;
        if it + 1 == config.n_adapt {
            model.end_adaptation(&mut state);
        }
        if it >= start && (it - start + 1).is_multiple_of(config.thin) && k < kept {
            let row = &mut out[k * width..(k + 1) * width];
            let (theta, latent) = row.split_at_mut(n_theta);
            model.write_draw(&state, theta, latent);
            check_draw(model, theta, latent, holdout)
                .map_err(|what| Error::Numerical(format!("chain {chain}, sweep {it}: {what}")))?;
            k += 1;
        }
    }
    let report = ChainReport {
        chain,
        acceptance: model.acceptance_rates(&state),
    };
    Ok((out, report))
}

fn check_draw<M: LatentModel>(
    model: &M,
    theta: &[f64],
    latent: &[f64],
    holdout: Option<usize>,
) -> std::result::Result<(), String> {
    if let Some(j) = theta.iter().position(|v| !v.is_finite()) {
        return Err(format!("parameter {} is {}", model.theta_names()[j], theta[j]));
    }
    if let Some(i) = latent.iter().position(|v| !v.is_finite()) {
        return Err(format!("latent of unit {} is {}", i + 1, latent[i]));
    }
    for (i, &b) in latent.iter().enumerate() {
        if Some(i) == holdout {
            continue;
        }
        let ld = model.nonint_logpred(i, theta, b);
        if ld.is_nan() || ld == f64::INFINITY {
            return Err(format!("log density of unit {} is {ld}", i + 1));
        }
    }
    Ok(())
}

fn run_impl<M: LatentModel>(
    model: &M,
    config: &ChainConfig,
    holdout: Option<usize>,
) -> Result<(SampleStore, Vec<ChainReport>)> {
    config.validate()?;
    if let Some(i) = holdout {
        if i >= model.n_units() {
            return Err(Error::arg(format!(
                "holdout unit {i} out of range for {} units",
                model.n_units()
            )));
        }
    }
    // chains run in parallel; results are collected in chain order
    let results: Vec<Result<(Vec<f64>, ChainReport)>> = (0..config.n_chains)
        .into_par_iter()
        .map(|c| run_one_chain(model, config, holdout, c))
        .collect();
    let mut data = Vec::new();
    let mut reports = Vec::with_capacity(config.n_chains);
    for r in results {
        let (d, rep) = r?;
        data.extend(d);
        reports.push(rep);
    }
    let mut store = SampleStore::new(
        model.theta_names(),
        model.n_units(),
        config.n_chains,
        config.retained_per_chain(),
        data,
    )?;
    store.set_holdout(holdout);
    debug!("{}: {} draws (holdout {:?})", model.tag(), store.len(), holdout);
    Ok((store, reports))
}

/// Full-data posterior draws.
pub fn run_chains<M: LatentModel>(model: &M, config: &ChainConfig) -> Result<SampleStore> {
    run_impl(model, config, None).map(|r| r.0)
}

/// Full-data draws together with per-chain acceptance rates.
pub fn run_chains_with_report<M: LatentModel>(
    model: &M,
    config: &ChainConfig,
) -> Result<(SampleStore, Vec<ChainReport>)> {
    run_impl(model, config, None)
}

/// Draws from the posterior with unit `i`'s likelihood removed.
pub fn run_holdout<M: LatentModel>(model: &M, i: usize, config: &ChainConfig) -> Result<SampleStore> {
    run_impl(model, config, Some(i)).map(|r| r.0)
}

/// Outcome of refitting with each unit held out in turn.
#[derive(Debug)]
pub struct CvRun<T> {
    /// Per-unit result, `None` where the refit or the consumer failed.
    pub results: Vec<Option<T>>,
    /// `(unit, message)` for every failed unit.
    pub failures: Vec<(usize, String)>,
}

impl<T> CvRun<T> {
    pub fn is_complete(&self) -> bool {
        self.failures.is_empty()
    }

    /// All results, or an error listing the missing units.
    pub fn into_complete(self) -> Result<Vec<T>> {
        if !self.failures.is_empty() {
            return Err(Error::MissingUnits(self.failures.iter().map(|f| f.0).collect()));
        }
        Ok(self.results.into_iter().map(|r| r.expect("complete run")).collect())
    }
}

/// Refit with every unit held out and hand each store to `consume`, which
/// reduces it to whatever is needed; stores are dropped as soon as they are consumed.
pub fn actual_cv_run_with<M, T, F>(model: &M, config: &ChainConfig, consume: F) -> CvRun<T>
where
    M: LatentModel,
    T: Send,
    F: Fn(usize, SampleStore) -> Result<T> + Sync,
{
    let outcomes: Vec<Result<T>> = (0..model.n_units())
        .into_par_iter()
        .map(|i| run_holdout(model, i, config).and_then(|store| consume(i, store)))
        .collect();
    let mut results = Vec::with_capacity(outcomes.len());
    let mut failures = Vec::new();
    for (i, r) in outcomes.into_iter().enumerate() {
        match r {
            Ok(v) => results.push(Some(v)),
            Err(e) => {
                warn!("held-out refit of unit {} failed: {e}", i + 1);
                failures.push((i, e.to_string()));
                results.push(None);
            }
        }
    }
    CvRun { results, failures }
}

/// Every held-out store, kept in memory. Suitable for small models only.
pub fn actual_cv_run<M: LatentModel>(model: &M, config: &ChainConfig) -> CvRun<SampleStore> {
    actual_cv_run_with(model, config, |_, store| Ok(store))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::models::toy::NormalMeanModel;

    fn small() -> ChainConfig {
        ChainConfig {
            n_chains: 2,
            n_adapt: 10,
            n_burn: 10,
            n_sample: 400,
            thin: 1,
            seed: 42,
        }
    }

    #[test]
    fn config_validation() {
        assert!(ChainConfig::desk().validate().is_ok());
        let mut c = small();
        c.thin = 0;
        assert!(c.validate().is_err());
        c.thin = 5;
        c.n_chains = 1;
        assert!(c.validate().is_err());
        assert_eq!(ChainConfig::desk().retained_per_chain(), 10_000);
    }

    #[test]
    fn same_seed_same_store() {
        let m = NormalMeanModel::new(vec![0.5, 1.5, -0.2], 1.0, 0.0, 4.0).unwrap();
        let a = run_chains(&m, &small()).unwrap();
        let b = run_chains(&m, &small()).unwrap();
        assert_eq!(a, b);
        let c = run_chains(&m, &small().with_seed(43)).unwrap();
        assert_ne!(a, c);
    }

    #[test]
    fn thinning_equals_subsampling() {
        let m = NormalMeanModel::new(vec![0.5, 1.5, -0.2], 1.0, 0.0, 4.0).unwrap();
        let full = run_chains(&m, &small()).unwrap();
        let mut cfg = small();
        cfg.thin = 4;
        let thinned = run_chains(&m, &cfg).unwrap();
        assert_eq!(thinned, full.thinned(4).unwrap());
    }

    #[test]
    fn holdout_stores_are_tagged_and_distinct() {
        let m = NormalMeanModel::new(vec![0.5, 1.5, -0.2, 0.9, 2.0], 1.0, 0.0, 4.0).unwrap();
        let run = actual_cv_run(&m, &small());
        let stores = run.into_complete().unwrap();
        assert_eq!(stores.len(), 5);
        for (i, s) in stores.iter().enumerate() {
            assert_eq!(s.holdout(), Some(i));
            for t in &stores[i + 1..] {
                assert_ne!(s.raw(), t.raw());
            }
        }
        let again = actual_cv_run(&m, &small()).into_complete().unwrap();
        assert_eq!(stores, again);
    }

    #[test]
    fn failures_are_reported_per_unit() {
        let m = NormalMeanModel::new(vec![0.5, 1.5, -0.2], 1.0, 0.0, 4.0).unwrap();
        let run = actual_cv_run_with(&m, &small(), |i, _| {
            if i == 1 {
                Err(Error::Numerical("boom".into()))
            } else {
                Ok(i)
            }
        });
        assert_eq!(run.failures.len(), 1);
        assert_eq!(run.failures[0].0, 1);
        assert!(matches!(run.into_complete(), Err(Error::MissingUnits(v)) if v == vec![1]));
    }
}
