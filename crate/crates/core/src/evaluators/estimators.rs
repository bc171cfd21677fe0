use serde::{Deserialize, Serialize};

use super::kernels::{harmonic_log_mean, log_mean, mean_and_variance, plain_mean, waic_log_ppd, weighted_ratio};
use super::mcse::se_or_zero;
use super::{split_sign, EvalFunction, Method, PerUnitEvaluation};
use crate::error::{Error, Result};
use crate::mcmc::SampleStore;
use crate::models::LatentModel;
use crate::prob::{log_mean_exp, log_sum_exp, RngStream};

pub const DIC_CONVENTION: &str = "D = -2 sum_i log p(y_i | theta, b_i); pD = var(D) / 2 (sample variance)";

fn check_unit(store: &SampleStore, i: usize) -> Result<()> {
    if i >= store.n_units() {
        return Err(Error::arg(format!(
            "unit {i} out of range for {} units",
            store.n_units()
        )));
    }
    if store.is_empty() {
        return Err(Error::arg("empty sample store"));
    }
    Ok(())
}

fn check_full(store: &SampleStore, i: usize) -> Result<()> {
    check_unit(store, i)?;
    if let Some(h) = store.holdout() {
        return Err(Error::arg(format!(
            "store is a held-out fit for unit {h}; approximations need the full-data fit"
        )));
    }
    Ok(())
}

/// `log P(y_i | theta_s, b_i^s)` for every stored draw.
pub fn nonint_column<M: LatentModel>(model: &M, store: &SampleStore, i: usize) -> Vec<f64> {
    store
        .draws()
        .map(|d| model.nonint_logpred(i, d.theta, d.latent[i]))
        .collect()
}

fn int_column<M: LatentModel>(
    model: &M,
    store: &SampleStore,
    i: usize,
    r: usize,
    rng: &mut RngStream,
) -> Result<Vec<f64>> {
    if r == 0 {
        return Err(Error::arg("integration needs at least one regenerated latent"));
    }
    store.draws().map(|d| model.int_logpred(i, d, r, rng)).collect()
}

/// Per-draw integrated log density and integrated evaluation value built
/// from one shared set of regenerated latents.
#[derive(Clone, Debug)]
pub struct IntegratedColumns {
    pub log_density: Vec<f64>,
    pub value: Vec<f64>,
}

/// For each draw, regenerates `max(r, k)` latents for unit `i`; the first `r`
/// give the integrated density, the first `k` the mean of `a`. When the model
/// exposes latent atoms both are exact sums and no randomness is used.
pub fn integrated_columns<M: LatentModel>(
    model: &M,
    store: &SampleStore,
    i: usize,
    a: EvalFunction<'_>,
    r: usize,
    k: usize,
    rng: &mut RngStream,
) -> Result<IntegratedColumns> {
    check_unit(store, i)?;
    if r == 0 || k == 0 {
        return Err(Error::arg("integration needs at least one regenerated latent"));
    }
    let m = r.max(k);
    let mut log_density = Vec::with_capacity(store.len());
    let mut value = Vec::with_capacity(store.len());
    let mut ld = Vec::with_capacity(m);
    for d in store.draws() {
        if let Some(atoms) = model.latent_atoms(i, d) {
            ld.clear();
            let mut v = 0.0;
            for &(b, p) in &atoms {
                ld.push(p.ln() + model.nonint_logpred(i, d.theta, b));
                v += p * a.value(model, i, d.theta, b)?;
            }
            log_density.push(log_sum_exp(&ld)?);
            value.push(v);
            continue;
        }
        ld.clear();
        let mut v = 0.0;
        for j in 0..m {
            let b = model.regen_latent(i, d, rng)?;
            if j < r {
                ld.push(model.nonint_logpred(i, d.theta, b));
            }
            if j < k {
                v += a.value(model, i, d.theta, b)?;
            }
        }
        log_density.push(log_mean_exp(&ld)?);
        value.push(v / k as f64);
    }
    Ok(IntegratedColumns { log_density, value })
}

pub(crate) fn harmonic_eval(store: &SampleStore, i: usize, method: Method, ld: &[f64]) -> Result<PerUnitEvaluation> {
    let value = harmonic_log_mean(ld, store.log_weights())?;
    let neg: Vec<f64> = ld.iter().map(|v| -v).collect();
    Ok(PerUnitEvaluation {
        unit: i,
        method,
        value,
        mc_se: se_or_zero(store, |b| b.se_log_mean_exp(&neg)),
    })
}

pub(crate) fn waic_eval(store: &SampleStore, i: usize, method: Method, ld: &[f64]) -> Result<PerUnitEvaluation> {
    Ok(PerUnitEvaluation {
        unit: i,
        method,
        value: waic_log_ppd(ld, store.log_weights())?,
        mc_se: se_or_zero(store, |b| b.se_waic(ld)),
    })
}

pub(crate) fn ratio_eval(
    store: &SampleStore,
    i: usize,
    method: Method,
    log_abs: &[(f64, bool)],
    log_w: &[f64],
) -> Result<PerUnitEvaluation> {
    let la: Vec<f64> = log_abs.iter().map(|p| p.0).collect();
    let neg: Vec<bool> = log_abs.iter().map(|p| p.1).collect();
    let any_neg = neg.iter().any(|&v| v);
    let value = weighted_ratio(&la, any_neg.then_some(neg.as_slice()), log_w, store.log_weights())?;
    let mc_se = se_or_zero(store, |b| {
        let a: Vec<f64> = log_abs
            .iter()
            .map(|&(l, n)| if n { -l.exp() } else { l.exp() })
            .collect();
        b.se_ratio(&a, log_w)
    });
    Ok(PerUnitEvaluation {
        unit: i,
        method,
        value,
        mc_se,
    })
}

pub(crate) fn mean_eval(store: &SampleStore, i: usize, method: Method, a: &[f64]) -> Result<PerUnitEvaluation> {
    Ok(PerUnitEvaluation {
        unit: i,
        method,
        value: plain_mean(a, store.log_weights())?,
        mc_se: se_or_zero(store, |b| b.se_mean(a)),
    })
}

/// Log predictive density of the held-out unit from its refit.
pub fn actual_cv_log_ppd<M: LatentModel>(model: &M, cv_store: &SampleStore) -> Result<PerUnitEvaluation> {
    let i = cv_store
        .holdout()
        .ok_or_else(|| Error::arg("actual CV needs a held-out fit"))?;
    check_unit(cv_store, i)?;
    let ld = nonint_column(model, cv_store, i);
    Ok(PerUnitEvaluation {
        unit: i,
        method: Method::Actual,
        value: log_mean(&ld, cv_store.log_weights())?,
        mc_se: se_or_zero(cv_store, |b| b.se_log_mean_exp(&ld)),
    })
}

/// Mean of `a` over the held-out fit, on the natural scale.
pub fn actual_cv_expectation<M: LatentModel>(
    model: &M,
    cv_store: &SampleStore,
    a: EvalFunction<'_>,
) -> Result<PerUnitEvaluation> {
    let i = cv_store
        .holdout()
        .ok_or_else(|| Error::arg("actual CV needs a held-out fit"))?;
    check_unit(cv_store, i)?;
    let vals = cv_store
        .draws()
        .map(|d| a.value(model, i, d.theta, d.latent[i]))
        .collect::<Result<Vec<f64>>>()?;
    mean_eval(cv_store, i, Method::Actual, &vals)
}

/// Non-integrated importance sampling: harmonic mean of the unit's density.
pub fn nis_ppd<M: LatentModel>(model: &M, store: &SampleStore, i: usize) -> Result<PerUnitEvaluation> {
    check_full(store, i)?;
    harmonic_eval(store, i, Method::Nis, &nonint_column(model, store, i))
}

/// Integrated importance sampling: harmonic mean of the density with `b_i`
/// integrated out (`r` regenerated latents per draw when not exact).
pub fn iis_ppd<M: LatentModel>(
    model: &M,
    store: &SampleStore,
    i: usize,
    r: usize,
    rng: &mut RngStream,
) -> Result<PerUnitEvaluation> {
    check_full(store, i)?;
    harmonic_eval(store, i, Method::Iis, &int_column(model, store, i, r, rng)?)
}

/// WAIC form applied to an arbitrary vector of per-draw log densities.
pub fn waic_ppd(log_densities: &[f64]) -> Result<f64> {
    waic_log_ppd(log_densities, None)
}

pub fn nwaic_ppd<M: LatentModel>(model: &M, store: &SampleStore, i: usize) -> Result<PerUnitEvaluation> {
    check_full(store, i)?;
    waic_eval(store, i, Method::Nwaic, &nonint_column(model, store, i))
}

pub fn iwaic_ppd<M: LatentModel>(
    model: &M,
    store: &SampleStore,
    i: usize,
    r: usize,
    rng: &mut RngStream,
) -> Result<PerUnitEvaluation> {
    check_full(store, i)?;
    waic_eval(store, i, Method::Iwaic, &int_column(model, store, i, r, rng)?)
}

/// Importance-weighted expectation of `a` with weights `1 / P(y_i | theta, b_i)`.
pub fn is_expectation<M: LatentModel>(
    model: &M,
    store: &SampleStore,
    i: usize,
    a: EvalFunction<'_>,
) -> Result<PerUnitEvaluation> {
    check_full(store, i)?;
    let ld = nonint_column(model, store, i);
    let log_abs = store
        .draws()
        .map(|d| a.log_abs(model, i, d.theta, d.latent[i]))
        .collect::<Result<Vec<_>>>()?;
    // mean(a W) is formed from log a - log P so that a = P cancels exactly;
    // dividing by mean(W) then reproduces the harmonic mean bit for bit
    let la: Vec<f64> = log_abs.iter().zip(&ld).map(|(&(l, _), &p)| l - p).collect();
    let neg: Vec<bool> = log_abs.iter().map(|p| p.1).collect();
    let zeros = vec![0.0; ld.len()];
    let num = weighted_ratio(
        &la,
        neg.iter().any(|&v| v).then_some(neg.as_slice()),
        &zeros,
        store.log_weights(),
    )?;
    let neg_ld: Vec<f64> = ld.iter().map(|v| -v).collect();
    let den = log_mean(&neg_ld, store.log_weights())?;
    if den == f64::NEG_INFINITY {
        return Err(Error::Numerical("all importance weights are zero".into()));
    }
    let mc_se = se_or_zero(store, |b| {
        let a: Vec<f64> = log_abs
            .iter()
            .map(|&(l, n)| if n { -l.exp() } else { l.exp() })
            .collect();
        b.se_ratio(&a, &neg_ld)
    });
    Ok(PerUnitEvaluation {
        unit: i,
        method: Method::Nis,
        value: num * (-den).exp(),
        mc_se,
    })
}

/// Integrated importance-weighted expectation: `a` averaged over regenerated
/// latents, weighted by the inverse integrated density. For the predictive
/// density this is `exp` of [`iis_ppd`].
pub fn iis_expectation<M: LatentModel>(
    model: &M,
    store: &SampleStore,
    i: usize,
    a: EvalFunction<'_>,
    r: usize,
    k: usize,
    rng: &mut RngStream,
) -> Result<PerUnitEvaluation> {
    check_full(store, i)?;
    if let EvalFunction::PredDensity = a {
        let mut out = iis_ppd(model, store, i, r, rng)?;
        out.value = out.value.exp();
        out.mc_se *= out.value;
        return Ok(out);
    }
    let cols = integrated_columns(model, store, i, a, r, k, rng)?;
    iis_from_columns(store, i, &cols)
}

pub(crate) fn iis_from_columns(store: &SampleStore, i: usize, cols: &IntegratedColumns) -> Result<PerUnitEvaluation> {
    let log_abs: Vec<(f64, bool)> = cols.value.iter().map(|&v| split_sign(v)).collect();
    let neg: Vec<f64> = cols.log_density.iter().map(|v| -v).collect();
    ratio_eval(store, i, Method::Iis, &log_abs, &neg)
}

/// Mean of `a` at the stored `(theta, b_i)`, no correction for reuse of `y_i`.
pub fn posterior_check_pvalue<M: LatentModel>(
    model: &M,
    store: &SampleStore,
    i: usize,
    a: EvalFunction<'_>,
) -> Result<PerUnitEvaluation> {
    check_full(store, i)?;
    let vals = store
        .draws()
        .map(|d| a.value(model, i, d.theta, d.latent[i]))
        .collect::<Result<Vec<f64>>>()?;
    mean_eval(store, i, Method::PosteriorCheck, &vals)
}

/// Mean of `a` over regenerated latents, every draw weighted equally.
pub fn ghosting_pvalue<M: LatentModel>(
    model: &M,
    store: &SampleStore,
    i: usize,
    a: EvalFunction<'_>,
    k: usize,
    rng: &mut RngStream,
) -> Result<PerUnitEvaluation> {
    check_full(store, i)?;
    let cols = integrated_columns(model, store, i, a, 1, k, rng)?;
    mean_eval(store, i, Method::Ghosting, &cols.value)
}

/// `-2 sum log PPD` over a complete set of units.
pub fn ic(log_ppd: &[f64]) -> f64 {
    -2.0 * log_ppd.iter().sum::<f64>()
}

/// As [`ic`], but reports every missing unit.
pub fn ic_from_units(log_ppd: &[Option<f64>]) -> Result<f64> {
    let missing: Vec<usize> = log_ppd
        .iter()
        .enumerate()
        .filter_map(|(i, v)| v.is_none().then_some(i))
        .collect();
    if !missing.is_empty() {
        return Err(Error::MissingUnits(missing));
    }
    Ok(ic(&log_ppd.iter().map(|v| v.unwrap()).collect::<Vec<_>>()))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DicReport {
    pub dic: f64,
    pub mean_deviance: f64,
    pub pd: f64,
    pub convention: String,
}

/// DIC with `pD` as half the posterior variance of the deviance.
pub fn dic<M: LatentModel>(model: &M, store: &SampleStore) -> Result<DicReport> {
    if store.is_empty() {
        return Err(Error::arg("empty sample store"));
    }
    let holdout = store.holdout();
    let dev: Vec<f64> = store
        .draws()
        .map(|d| {
            -2.0 * (0..store.n_units())
                .filter(|&i| Some(i) != holdout)
                .map(|i| model.nonint_logpred(i, d.theta, d.latent[i]))
                .sum::<f64>()
        })
        .collect();
    let (mean_deviance, var) = if dev.len() < 2 && store.log_weights().is_none() {
        (dev[0], 0.0)
    } else {
        mean_and_variance(&dev, store.log_weights())?
    };
    let pd = var / 2.0;
    Ok(DicReport {
        dic: mean_deviance + pd,
        mean_deviance,
        pd,
        convention: DIC_CONVENTION.into(),
    })
}
