use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::estimators::{
    dic, harmonic_eval, iis_from_columns, integrated_columns, mean_eval, nonint_column, ratio_eval, waic_eval,
    DicReport,
};
use super::{pvalue_stream, split_sign, unit_stream, EvalFunction, Method, PerUnitEvaluation};
use crate::error::{Error, Result};
use crate::mcmc::SampleStore;
use crate::models::LatentModel;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CriteriaOptions {
    /// Regenerated latents per draw for the integrated density.
    pub r_draws: usize,
    pub seed: u64,
}

impl Default for CriteriaOptions {
    fn default() -> Self {
        Self { r_draws: 100, seed: 1 }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct UnitCriteria {
    pub unit: usize,
    pub nis: PerUnitEvaluation,
    pub iis: PerUnitEvaluation,
    pub nwaic: PerUnitEvaluation,
    pub iwaic: PerUnitEvaluation,
}

impl UnitCriteria {
    pub fn get(&self, method: Method) -> Option<&PerUnitEvaluation> {
        match method {
            Method::Nis => Some(&self.nis),
            Method::Iis => Some(&self.iis),
            Method::Nwaic => Some(&self.nwaic),
            Method::Iwaic => Some(&self.iwaic),
            _ => None,
        }
    }
}

/// Every approximate criterion from one full-data fit.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CriteriaRun {
    pub units: Vec<UnitCriteria>,
    pub dic: DicReport,
}

impl CriteriaRun {
    /// Per-unit log predictive densities for one of the four approximations.
    pub fn per_unit(&self, method: Method) -> Result<Vec<f64>> {
        self.units
            .iter()
            .map(|u| {
                u.get(method)
                    .map(|e| e.value)
                    .ok_or_else(|| Error::arg(format!("{method} is not a per-unit approximation")))
            })
            .collect()
    }

    pub fn ic(&self, method: Method) -> Result<f64> {
        if method == Method::Dic {
            return Ok(self.dic.dic);
        }
        Ok(super::ic(&self.per_unit(method)?))
    }
}

/// nIS, iIS, nWAIC and iWAIC for every unit plus DIC. The integrated
/// criteria share one set of integrated densities per unit, computed from
/// [`unit_stream`]`(seed, i)`.
pub fn approximate_criteria<M: LatentModel>(
    model: &M,
    store: &SampleStore,
    opts: CriteriaOptions,
) -> Result<CriteriaRun> {
    if opts.r_draws == 0 {
        return Err(Error::arg("r_draws must be at least 1"));
    }
    if store.holdout().is_some() {
        return Err(Error::arg("approximations need the full-data fit"));
    }
    let units = (0..store.n_units())
        .into_par_iter()
        .map(|i| {
            let mut rng = unit_stream(opts.seed, i);
            let ld = nonint_column(model, store, i);
            let int_ld = store
                .draws()
                .map(|d| model.int_logpred(i, d, opts.r_draws, &mut rng))
                .collect::<Result<Vec<f64>>>()?;
            Ok(UnitCriteria {
                unit: i,
                nis: harmonic_eval(store, i, Method::Nis, &ld)?,
                iis: harmonic_eval(store, i, Method::Iis, &int_ld)?,
                nwaic: waic_eval(store, i, Method::Nwaic, &ld)?,
                iwaic: waic_eval(store, i, Method::Iwaic, &int_ld)?,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(CriteriaRun {
        units,
        dic: dic(model, store)?,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PValueOptions {
    pub r_draws: usize,
    pub k_draws: usize,
    pub seed: u64,
}

impl Default for PValueOptions {
    fn default() -> Self {
        Self {
            r_draws: 100,
            k_draws: 100,
            seed: 1,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct UnitPValues {
    pub unit: usize,
    pub posterior_check: PerUnitEvaluation,
    pub ghosting: PerUnitEvaluation,
    pub nis: PerUnitEvaluation,
    pub iis: PerUnitEvaluation,
}

impl UnitPValues {
    pub fn get(&self, method: Method) -> Option<&PerUnitEvaluation> {
        match method {
            Method::PosteriorCheck => Some(&self.posterior_check),
            Method::Ghosting => Some(&self.ghosting),
            Method::Nis => Some(&self.nis),
            Method::Iis => Some(&self.iis),
            _ => None,
        }
    }
}

/// Mid-p cross-validated p-value approximations for every unit. Ghosting and
/// iIS share the regenerated latents drawn from [`pvalue_stream`]`(seed, i)`.
pub fn approximate_pvalues<M: LatentModel>(
    model: &M,
    store: &SampleStore,
    opts: PValueOptions,
) -> Result<Vec<UnitPValues>> {
    if opts.r_draws == 0 || opts.k_draws == 0 {
        return Err(Error::arg("r_draws and k_draws must be at least 1"));
    }
    if store.holdout().is_some() {
        return Err(Error::arg("approximations need the full-data fit"));
    }
    (0..store.n_units())
        .into_par_iter()
        .map(|i| {
            let mut rng = pvalue_stream(opts.seed, i);
            let a = EvalFunction::MidP;
            let stored = store
                .draws()
                .map(|d| a.value(model, i, d.theta, d.latent[i]))
                .collect::<Result<Vec<f64>>>()?;
            let ld = nonint_column(model, store, i);
            let neg_ld: Vec<f64> = ld.iter().map(|v| -v).collect();
            let log_abs: Vec<(f64, bool)> = stored.iter().map(|&v| split_sign(v)).collect();
            let cols = integrated_columns(model, store, i, a, opts.r_draws, opts.k_draws, &mut rng)?;
            Ok(UnitPValues {
                unit: i,
                posterior_check: mean_eval(store, i, Method::PosteriorCheck, &stored)?,
                ghosting: mean_eval(store, i, Method::Ghosting, &cols.value)?,
                nis: ratio_eval(store, i, Method::Nis, &log_abs, &neg_ld)?,
                iis: iis_from_columns(store, i, &cols)?,
            })
        })
        .collect()
}
