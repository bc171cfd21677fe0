//! Predictive evaluation estimators: actual leave-one-out from held-out fits,
//! importance-sampling and WAIC approximations from a single full-data fit,
//! DIC, cross-validated p-values and the comparison statistics used to
//! summarize replications.

mod batch;
mod compare;
mod estimators;
pub mod kernels;
mod mcse;
mod report;

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::models::LatentModel;
use crate::prob::{stream_id, RngStream};

pub use batch::{
    approximate_criteria, approximate_pvalues, CriteriaOptions, CriteriaRun, PValueOptions, UnitCriteria, UnitPValues,
};
pub use compare::{paired_onesided_ttest, relative_error, ttest_replication_average, TTest};
pub use estimators::{
    actual_cv_expectation, actual_cv_log_ppd, dic, ghosting_pvalue, ic, ic_from_units, iis_expectation, iis_ppd,
    integrated_columns, is_expectation, iwaic_ppd, nis_ppd, nonint_column, nwaic_ppd, posterior_check_pvalue, waic_ppd,
    DicReport, IntegratedColumns, DIC_CONVENTION,
};
pub use report::{CriterionReport, ReplicationStats};

/// Estimation method carried by every per-unit result.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Method {
    /// Refit without the unit.
    Actual,
    Nis,
    Iis,
    Nwaic,
    Iwaic,
    Dic,
    PosteriorCheck,
    Ghosting,
}

impl Method {
    pub const CRITERIA: [Method; 5] = [Method::Actual, Method::Nis, Method::Iis, Method::Nwaic, Method::Iwaic];
    pub const PVALUES: [Method; 5] = [
        Method::Actual,
        Method::PosteriorCheck,
        Method::Ghosting,
        Method::Nis,
        Method::Iis,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Method::Actual => "actual",
            Method::Nis => "nis",
            Method::Iis => "iis",
            Method::Nwaic => "nwaic",
            Method::Iwaic => "iwaic",
            Method::Dic => "dic",
            Method::PosteriorCheck => "posterior-check",
            Method::Ghosting => "ghosting",
        }
    }

    /// Column label used in result tables.
    pub fn label(self) -> &'static str {
        match self {
            Method::Actual => "CV",
            Method::Nis => "nIS",
            Method::Iis => "iIS",
            Method::Nwaic => "nWAIC",
            Method::Iwaic => "iWAIC",
            Method::Dic => "DIC",
            Method::PosteriorCheck => "PostCheck",
            Method::Ghosting => "Ghosting",
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        [
            Method::Actual,
            Method::Nis,
            Method::Iis,
            Method::Nwaic,
            Method::Iwaic,
            Method::Dic,
            Method::PosteriorCheck,
            Method::Ghosting,
        ]
        .into_iter()
        .find(|m| m.as_str() == s || m.label().eq_ignore_ascii_case(s))
        .ok_or_else(|| Error::arg(format!("unknown method '{s}'")))
    }
}

/// One unit's estimate. `value` is a log predictive density for the
/// density methods, an expectation on its natural scale otherwise.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PerUnitEvaluation {
    pub unit: usize,
    pub method: Method,
    pub value: f64,
    /// Batch-means Monte Carlo standard error; 0 for weighted (enumerated)
    /// stores, NaN when there are too few draws to form batches.
    pub mc_se: f64,
}

/// The function `a(y_i, theta, b_i)` whose leave-one-out expectation is wanted.
#[derive(Clone, Copy)]
pub enum EvalFunction<'a> {
    /// The predictive density of the observed value.
    PredDensity,
    /// `P(y_i > y_obs) + P(y_i = y_obs) / 2`.
    MidP,
    Custom(&'a (dyn Fn(usize, &[f64], f64) -> f64 + Sync)),
}

impl fmt::Debug for EvalFunction<'_> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            EvalFunction::PredDensity => f.write_str("PredDensity"),
            EvalFunction::MidP => f.write_str("MidP"),
            EvalFunction::Custom(_) => f.write_str("Custom(..)"),
        }
    }
}

impl EvalFunction<'_> {
    pub fn value<M: LatentModel>(&self, model: &M, i: usize, theta: &[f64], b: f64) -> Result<f64> {
        match self {
            EvalFunction::PredDensity => Ok(model.nonint_logpred(i, theta, b).exp()),
            EvalFunction::MidP => model
                .eval_midp(i, theta, b)
                .ok_or_else(|| Error::arg(format!("{} has no mid-p evaluation", model.tag()))),
            EvalFunction::Custom(f) => Ok(f(i, theta, b)),
        }
    }

    /// `(log |a|, a < 0)`. The predictive density is returned on the log
    /// scale directly so importance ratios built from it stay exact.
    pub(crate) fn log_abs<M: LatentModel>(&self, model: &M, i: usize, theta: &[f64], b: f64) -> Result<(f64, bool)> {
        match self {
            EvalFunction::PredDensity => Ok((model.nonint_logpred(i, theta, b), false)),
            _ => Ok(split_sign(self.value(model, i, theta, b)?)),
        }
    }
}

pub(crate) fn split_sign(v: f64) -> (f64, bool) {
    (v.abs().ln(), v < 0.0)
}

const EVAL_TAG: u64 = 0x6576_616c;
const PVALUE_TAG: u64 = 0x7076_616c;

/// Stream used for unit `i` by [`approximate_criteria`]. Passing it to
/// [`iis_ppd`] or [`iwaic_ppd`] reproduces the batch values.
pub fn unit_stream(seed: u64, i: usize) -> RngStream {
    RngStream::new(seed, stream_id(&[EVAL_TAG, i as u64]))
}

/// Stream used for unit `i` by [`approximate_pvalues`].
pub fn pvalue_stream(seed: u64, i: usize) -> RngStream {
    RngStream::new(seed, stream_id(&[PVALUE_TAG, i as u64]))
}
