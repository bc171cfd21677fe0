//! Orchestration behind the command-line subcommands.

use std::fmt;
use std::str::FromStr;

use log::{info, warn};
use serde::{Deserialize, Serialize};

use super::config::{Family, MixturePriorChoice, RunConfig};
use super::data::{
    bundled_galaxy, bundled_lipcancer, bundled_seeds, load_galaxy, load_lipcancer, load_seeds, write_plates,
    write_values, Districts,
};
use super::tables::{Quantity, Record};
use crate::error::{Error, Result};
use crate::evaluators::{
    actual_cv_expectation, actual_cv_log_ppd, approximate_criteria, approximate_pvalues, CriteriaOptions, EvalFunction,
    Method, PValueOptions, PerUnitEvaluation,
};
use crate::mcmc::{actual_cv_run_with, run_chains_with_report, summarize, SampleStore};
use crate::models::{
    simulate_study_mixture, CarModel, CarPrior, LatentModel, MixtureModel, MixturePrior, Plate, SeedsModel, SeedsPrior,
};
use crate::prob::sample::normal;
use crate::prob::{stream_id, RngStream};

const REP_TAG: u64 = 0x72_65_70;
const FIT_TAG: u64 = 0x666974;
const DATA_TAG: u64 = 0x6461_7461;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Command {
    Simulate,
    Fit,
    Criteria,
    Loocv,
    Pvalues,
    Study,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Command::Simulate => "simulate",
            Command::Fit => "fit",
            Command::Criteria => "criteria",
            Command::Loocv => "loocv",
            Command::Pvalues => "pvalues",
            Command::Study => "study",
        }
    }
}

impl fmt::Display for Command {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Command {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        [
            Command::Simulate,
            Command::Fit,
            Command::Criteria,
            Command::Loocv,
            Command::Pvalues,
            Command::Study,
        ]
        .into_iter()
        .find(|c| c.name() == s)
        .ok_or_else(|| Error::arg(format!("unknown command '{s}'")))
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SummaryRow {
    pub replication: usize,
    pub model: String,
    pub parameter: String,
    pub mean: f64,
    pub sd: f64,
    pub split_rhat: f64,
    pub ess: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AcceptanceRow {
    pub replication: usize,
    pub model: String,
    pub chain: usize,
    pub parameter: String,
    pub rate: f64,
}

/// Log non-integrated density of one unit against the mean of the component
/// its label points to, per retained draw.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DensityPoint {
    pub model: String,
    pub posterior: String,
    pub unit: usize,
    pub draw: usize,
    pub component_mean: f64,
    pub log_density: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Failure {
    pub replication: usize,
    pub model: String,
    pub unit: Option<usize>,
    pub message: String,
}

/// Everything a command produces, in deterministic order.
#[derive(Debug, Default)]
pub struct RunOutputs {
    pub records: Vec<Record>,
    pub summaries: Vec<SummaryRow>,
    pub acceptance: Vec<AcceptanceRow>,
    pub density_points: Vec<DensityPoint>,
    /// File name and CSV bytes of simulated data sets.
    pub datasets: Vec<(String, Vec<u8>)>,
    /// File name and store of full-data fits, when spilling is requested.
    pub spills: Vec<(String, SampleStore)>,
    pub failures: Vec<Failure>,
    /// Models in fitting order.
    pub models: Vec<String>,
}

/// What to compute for each fitted model.
#[derive(Clone, Debug, Default)]
struct Plan {
    criteria: Vec<Method>,
    actual_log_ppd: bool,
    pvalues: Vec<Method>,
    actual_midp: bool,
    density_points: bool,
}

const CRITERIA: [Method; 5] = [Method::Nis, Method::Iis, Method::Nwaic, Method::Iwaic, Method::Dic];
const PVALUES: [Method; 4] = [Method::PosteriorCheck, Method::Ghosting, Method::Nis, Method::Iis];

fn pick(requested: &[Method], allowed: &[Method]) -> Vec<Method> {
    if requested.is_empty() {
        return allowed.to_vec();
    }
    allowed.iter().copied().filter(|m| requested.contains(m)).collect()
}

fn plan_for(command: Command, cfg: &RunConfig) -> Plan {
    let wants_actual = cfg.methods.contains(&Method::Actual);
    match command {
        Command::Simulate | Command::Fit => Plan::default(),
        Command::Criteria => Plan {
            criteria: pick(&cfg.methods, &CRITERIA),
            ..Plan::default()
        },
        Command::Loocv => Plan {
            criteria: pick(&cfg.methods, &CRITERIA),
            actual_log_ppd: true,
            density_points: cfg.family == Family::Mixture,
            ..Plan::default()
        },
        Command::Pvalues => Plan {
            pvalues: pick(&cfg.methods, &PVALUES),
            actual_midp: true,
            ..Plan::default()
        },
        Command::Study => {
            if cfg.family == Family::Seeds {
                Plan {
                    pvalues: pick(&cfg.methods, &PVALUES),
                    actual_midp: wants_actual,
                    ..Plan::default()
                }
            } else {
                Plan {
                    criteria: pick(&cfg.methods, &CRITERIA),
                    actual_log_ppd: wants_actual,
                    ..Plan::default()
                }
            }
        }
    }
}

pub fn replication_seed(master: u64, replication: usize) -> u64 {
    stream_id(&[REP_TAG, master, replication as u64])
}

pub fn fit_seed(rep_seed: u64, model_index: usize) -> u64 {
    stream_id(&[FIT_TAG, rep_seed, model_index as u64])
}

enum Built {
    Mixture(MixtureModel),
    Car(CarModel),
    Seeds(SeedsModel),
}

macro_rules! with_model {
    ($built:expr, $m:ident => $body:expr) => {
        match $built {
            Built::Mixture($m) => $body,
            Built::Car($m) => $body,
            Built::Seeds($m) => $body,
        }
    };
}

struct Data {
    models: Vec<Built>,
    /// File name and CSV bytes when the data were simulated.
    simulated: Option<(String, Vec<u8>)>,
}

fn load_districts(cfg: &RunConfig) -> Result<Districts> {
    match (&cfg.data, &cfg.adjacency) {
        (Some(d), Some(a)) => load_lipcancer(d, a, cfg.adjacency_policy),
        (None, None) => Ok(bundled_lipcancer()),
        _ => Err(Error::Config("data and adjacency must be given together".into())),
    }
}

fn base_plates(cfg: &RunConfig) -> Result<Vec<Plate>> {
    match &cfg.data {
        Some(p) => load_seeds(p),
        None => Ok(bundled_seeds()),
    }
}

/// Seeds-model data at the design of `base` with `truth` and fresh random effects.
pub fn simulate_plates(base: &[Plate], cfg: &RunConfig, rng: &mut RngStream) -> Result<Vec<Plate>> {
    let model = SeedsModel::new(base.to_vec(), SeedsPrior::default())?;
    let theta = cfg.seeds_truth.theta();
    let b = (0..base.len())
        .map(|_| normal(rng, 0.0, cfg.seeds_truth.sigma2))
        .collect::<Result<Vec<f64>>>()?;
    model.simulate(&theta, &b, rng)
}

fn build(cfg: &RunConfig, replication: usize, rep_seed: u64) -> Result<Data> {
    let mut rng = RngStream::new(rep_seed, DATA_TAG);
    let name = format!("simulated-{}.csv", replication + 1);
    match cfg.family {
        Family::Mixture => {
            let (y, simulated) = match cfg.synthetic {
                Some(n) => {
                    let y = simulate_study_mixture(n, &mut rng);
                    let mut buf = Vec::new();
                    write_values(&mut buf, &y)?;
                    (y, Some((name, buf)))
                }
                None => (
                    match &cfg.data {
                        Some(p) => load_galaxy(p)?,
                        None => bundled_galaxy(),
                    },
                    None,
                ),
            };
            let prior = match cfg.mixture_prior() {
                MixturePriorChoice::Galaxy => MixturePrior::galaxy(),
                MixturePriorChoice::Data => MixturePrior::from_data(&y)?,
            };
            let models = cfg
                .components
                .iter()
                .map(|&k| MixtureModel::new(y.clone(), k, prior).map(Built::Mixture))
                .collect::<Result<Vec<_>>>()?;
            Ok(Data { models, simulated })
        }
        Family::Car => {
            let d = load_districts(cfg)?;
            let models = cfg
                .variants
                .iter()
                .map(|&v| d.model(v, CarPrior::default()).map(Built::Car))
                .collect::<Result<Vec<_>>>()?;
            Ok(Data {
                models,
                simulated: None,
            })
        }
        Family::Seeds => {
            let base = base_plates(cfg)?;
            let (plates, simulated) = if cfg.synthetic.is_some() {
                let p = simulate_plates(&base, cfg, &mut rng)?;
                let mut buf = Vec::new();
                write_plates(&mut buf, &p)?;
                (p, Some((name, buf)))
            } else {
                (base, None)
            };
            Ok(Data {
                models: vec![Built::Seeds(SeedsModel::new(plates, SeedsPrior::default())?)],
                simulated,
            })
        }
    }
}

fn record(replication: usize, model: &str, quantity: Quantity, e: &PerUnitEvaluation) -> Record {
    Record {
        replication,
        model: model.to_string(),
        quantity,
        method: e.method,
        unit: Some(e.unit + 1),
        value: e.value,
        mc_se: e.mc_se,
    }
}

type PointFn<'a> = &'a (dyn Fn(&SampleStore, usize) -> Vec<(f64, f64)> + Sync);

struct Context<'a> {
    cfg: &'a RunConfig,
    plan: &'a Plan,
    replication: usize,
    seed: u64,
}

fn evaluate<M: LatentModel>(
    ctx: &Context<'_>,
    model: &M,
    points: Option<PointFn<'_>>,
    out: &mut RunOutputs,
) -> Result<()> {
    let tag = model.tag();
    let rep = ctx.replication;
    let chain = ctx.cfg.chain_config(ctx.seed);
    info!("replication {}: fitting {tag}", rep + 1);
    let (store, reports) = run_chains_with_report(model, &chain)?;
    for s in summarize(&store) {
        out.summaries.push(SummaryRow {
            replication: rep,
            model: tag.clone(),
            parameter: s.name,
            mean: s.mean,
            sd: s.sd,
            split_rhat: s.split_rhat,
            ess: s.ess,
        });
    }
    for r in reports {
        for (name, rate) in r.acceptance {
            out.acceptance.push(AcceptanceRow {
                replication: rep,
                model: tag.clone(),
                chain: r.chain,
                parameter: name,
                rate,
            });
        }
    }

    let unit = ctx.cfg.figure_unit - 1;
    if let (true, Some(f)) = (ctx.plan.density_points, points) {
        if unit < model.n_units() {
            push_points(out, &tag, "full", unit, f(&store, unit));
        }
    }

    if !ctx.plan.criteria.is_empty() {
        let opts = CriteriaOptions {
            r_draws: ctx.cfg.r_draws(),
            seed: ctx.seed,
        };
        let run = approximate_criteria(model, &store, opts)?;
        for u in &run.units {
            for &m in &ctx.plan.criteria {
                if let Some(e) = u.get(m) {
                    out.records.push(record(rep, &tag, Quantity::LogPpd, e));
                }
            }
        }
        if ctx.plan.criteria.contains(&Method::Dic) {
            out.records.push(Record {
                replication: rep,
                model: tag.clone(),
                quantity: Quantity::Dic,
                method: Method::Dic,
                unit: None,
                value: run.dic.dic,
                mc_se: f64::NAN,
            });
        }
    }

    if !ctx.plan.pvalues.is_empty() {
        let opts = PValueOptions {
            r_draws: ctx.cfg.r_draws(),
            k_draws: ctx.cfg.k_draws(),
            seed: ctx.seed,
        };
        for u in approximate_pvalues(model, &store, opts)? {
            for &m in &ctx.plan.pvalues {
                if let Some(e) = u.get(m) {
                    out.records.push(record(rep, &tag, Quantity::MidP, e));
                }
            }
        }
    }

    if ctx.plan.actual_log_ppd || ctx.plan.actual_midp {
        let want_points = ctx.plan.density_points && points.is_some();
        let cv = actual_cv_run_with(model, &chain, |i, s| {
            let lp = if ctx.plan.actual_log_ppd {
                Some(actual_cv_log_ppd(model, &s)?)
            } else {
                None
            };
            let mp = if ctx.plan.actual_midp {
                Some(actual_cv_expectation(model, &s, EvalFunction::MidP)?)
            } else {
                None
            };
            let pts = match points {
                Some(f) if want_points && i == unit => Some(f(&s, unit)),
                _ => None,
            };
            Ok((lp, mp, pts))
        });
        for (i, msg) in &cv.failures {
            out.failures.push(Failure {
                replication: rep,
                model: tag.clone(),
                unit: Some(i + 1),
                message: msg.clone(),
            });
        }
        for (lp, mp, pts) in cv.results.into_iter().flatten() {
            if let Some(e) = lp {
                out.records.push(record(rep, &tag, Quantity::LogPpd, &e));
            }
            if let Some(e) = mp {
                out.records.push(record(rep, &tag, Quantity::MidP, &e));
            }
            if let Some(p) = pts {
                push_points(out, &tag, "cv", unit, p);
            }
        }
    }

    if ctx.cfg.spill {
        out.spills.push((format!("draws-{tag}-r{}.bin", rep + 1), store));
    }
    Ok(())
}

fn push_points(out: &mut RunOutputs, tag: &str, posterior: &str, unit: usize, pts: Vec<(f64, f64)>) {
    for (draw, (m, l)) in pts.into_iter().enumerate() {
        out.density_points.push(DensityPoint {
            model: tag.to_string(),
            posterior: posterior.to_string(),
            unit: unit + 1,
            draw,
            component_mean: m,
            log_density: l,
        });
    }
}

/// Runs `command` under `cfg`. Replications run one after another; chains
/// and held-out refits inside a replication run on the worker pool.
pub fn run(command: Command, cfg: &RunConfig) -> Result<RunOutputs> {
    cfg.validate()?;
    let plan = plan_for(command, cfg);
    let mut out = RunOutputs::default();
    if command == Command::Simulate {
        if cfg.family == Family::Car {
            return Err(Error::Config(
                "car data cannot be simulated; simulate supports the mixture and seeds families".into(),
            ));
        }
        if cfg.synthetic.is_none() {
            return Err(Error::Config("simulate needs `synthetic` set in the config".into()));
        }
    }
    let replications = match command {
        Command::Study | Command::Simulate => cfg.replications,
        _ => 1,
    };
    for rep in 0..replications {
        let rep_seed = replication_seed(cfg.seed, rep);
        let data = build(cfg, rep, rep_seed)?;
        if let Some(d) = data.simulated {
            out.datasets.push(d);
        }
        if command == Command::Simulate {
            continue;
        }
        for (idx, built) in data.models.iter().enumerate() {
            let ctx = Context {
                cfg,
                plan: &plan,
                replication: rep,
                seed: fit_seed(rep_seed, idx),
            };
            let tag = with_model!(built, m => m.tag());
            if rep == 0 {
                out.models.push(tag.clone());
            }
            let result = match built {
                Built::Mixture(m) => {
                    let f = |s: &SampleStore, i: usize| -> Vec<(f64, f64)> {
                        s.draws()
                            .map(|d| {
                                (
                                    m.component_mean(d.theta, d.latent[i]),
                                    m.nonint_logpred(i, d.theta, d.latent[i]),
                                )
                            })
                            .collect()
                    };
                    evaluate(&ctx, m, Some(&f), &mut out)
                }
                Built::Car(m) => evaluate(&ctx, m, None, &mut out),
                Built::Seeds(m) => evaluate(&ctx, m, None, &mut out),
            };
            if let Err(e) = result {
                if command != Command::Study {
                    return Err(e);
                }
                warn!("replication {} of {tag} failed: {e}", rep + 1);
                out.failures.push(Failure {
                    replication: rep,
                    model: tag,
                    unit: None,
                    message: e.to_string(),
                });
            }
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn quick(family: Family) -> RunConfig {
        let mut c = RunConfig::new(family);
        c.chain.n_adapt = Some(100);
        c.chain.n_burn = Some(100);
        c.chain.n_sample = Some(400);
        c.chain.thin = Some(2);
        c.r_draws = Some(5);
        c.k_draws = Some(5);
        c
    }

    #[test]
    fn criteria_records_every_unit_and_method() {
        let mut c = quick(Family::Mixture);
        c.components = vec![2, 3];
        let out = run(Command::Criteria, &c).unwrap();
        assert_eq!(out.models, vec!["mixture-k2", "mixture-k3"]);
        let per_unit = out.records.iter().filter(|r| r.quantity == Quantity::LogPpd).count();
        assert_eq!(per_unit, 2 * 82 * 4);
        assert_eq!(out.records.iter().filter(|r| r.quantity == Quantity::Dic).count(), 2);
        assert!(out.datasets.is_empty());
    }

    #[test]
    fn study_is_deterministic_and_simulates() {
        let mut c = quick(Family::Seeds);
        c.synthetic = Some(21);
        c.replications = 2;
        c.methods = vec![Method::Iis, Method::Ghosting];
        let a = run(Command::Study, &c).unwrap();
        let b = run(Command::Study, &c).unwrap();
        assert_eq!(a.records, b.records);
        assert_eq!(a.datasets, b.datasets);
        assert_eq!(a.datasets.len(), 2);
        assert_ne!(a.datasets[0].1, a.datasets[1].1);
        assert_eq!(a.records.len(), 2 * 21 * 2);
    }

    #[test]
    fn simulate_needs_a_simulating_family() {
        assert!(run(Command::Simulate, &quick(Family::Car)).is_err());
        assert!(run(Command::Simulate, &quick(Family::Mixture)).is_err());
        let mut c = quick(Family::Mixture);
        c.synthetic = Some(50);
        let out = run(Command::Simulate, &c).unwrap();
        assert_eq!(out.datasets.len(), 1);
        assert!(out.records.is_empty());
    }
}
