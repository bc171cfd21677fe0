use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::data::AdjacencyPolicy;
use crate::error::{Error, Result};
use crate::evaluators::Method;
use crate::mcmc::ChainConfig;
use crate::models::CarVariant;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Family {
    Mixture,
    Car,
    Seeds,
}

impl Family {
    /// Regenerated latents per draw for the integrated density.
    pub fn default_r(self) -> usize {
        match self {
            Family::Mixture => 1,
            Family::Car => 200,
            Family::Seeds => 30,
        }
    }

    pub fn default_chains(self) -> usize {
        match self {
            Family::Car => 2,
            _ => 1,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum MixturePriorChoice {
    /// Fixed hyperparameters for the galaxy velocities.
    Galaxy,
    /// Centre and scale from each data set.
    Data,
}

/// Chain settings; unset fields fall back to the family's desk-scale schedule.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ChainOverrides {
    pub n_chains: Option<usize>,
    pub n_adapt: Option<usize>,
    pub n_burn: Option<usize>,
    pub n_sample: Option<usize>,
    pub thin: Option<usize>,
}

/// Parameters used to simulate seeds-model data.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SeedsTruth {
    pub alpha0: f64,
    pub alpha1: f64,
    pub alpha2: f64,
    pub alpha12: f64,
    pub sigma2: f64,
}

impl Default for SeedsTruth {
    fn default() -> Self {
        Self {
            alpha0: -0.55,
            alpha1: 0.08,
            alpha2: 1.36,
            alpha12: -0.83,
            sigma2: 0.09,
        }
    }
}

impl SeedsTruth {
    pub fn theta(&self) -> [f64; 5] {
        [self.alpha0, self.alpha1, self.alpha2, self.alpha12, self.sigma2]
    }
}

fn default_components() -> Vec<usize> {
    (2..=7).collect()
}

fn default_variants() -> Vec<CarVariant> {
    CarVariant::ALL.to_vec()
}

fn one() -> usize {
    1
}

fn one_u64() -> u64 {
    1
}

fn default_figure_unit() -> usize {
    3
}

/// One TOML file per run. Paths are relative to the working directory;
/// omitted data paths use the bundled datasets.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub family: Family,
    #[serde(default)]
    pub data: Option<PathBuf>,
    #[serde(default)]
    pub adjacency: Option<PathBuf>,
    #[serde(default)]
    pub adjacency_policy: AdjacencyPolicy,
    /// Mixture component counts to fit.
    #[serde(default = "default_components")]
    pub components: Vec<usize>,
    #[serde(default)]
    pub mixture_prior: Option<MixturePriorChoice>,
    #[serde(default = "default_variants")]
    pub variants: Vec<CarVariant>,
    /// Simulate this many units per replication instead of reading data
    /// (mixture); any value switches the seeds family to simulated plates.
    #[serde(default)]
    pub synthetic: Option<usize>,
    #[serde(default)]
    pub seeds_truth: SeedsTruth,
    /// Empty means the command's default set.
    #[serde(default)]
    pub methods: Vec<Method>,
    #[serde(default)]
    pub r_draws: Option<usize>,
    #[serde(default)]
    pub k_draws: Option<usize>,
    #[serde(default = "one")]
    pub replications: usize,
    #[serde(default)]
    pub chain: ChainOverrides,
    #[serde(default)]
    pub full_scale: bool,
    #[serde(default)]
    pub out: Option<PathBuf>,
    #[serde(default = "one_u64")]
    pub seed: u64,
    /// Write the full-data draws of every fit as a binary spill.
    #[serde(default)]
    pub spill: bool,
    /// 1-based unit used for the density-versus-component-mean scatter data.
    #[serde(default = "default_figure_unit")]
    pub figure_unit: usize,
    /// Replications for the paired t-tests between neighbouring mixture sizes.
    #[serde(default)]
    pub ttest_draws: Option<usize>,
}

impl RunConfig {
    pub fn new(family: Family) -> Self {
        toml::from_str(&format!("family = \"{}\"", family_name(family))).expect("minimal config parses")
    }

    pub fn from_toml(text: &str) -> Result<Self> {
        let cfg: RunConfig = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::load(path, e.to_string()))?;
        Self::from_toml(&text).map_err(|e| Error::load(path, e.to_string()))
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    pub fn validate(&self) -> Result<()> {
        if self.family == Family::Mixture && (self.components.is_empty() || self.components.contains(&0)) {
            return Err(Error::Config("components must list at least one positive count".into()));
        }
        if self.family == Family::Car && self.variants.is_empty() {
            return Err(Error::Config("variants must not be empty".into()));
        }
        if self.replications == 0 {
            return Err(Error::Config("replications must be at least 1".into()));
        }
        if self.r_draws == Some(0) || self.k_draws == Some(0) {
            return Err(Error::Config("r_draws and k_draws must be at least 1".into()));
        }
        if self.figure_unit == 0 {
            return Err(Error::Config("figure_unit is 1-based".into()));
        }
        if self.synthetic == Some(0) {
            return Err(Error::Config("synthetic needs at least one unit".into()));
        }
        if self.family == Family::Car && self.synthetic.is_some() {
            return Err(Error::Config(
                "synthetic data is not available for the car family".into(),
            ));
        }
        self.chain_config(0).validate()
    }

    pub fn r_draws(&self) -> usize {
        self.r_draws.unwrap_or(self.family.default_r())
    }

    pub fn k_draws(&self) -> usize {
        self.k_draws.unwrap_or(30)
    }

    pub fn mixture_prior(&self) -> MixturePriorChoice {
        self.mixture_prior.unwrap_or(if self.synthetic.is_some() {
            MixturePriorChoice::Data
        } else {
            MixturePriorChoice::Galaxy
        })
    }

    /// The schedule for a fit seeded with `seed`.
    pub fn chain_config(&self, seed: u64) -> ChainConfig {
        let base = if self.full_scale {
            ChainConfig::full_scale()
        } else {
            ChainConfig::desk().with_chains(self.family.default_chains())
        };
        let o = &self.chain;
        ChainConfig {
            n_chains: o.n_chains.unwrap_or(base.n_chains),
            n_adapt: o.n_adapt.unwrap_or(base.n_adapt),
            n_burn: o.n_burn.unwrap_or(base.n_burn),
            n_sample: o.n_sample.unwrap_or(base.n_sample),
            thin: o.thin.unwrap_or(base.thin),
            seed,
        }
    }
}

pub fn family_name(f: Family) -> &'static str {
    match f {
        Family::Mixture => "mixture",
        Family::Car => "car",
        Family::Seeds => "seeds",
    }
}
