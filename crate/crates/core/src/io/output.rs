//! Writing a run's outputs to a directory.

use std::fs::{self, File};
use std::io::BufWriter;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::config::RunConfig;
use super::runner::{Command, Failure, RunOutputs};
use super::tables::{
    criteria_table, pvalue_scatter, relative_error_table, selection_table, ttest_table, write_csv, Quantity,
};
use crate::error::{Error, Result};
use crate::evaluators::DIC_CONVENTION;
use crate::mcmc::spill::write_spill;

/// Replication pairings averaged per t-test when no count is configured.
pub const DEFAULT_TTEST_DRAWS: usize = 1000;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub command: Command,
    pub version: String,
    pub seed: u64,
    pub dic_convention: String,
    pub config: RunConfig,
    pub files: Vec<String>,
    pub failures: Vec<Failure>,
}

fn create(dir: &Path, name: &str) -> Result<BufWriter<File>> {
    Ok(BufWriter::new(File::create(dir.join(name))?))
}

fn csv_file<T: Serialize>(dir: &Path, name: &str, rows: &[T], files: &mut Vec<String>) -> Result<()> {
    if rows.is_empty() {
        return Ok(());
    }
    write_csv(create(dir, name)?, rows)?;
    files.push(name.to_string());
    Ok(())
}

/// Writes records, derived tables, diagnostics and `manifest.json` into `dir`.
/// No timestamps are written, so equal inputs give byte-identical files.
pub fn write_outputs(dir: &Path, command: Command, cfg: &RunConfig, out: &RunOutputs) -> Result<Manifest> {
    fs::create_dir_all(dir)?;
    let mut files = Vec::new();
    csv_file(dir, "records.csv", &out.records, &mut files)?;

    let has = |q: Quantity| out.records.iter().any(|r| r.quantity == q);
    if has(Quantity::LogPpd) || has(Quantity::Dic) {
        csv_file(dir, "table.csv", &criteria_table(&out.records), &mut files)?;
        if cfg.replications > 1 {
            csv_file(dir, "selection.csv", &selection_table(&out.records), &mut files)?;
        }
        if out.models.len() > 1 {
            let draws = cfg.ttest_draws.unwrap_or(DEFAULT_TTEST_DRAWS);
            let t = ttest_table(&out.records, &out.models, draws, cfg.seed)?;
            csv_file(dir, "ttests.csv", &t, &mut files)?;
        }
    }
    if has(Quantity::MidP) {
        csv_file(dir, "table.csv", &relative_error_table(&out.records)?, &mut files)?;
        csv_file(dir, "pvalue-scatter.csv", &pvalue_scatter(&out.records, 0), &mut files)?;
    }
    csv_file(dir, "density-scatter.csv", &out.density_points, &mut files)?;
    csv_file(dir, "summary.csv", &out.summaries, &mut files)?;
    csv_file(dir, "acceptance.csv", &out.acceptance, &mut files)?;

    for (name, bytes) in &out.datasets {
        fs::write(dir.join(name), bytes)?;
        files.push(name.clone());
    }
    for (name, store) in &out.spills {
        write_spill(store, create(dir, name)?)?;
        files.push(name.clone());
    }

    // The output location is not part of the result; keeping it would make
    // otherwise identical runs into different directories differ.
    let mut config = cfg.clone();
    config.out = None;
    let manifest = Manifest {
        command,
        version: env!("CARGO_PKG_VERSION").to_string(),
        seed: cfg.seed,
        dic_convention: DIC_CONVENTION.to_string(),
        config,
        files,
        failures: out.failures.clone(),
    };
    let text = serde_json::to_string_pretty(&manifest).map_err(|e| Error::arg(e.to_string()))?;
    fs::write(dir.join("manifest.json"), text + "\n")?;
    Ok(manifest)
}

/// `cfg.out`, else `fallback`.
pub fn output_dir(cfg: &RunConfig, fallback: &Path) -> PathBuf {
    cfg.out.clone().unwrap_or_else(|| fallback.to_path_buf())
}
