use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{bail, Context};
use clap::{Args, Parser, Subcommand};
use log::{error, info};

use cveval::io::{output_dir, run, write_outputs, Command, Family, RunConfig};

#[derive(Parser)]
#[command(
    name = "cveval",
    version,
    about = "Leave-one-out predictive evaluation for Bayesian latent variable models"
)]
struct Cli {
    #[command(subcommand)]
    command: Sub,
}

#[derive(Subcommand)]
enum Sub {
    /// Simulate data sets (mixture or seeds family).
    Simulate(RunArgs),
    /// Fit every configured model and report convergence summaries.
    Fit(RunArgs),
    /// Approximate leave-one-out criteria from one full-data fit.
    Criteria(RunArgs),
    /// Approximate criteria plus actual leave-one-out by refitting.
    Loocv(RunArgs),
    /// Approximate and actual leave-one-out mid-p values.
    Pvalues(RunArgs),
    /// Repeat over replications and emit mean(sd) and selection tables.
    Study(RunArgs),
}

#[derive(Args)]
struct RunArgs {
    /// TOML run configuration.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Model family when no config file is given.
    #[arg(long, value_parser = ["mixture", "car", "seeds"])]
    family: Option<String>,
    #[arg(long)]
    seed: Option<u64>,
    /// Output directory (default: `out` from the config, else `results`).
    #[arg(long)]
    out: Option<PathBuf>,
    /// Use the long chain schedule.
    #[arg(long)]
    full_scale: bool,
    #[arg(long)]
    replications: Option<usize>,
}

impl Sub {
    fn split(self) -> (Command, RunArgs) {
        match self {
            Sub::Simulate(a) => (Command::Simulate, a),
            Sub::Fit(a) => (Command::Fit, a),
            Sub::Criteria(a) => (Command::Criteria, a),
            Sub::Loocv(a) => (Command::Loocv, a),
            Sub::Pvalues(a) => (Command::Pvalues, a),
            Sub::Study(a) => (Command::Study, a),
        }
    }
}

fn config(args: &RunArgs) -> anyhow::Result<RunConfig> {
    let mut cfg = match (&args.config, &args.family) {
        (Some(path), None) => RunConfig::load(path)?,
        (None, Some(f)) => RunConfig::new(match f.as_str() {
            "mixture" => Family::Mixture,
            "car" => Family::Car,
            _ => Family::Seeds,
        }),
        (Some(_), Some(_)) => bail!("--config and --family are mutually exclusive"),
        (None, None) => bail!("either --config or --family is required"),
    };
    if let Some(s) = args.seed {
        cfg.seed = s;
    }
    if let Some(m) = args.replications {
        cfg.replications = m;
    }
    if args.full_scale {
        cfg.full_scale = true;
    }
    if let Some(o) = &args.out {
        cfg.out = Some(o.clone());
    }
    cfg.validate()?;
    Ok(cfg)
}

fn execute(cli: Cli) -> anyhow::Result<()> {
    let (command, args) = cli.command.split();
    let cfg = config(&args)?;
    let dir = output_dir(&cfg, &PathBuf::from("results"));
    let outputs = run(command, &cfg).with_context(|| format!("{command} failed"))?;
    let manifest = write_outputs(&dir, command, &cfg, &outputs)
        .with_context(|| format!("writing outputs to {}", dir.display()))?;
    info!("wrote {} files to {}", manifest.files.len() + 1, dir.display());
    if !manifest.failures.is_empty() {
        eprintln!(
            "{} unit or replication failures; see manifest.json",
            manifest.failures.len()
        );
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    match execute(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            error!("{e:#}");
            ExitCode::FAILURE
        }
    }
}
