//! Data loading, run configuration, orchestration and tabular output.

pub mod config;
pub mod data;
mod output;
mod runner;
pub mod tables;

pub use config::{family_name, ChainOverrides, Family, MixturePriorChoice, RunConfig, SeedsTruth};
pub use data::{AdjacencyPolicy, Districts};
pub use output::{output_dir, write_outputs, Manifest, DEFAULT_TTEST_DRAWS};
pub use runner::{
    fit_seed, replication_seed, run, simulate_plates, AcceptanceRow, Command, DensityPoint, Failure, RunOutputs,
    SummaryRow,
};
pub use tables::{Quantity, Record};
