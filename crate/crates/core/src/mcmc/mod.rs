//! Chain driver, sample storage and held-out refitting.

pub mod diagnostics;
mod driver;
pub mod spill;
mod store;

pub use diagnostics::{summarize, ParamSummary};
pub use driver::{
    actual_cv_run, actual_cv_run_with, run_chains, run_chains_with_report, run_holdout, ChainConfig, ChainReport,
    CvRun, MIN_RETAINED,
};
pub use store::SampleStore;
