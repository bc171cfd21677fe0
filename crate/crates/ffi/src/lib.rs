//! C interface to `cveval`.
//!
//! Every fallible function returns a [`CvStatus`]. On failure the message is
//! kept per thread and can be copied out with [`cveval_last_error`]. Handles
//! are opaque and must be released with their `_free` function.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::fs::File;
use std::io::BufReader;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;
use std::ptr;
use std::slice;

use cveval::evaluators::kernels::{harmonic_log_mean, waic_log_ppd};
use cveval::evaluators::{ic, Method};
use cveval::io::{run, write_outputs, Command, Family, Quantity, RunConfig, RunOutputs};
use cveval::mcmc::spill::read_spill;
use cveval::mcmc::SampleStore;
use cveval::prob::{binomial_midp_tail, log_mean_exp, poisson_midp_tail};
use cveval::Error;

#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum CvStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    Numerical = 3,
    Config = 4,
    Io = 5,
    MissingUnits = 6,
    Panic = 7,
}

#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum CvFamily {
    Mixture = 0,
    Car = 1,
    Seeds = 2,
}

#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum CvCommand {
    Simulate = 0,
    Fit = 1,
    Criteria = 2,
    Loocv = 3,
    Pvalues = 4,
    Study = 5,
}

#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum CvQuantity {
    LogPpd = 0,
    MidP = 1,
    Dic = 2,
}

#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum CvMethod {
    Actual = 0,
    Nis = 1,
    Iis = 2,
    Nwaic = 3,
    Iwaic = 4,
    Dic = 5,
    PosteriorCheck = 6,
    Ghosting = 7,
}

/// One per-unit result. `unit` is 1-based, 0 for whole-model quantities.
#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CvRecord {
    pub replication: usize,
    pub quantity: CvQuantity,
    pub method: CvMethod,
    pub unit: usize,
    pub value: f64,
    pub mc_se: f64,
}

/// Opaque run configuration.
pub struct CvConfig(RunConfig);

/// Opaque outputs of one run, together with the configuration that produced them.
pub struct CvResults {
    command: Command,
    config: RunConfig,
    outputs: RunOutputs,
}

/// Opaque sample store read from a spill file.
pub struct CvStore(SampleStore);

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: String) {
    let c = CString::new(msg.replace('\0', " ")).expect("nul bytes removed");
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

fn status_of(e: &Error) -> CvStatus {
    match e {
        Error::Argument(_) => CvStatus::InvalidArgument,
        Error::Decomposition { .. } | Error::Numerical(_) => CvStatus::Numerical,
        Error::Config(_) => CvStatus::Config,
        Error::Load { .. } | Error::Io(_) | Error::Csv(_) => CvStatus::Io,
        Error::MissingUnits(_) => CvStatus::MissingUnits,
    }
}

struct Fail(CvStatus, String);

impl From<Error> for Fail {
    fn from(e: Error) -> Self {
        Fail(status_of(&e), e.to_string())
    }
}

fn null(what: &str) -> Fail {
    Fail(CvStatus::NullPointer, format!("{what} is null"))
}

fn guard(f: impl FnOnce() -> Result<(), Fail>) -> CvStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => CvStatus::Ok,
        Ok(Err(Fail(status, msg))) => {
            set_error(msg);
            status
        }
        Err(_) => {
            set_error("panic inside cveval".into());
            CvStatus::Panic
        }
    }
}

unsafe fn values<'a>(ptr: *const f64, len: usize) -> Result<&'a [f64], Fail> {
    if ptr.is_null() {
        return Err(null("values"));
    }
    Ok(slice::from_raw_parts(ptr, len))
}

unsafe fn out_ref<'a, T>(ptr: *mut T) -> Result<&'a mut T, Fail> {
    ptr.as_mut().ok_or_else(|| null("output pointer"))
}

unsafe fn text<'a>(ptr: *const c_char) -> Result<&'a str, Fail> {
    if ptr.is_null() {
        return Err(null("string"));
    }
    CStr::from_ptr(ptr)
        .to_str()
        .map_err(|_| Fail(CvStatus::InvalidArgument, "string is not UTF-8".into()))
}

/// Copy `s` NUL-terminated into `buf` (truncating) and return the full length
/// without the terminator.
unsafe fn copy_out(s: &[u8], buf: *mut c_char, cap: usize) -> usize {
    if !buf.is_null() && cap > 0 {
        let n = s.len().min(cap - 1);
        ptr::copy_nonoverlapping(s.as_ptr().cast::<c_char>(), buf, n);
        *buf.add(n) = 0;
    }
    s.len()
}

/// Copies the calling thread's last error message into `buf` and returns its
/// length; 0 when there is none. Pass a null `buf` to query the length.
///
/// # Safety
/// `buf` must be null or point to `cap` writable bytes.
#[no_mangle]
pub unsafe extern "C" fn cveval_last_error(buf: *mut c_char, cap: usize) -> usize {
    LAST_ERROR.with(|e| match e.borrow().as_ref() {
        Some(msg) => copy_out(msg.as_bytes(), buf, cap),
        None => {
            copy_out(b"", buf, cap);
            0
        }
    })
}

/// `log(mean(exp(values)))`.
///
/// # Safety
/// `values` must point to `len` readable doubles and `out` to a writable double.
#[no_mangle]
pub unsafe extern "C" fn cveval_log_mean_exp(values_ptr: *const f64, len: usize, out: *mut f64) -> CvStatus {
    guard(|| {
        *out_ref(out)? = log_mean_exp(values(values_ptr, len)?)?;
        Ok(())
    })
}

/// Importance-sampling log predictive density from per-draw log densities
/// (harmonic mean of the densities).
///
/// # Safety
/// `log_density` must point to `len` readable doubles and `out` to a writable double.
#[no_mangle]
pub unsafe extern "C" fn cveval_is_log_ppd(log_density: *const f64, len: usize, out: *mut f64) -> CvStatus {
    guard(|| {
        *out_ref(out)? = harmonic_log_mean(values(log_density, len)?, None)?;
        Ok(())
    })
}

/// WAIC log predictive density from per-draw log densities.
///
/// # Safety
/// `log_density` must point to `len` readable doubles and `out` to a writable double.
#[no_mangle]
pub unsafe extern "C" fn cveval_waic_log_ppd(log_density: *const f64, len: usize, out: *mut f64) -> CvStatus {
    guard(|| {
        *out_ref(out)? = waic_log_ppd(values(log_density, len)?, None)?;
        Ok(())
    })
}

/// Information criterion `-2 * sum(log_ppd)`.
///
/// # Safety
/// `log_ppd` must point to `len` readable doubles and `out` to a writable double.
#[no_mangle]
pub unsafe extern "C" fn cveval_ic(log_ppd: *const f64, len: usize, out: *mut f64) -> CvStatus {
    guard(|| {
        *out_ref(out)? = ic(values(log_ppd, len)?);
        Ok(())
    })
}

/// Mid-p upper tail `P(Y > r) + P(Y = r) / 2` for `Y ~ Binomial(n, p)`.
///
/// # Safety
/// `out` must point to a writable double.
#[no_mangle]
pub unsafe extern "C" fn cveval_binomial_midp(r: u64, n: u64, p: f64, out: *mut f64) -> CvStatus {
    guard(|| {
        *out_ref(out)? = binomial_midp_tail(r, n, p)?;
        Ok(())
    })
}

/// Mid-p upper tail for `Y ~ Poisson(rate)`.
///
/// # Safety
/// `out` must point to a writable double.
#[no_mangle]
pub unsafe extern "C" fn cveval_poisson_midp(r: u64, rate: f64, out: *mut f64) -> CvStatus {
    guard(|| {
        *out_ref(out)? = poisson_midp_tail(r, rate)?;
        Ok(())
    })
}

/// Default configuration for `family` with bundled data.
///
/// # Safety
/// `out` must point to a writable handle slot.
#[no_mangle]
pub unsafe extern "C" fn cveval_config_new(family: CvFamily, out: *mut *mut CvConfig) -> CvStatus {
    guard(|| {
        let slot = out_ref(out)?;
        let f = match family {
            CvFamily::Mixture => Family::Mixture,
            CvFamily::Car => Family::Car,
            CvFamily::Seeds => Family::Seeds,
        };
        *slot = Box::into_raw(Box::new(CvConfig(RunConfig::new(f))));
        Ok(())
    })
}

/// Parses a TOML configuration.
///
/// # Safety
/// `toml` must be a NUL-terminated string and `out` a writable handle slot.
#[no_mangle]
pub unsafe extern "C" fn cveval_config_from_toml(toml: *const c_char, out: *mut *mut CvConfig) -> CvStatus {
    guard(|| {
        let slot = out_ref(out)?;
        let cfg = RunConfig::from_toml(text(toml)?)?;
        *slot = Box::into_raw(Box::new(CvConfig(cfg)));
        Ok(())
    })
}

/// Sets the master seed.
///
/// # Safety
/// `config` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn cveval_config_set_seed(config: *mut CvConfig, seed: u64) -> CvStatus {
    guard(|| {
        out_ref(config)?.0.seed = seed;
        Ok(())
    })
}

/// # Safety
/// `config` must be null or a handle from this library, not used afterwards.
#[no_mangle]
pub unsafe extern "C" fn cveval_config_free(config: *mut CvConfig) {
    if !config.is_null() {
        drop(Box::from_raw(config));
    }
}

/// Runs `command` under `config`. This can take minutes for the refitting commands.
///
/// # Safety
/// `config` must be a live handle and `out` a writable handle slot.
#[no_mangle]
pub unsafe extern "C" fn cveval_run(config: *const CvConfig, command: CvCommand, out: *mut *mut CvResults) -> CvStatus {
    guard(|| {
        let cfg = config.as_ref().ok_or_else(|| null("config"))?.0.clone();
        let slot = out_ref(out)?;
        let command = match command {
            CvCommand::Simulate => Command::Simulate,
            CvCommand::Fit => Command::Fit,
            CvCommand::Criteria => Command::Criteria,
            CvCommand::Loocv => Command::Loocv,
            CvCommand::Pvalues => Command::Pvalues,
            CvCommand::Study => Command::Study,
        };
        let outputs = run(command, &cfg)?;
        *slot = Box::into_raw(Box::new(CvResults {
            command,
            config: cfg,
            outputs,
        }));
        Ok(())
    })
}

/// Number of records held by `results`; 0 for a null handle.
///
/// # Safety
/// `results` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn cveval_results_len(results: *const CvResults) -> usize {
    results.as_ref().map_or(0, |r| r.outputs.records.len())
}

fn method_code(m: Method) -> CvMethod {
    match m {
        Method::Actual => CvMethod::Actual,
        Method::Nis => CvMethod::Nis,
        Method::Iis => CvMethod::Iis,
        Method::Nwaic => CvMethod::Nwaic,
        Method::Iwaic => CvMethod::Iwaic,
        Method::Dic => CvMethod::Dic,
        Method::PosteriorCheck => CvMethod::PosteriorCheck,
        Method::Ghosting => CvMethod::Ghosting,
    }
}

unsafe fn results_ref<'a>(results: *const CvResults, index: usize) -> Result<&'a cveval::io::Record, Fail> {
    let r = results.as_ref().ok_or_else(|| null("results"))?;
    r.outputs
        .records
        .get(index)
        .ok_or_else(|| Fail(CvStatus::InvalidArgument, format!("record {index} out of range")))
}

/// Copies record `index` into `out`.
///
/// # Safety
/// `results` must be a live handle and `out` a writable record.
#[no_mangle]
pub unsafe extern "C" fn cveval_results_record(
    results: *const CvResults,
    index: usize,
    out: *mut CvRecord,
) -> CvStatus {
    guard(|| {
        let rec = results_ref(results, index)?;
        *out_ref(out)? = CvRecord {
            replication: rec.replication,
            quantity: match rec.quantity {
                Quantity::LogPpd => CvQuantity::LogPpd,
                Quantity::MidP => CvQuantity::MidP,
                Quantity::Dic => CvQuantity::Dic,
            },
            method: method_code(rec.method),
            unit: rec.unit.unwrap_or(0),
            value: rec.value,
            mc_se: rec.mc_se,
        };
        Ok(())
    })
}

/// Copies the model tag of record `index` into `buf` and stores its full
/// length in `len`.
///
/// # Safety
/// `results` must be a live handle, `buf` null or `cap` writable bytes, `len` writable.
#[no_mangle]
pub unsafe extern "C" fn cveval_results_model(
    results: *const CvResults,
    index: usize,
    buf: *mut c_char,
    cap: usize,
    len: *mut usize,
) -> CvStatus {
    guard(|| {
        let rec = results_ref(results, index)?;
        *out_ref(len)? = copy_out(rec.model.as_bytes(), buf, cap);
        Ok(())
    })
}

/// Writes the CSV tables and manifest into directory `dir`.
///
/// # Safety
/// `results` must be a live handle and `dir` a NUL-terminated path.
#[no_mangle]
pub unsafe extern "C" fn cveval_results_write(results: *const CvResults, dir: *const c_char) -> CvStatus {
    guard(|| {
        let r = results.as_ref().ok_or_else(|| null("results"))?;
        write_outputs(Path::new(text(dir)?), r.command, &r.config, &r.outputs)?;
        Ok(())
    })
}

/// # Safety
/// `results` must be null or a handle from this library, not used afterwards.
#[no_mangle]
pub unsafe extern "C" fn cveval_results_free(results: *mut CvResults) {
    if !results.is_null() {
        drop(Box::from_raw(results));
    }
}

/// Reads a binary sample spill.
///
/// # Safety
/// `path` must be a NUL-terminated path and `out` a writable handle slot.
#[no_mangle]
pub unsafe extern "C" fn cveval_store_open(path: *const c_char, out: *mut *mut CvStore) -> CvStatus {
    guard(|| {
        let slot = out_ref(out)?;
        let file = File::open(text(path)?).map_err(Error::from)?;
        let store = read_spill(BufReader::new(file))?;
        *slot = Box::into_raw(Box::new(CvStore(store)));
        Ok(())
    })
}

/// Retained draws, hyperparameters and units of a store.
///
/// # Safety
/// `store` must be a live handle; each output must be writable.
#[no_mangle]
pub unsafe extern "C" fn cveval_store_shape(
    store: *const CvStore,
    draws: *mut usize,
    n_theta: *mut usize,
    n_units: *mut usize,
) -> CvStatus {
    guard(|| {
        let s = &store.as_ref().ok_or_else(|| null("store"))?.0;
        *out_ref(draws)? = s.len();
        *out_ref(n_theta)? = s.n_theta();
        *out_ref(n_units)? = s.n_units();
        Ok(())
    })
}

/// Copies hyperparameter column `j` (one value per draw) into `buf`, which
/// must hold at least as many doubles as the store has draws.
///
/// # Safety
/// `store` must be a live handle and `buf` point to `cap` writable doubles.
#[no_mangle]
pub unsafe extern "C" fn cveval_store_theta_column(
    store: *const CvStore,
    j: usize,
    buf: *mut f64,
    cap: usize,
) -> CvStatus {
    guard(|| {
        let s = &store.as_ref().ok_or_else(|| null("store"))?.0;
        if j >= s.n_theta() {
            return Err(Fail(CvStatus::InvalidArgument, format!("column {j} out of range")));
        }
        if buf.is_null() {
            return Err(null("buffer"));
        }
        if cap < s.len() {
            return Err(Fail(
                CvStatus::InvalidArgument,
                format!("buffer holds {cap} of {} draws", s.len()),
            ));
        }
        let col = s.theta_column(j);
        ptr::copy_nonoverlapping(col.as_ptr(), buf, col.len());
        Ok(())
    })
}

/// # Safety
/// `store` must be null or a handle from this library, not used afterwards.
#[no_mangle]
pub unsafe extern "C" fn cveval_store_free(store: *mut CvStore) {
    if !store.is_null() {
        drop(Box::from_raw(store));
    }
}
