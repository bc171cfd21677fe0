use std::ffi::{c_char, CStr, CString};
use std::ptr;

use cveval_ffi::*;

fn last_error() -> String {
    let mut buf = [0 as c_char; 256];
    unsafe {
        cveval_last_error(buf.as_mut_ptr(), buf.len());
        CStr::from_ptr(buf.as_ptr()).to_string_lossy().into_owned()
    }
}

const QUICK: &str = r#"
family = "seeds"
methods = ["iis", "ghosting"]
r_draws = 4
k_draws = 4
spill = true
[chain]
n_adapt = 100
n_burn = 100
n_sample = 300
thin = 1
"#;

#[test]
fn kernels_match_closed_forms() {
    let ld = [(0.5f64).ln(), (0.25f64).ln()];
    let mut out = 0.0;
    unsafe {
        assert_eq!(cveval_log_mean_exp(ld.as_ptr(), 2, &mut out), CvStatus::Ok);
        assert!((out - 0.375f64.ln()).abs() < 1e-15);
        // Harmonic mean of 0.5 and 0.25 is 1/3.
        assert_eq!(cveval_is_log_ppd(ld.as_ptr(), 2, &mut out), CvStatus::Ok);
        assert!((out - (1.0f64 / 3.0).ln()).abs() < 1e-15);
        let same = [-1.0; 4];
        assert_eq!(cveval_waic_log_ppd(same.as_ptr(), 4, &mut out), CvStatus::Ok);
        assert_eq!(out, -1.0);
        assert_eq!(cveval_ic(ld.as_ptr(), 2, &mut out), CvStatus::Ok);
        assert!((out + 2.0 * (0.125f64).ln()).abs() < 1e-14);
        assert_eq!(cveval_binomial_midp(1, 2, 0.5, &mut out), CvStatus::Ok);
        assert_eq!(out, 0.5);
        assert_eq!(cveval_poisson_midp(0, 1.0, &mut out), CvStatus::Ok);
        assert!((out - (1.0 - 0.5 * (-1.0f64).exp())).abs() < 1e-15);
    }
}

#[test]
fn errors_are_coded_and_described() {
    let mut out = 0.0;
    unsafe {
        assert_eq!(cveval_log_mean_exp(ptr::null(), 3, &mut out), CvStatus::NullPointer);
        assert!(last_error().contains("null"));
        assert_eq!(
            cveval_log_mean_exp([1.0].as_ptr(), 0, &mut out),
            CvStatus::InvalidArgument
        );
        assert_eq!(cveval_binomial_midp(3, 2, 0.5, &mut out), CvStatus::InvalidArgument);

        let bad = CString::new("family = \"seeds\"\nbogus = 1").unwrap();
        let mut cfg = ptr::null_mut();
        assert_eq!(cveval_config_from_toml(bad.as_ptr(), &mut cfg), CvStatus::Config);
        assert!(cfg.is_null());
        assert!(last_error().contains("bogus"));

        let need = cveval_last_error(ptr::null_mut(), 0);
        let mut tiny = [1 as c_char; 4];
        assert_eq!(cveval_last_error(tiny.as_mut_ptr(), 4), need);
        assert_eq!(tiny[3], 0);

        let mut store = ptr::null_mut();
        let missing = CString::new("/nonexistent/spill.bin").unwrap();
        assert_eq!(cveval_store_open(missing.as_ptr(), &mut store), CvStatus::Io);

        cveval_config_free(ptr::null_mut());
        cveval_results_free(ptr::null_mut());
        cveval_store_free(ptr::null_mut());
        assert_eq!(cveval_results_len(ptr::null()), 0);
    }
}

#[test]
fn run_records_write_and_spill() {
    let dir = tempfile::tempdir().unwrap();
    unsafe {
        let text = CString::new(QUICK).unwrap();
        let mut cfg = ptr::null_mut();
        assert_eq!(cveval_config_from_toml(text.as_ptr(), &mut cfg), CvStatus::Ok);
        assert_eq!(cveval_config_set_seed(cfg, 7), CvStatus::Ok);
        let mut res = ptr::null_mut();
        assert_eq!(
            cveval_run(cfg, CvCommand::Pvalues, &mut res),
            CvStatus::Ok,
            "{}",
            last_error()
        );
        cveval_config_free(cfg);

        // 21 plates, two approximations plus the refitted values.
        assert_eq!(cveval_results_len(res), 21 * 3);
        let mut rec = CvRecord {
            replication: 9,
            quantity: CvQuantity::Dic,
            method: CvMethod::Dic,
            unit: 0,
            value: 0.0,
            mc_se: 0.0,
        };
        assert_eq!(cveval_results_record(res, 0, &mut rec), CvStatus::Ok);
        assert_eq!((rec.replication, rec.quantity, rec.unit), (0, CvQuantity::MidP, 1));
        assert!(rec.value > 0.0 && rec.value < 1.0);
        assert_eq!(cveval_results_record(res, 10_000, &mut rec), CvStatus::InvalidArgument);

        let mut buf = [0 as c_char; 32];
        let mut len = 0;
        assert_eq!(
            cveval_results_model(res, 0, buf.as_mut_ptr(), buf.len(), &mut len),
            CvStatus::Ok
        );
        assert_eq!(CStr::from_ptr(buf.as_ptr()).to_str().unwrap(), "seeds");
        assert_eq!(len, 5);

        let out = CString::new(dir.path().to_str().unwrap()).unwrap();
        assert_eq!(cveval_results_write(res, out.as_ptr()), CvStatus::Ok);
        cveval_results_free(res);

        let spill = CString::new(dir.path().join("draws-seeds-r1.bin").to_str().unwrap()).unwrap();
        let mut store = ptr::null_mut();
        assert_eq!(
            cveval_store_open(spill.as_ptr(), &mut store),
            CvStatus::Ok,
            "{}",
            last_error()
        );
        let (mut draws, mut n_theta, mut n_units) = (0, 0, 0);
        assert_eq!(
            cveval_store_shape(store, &mut draws, &mut n_theta, &mut n_units),
            CvStatus::Ok
        );
        assert_eq!((draws, n_theta, n_units), (300, 5, 21));
        let mut col = vec![0.0; draws];
        assert_eq!(
            cveval_store_theta_column(store, 4, col.as_mut_ptr(), draws),
            CvStatus::Ok
        );
        assert!(col.iter().all(|&s| s > 0.0));
        assert_eq!(
            cveval_store_theta_column(store, 5, col.as_mut_ptr(), draws),
            CvStatus::InvalidArgument
        );
        assert_eq!(
            cveval_store_theta_column(store, 0, col.as_mut_ptr(), 10),
            CvStatus::InvalidArgument
        );
        cveval_store_free(store);
    }
    assert!(dir.path().join("manifest.json").exists());
    assert!(dir.path().join("pvalue-scatter.csv").exists());
}

#[test]
fn header_declares_the_interface() {
    let header = std::fs::read_to_string(concat!(env!("CARGO_MANIFEST_DIR"), "/include/cveval.h")).unwrap();
    for name in [
        "cveval_last_error",
        "cveval_is_log_ppd",
        "cveval_run",
        "cveval_results_record",
        "cveval_store_open",
        "typedef struct CvResults CvResults",
        "CvStatus_Ok = 0",
    ] {
        assert!(header.contains(name), "{name} missing from header");
    }
}
