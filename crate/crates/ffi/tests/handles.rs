use std::ffi::{CStr, CString};
use std::ptr;

use walkmax_ffi::*;

fn last_error() -> String {
    let mut buf = vec![0 as std::ffi::c_char; 512];
    let need = unsafe { walkmax_last_error(buf.as_mut_ptr(), buf.len()) };
    assert!(need > 0);
    unsafe { CStr::from_ptr(buf.as_ptr()) }.to_string_lossy().into_owned()
}

#[test]
fn version_is_the_crate_version() {
    let v = unsafe { CStr::from_ptr(walkmax_version()) };
    assert_eq!(v.to_str().unwrap(), env!("CARGO_PKG_VERSION"));
}

#[test]
fn weibull_approximation_through_handles() {
    unsafe {
        let mut model = ptr::null_mut();
        assert_eq!(walkmax_model_weibull_det(&mut model), WalkmaxStatus::Ok);
        let mut mean = 0.0;
        assert_eq!(walkmax_model_mean(model, &mut mean), WalkmaxStatus::Ok);
        assert!(mean < 0.0);
        let mut approx = ptr::null_mut();
        assert_eq!(walkmax_approximation_new(model, &mut approx), WalkmaxStatus::Ok);
        // The approximation keeps its own reference to the model.
        walkmax_model_free(model);
        let (mut v, mut w) = (0.0, 0.0);
        assert_eq!(walkmax_approximation_v(approx, -10.0, &mut v), WalkmaxStatus::Ok);
        assert_eq!(walkmax_approximation_w(approx, -10.0, &mut w), WalkmaxStatus::Ok);
        assert!((v / 1.004e-2 - 1.0).abs() < 0.01, "v(-10) = {v}");
        assert!(w > 0.0 && w < 1.0);
        walkmax_approximation_free(approx);
    }
}

#[test]
fn invalid_model_reports_status_and_message() {
    unsafe {
        let mut model = ptr::null_mut();
        let status = walkmax_model_exp_diff(0.5, 1.0, &mut model);
        assert_eq!(status, WalkmaxStatus::InvalidArgument);
        assert!(model.is_null());
        assert!(!last_error().is_empty());
        assert_eq!(walkmax_model_pareto_mg1(ptr::null_mut()), WalkmaxStatus::NullPointer);
        assert!(last_error().contains("null"));
    }
}

#[test]
fn error_buffer_truncates_and_reports_size() {
    unsafe {
        assert_eq!(walkmax_model_mean(ptr::null(), ptr::null_mut()), WalkmaxStatus::NullPointer);
        let need = walkmax_last_error(ptr::null_mut(), 0);
        let mut small = [1 as std::ffi::c_char; 4];
        assert_eq!(walkmax_last_error(small.as_mut_ptr(), small.len()), need);
        assert_eq!(small[3], 0);
        assert_eq!(CStr::from_ptr(small.as_ptr()).to_bytes().len(), 3);
    }
}

#[test]
fn siegmund_estimate_matches_closed_form() {
    unsafe {
        let mut model = ptr::null_mut();
        assert_eq!(walkmax_model_exp_diff(1.0, 0.5, &mut model), WalkmaxStatus::Ok);
        let mut s = WalkmaxSummary::default();
        assert_eq!(walkmax_siegmund_estimate(model, 10.0, 2000, 3, 1, &mut s), WalkmaxStatus::Ok);
        let exact = 0.5 * (-5.0f64).exp();
        assert_eq!(s.n, 2000);
        assert!((s.mean - exact).abs() < 4.0 * s.std_error, "{} vs {exact}", s.mean);
        let mut heavy = ptr::null_mut();
        assert_eq!(walkmax_model_weibull_det(&mut heavy), WalkmaxStatus::Ok);
        assert_eq!(walkmax_siegmund_estimate(heavy, 10.0, 10, 3, 1, &mut s), WalkmaxStatus::InvalidArgument);
        walkmax_model_free(model);
        walkmax_model_free(heavy);
    }
}

#[test]
fn bg_plan_is_deterministic_across_worker_counts() {
    unsafe {
        let mut model = ptr::null_mut();
        assert_eq!(walkmax_model_weibull_det(&mut model), WalkmaxStatus::Ok);
        let mut approx = ptr::null_mut();
        assert_eq!(walkmax_approximation_new(model, &mut approx), WalkmaxStatus::Ok);
        let mut plan = ptr::null_mut();
        assert_eq!(walkmax_bg_plan_new(approx, 0.5, -10.0, 10.0, &mut plan), WalkmaxStatus::Ok);
        let mut one = WalkmaxSummary::default();
        let mut three = WalkmaxSummary::default();
        assert_eq!(walkmax_bg_estimate(plan, 10.0, 600, 9, 1, &mut one), WalkmaxStatus::Ok);
        assert_eq!(walkmax_bg_estimate(plan, 10.0, 600, 9, 3, &mut three), WalkmaxStatus::Ok);
        assert_eq!(one.mean.to_bits(), three.mean.to_bits());
        assert!(one.mean > 1e-2 && one.mean < 3e-2);
        assert_eq!(walkmax_bg_estimate(plan, -1.0, 600, 9, 1, &mut one), WalkmaxStatus::InvalidArgument);
        walkmax_bg_plan_free(plan);
        walkmax_approximation_free(approx);
        walkmax_model_free(model);
    }
}

#[test]
fn lattice_shift_search() {
    unsafe {
        let values = [-2.0, 5.0, 20.0];
        let probs = [0.92, 0.06, 0.02];
        let mut model = ptr::null_mut();
        assert_eq!(walkmax_model_lattice(values.as_ptr(), probs.as_ptr(), 3, &mut model), WalkmaxStatus::Ok);
        let mut approx = ptr::null_mut();
        assert_eq!(walkmax_approximation_new(model, &mut approx), WalkmaxStatus::Ok);
        let (mut a, mut kappa) = (f64::NAN, f64::NAN);
        assert_eq!(walkmax_find_a_star(approx, 0.75, -200.0, 1.0, &mut a, &mut kappa), WalkmaxStatus::Ok);
        assert!(a <= 0.0 && kappa > 0.0);
        assert_eq!(walkmax_find_a_star(approx, 1.5, -200.0, 1.0, &mut a, &mut kappa), WalkmaxStatus::Calibration);
        let mut gamma = f64::NAN;
        assert_eq!(walkmax_optimize_gamma(approx, -200.0, 1.0, &mut gamma, &mut a, &mut kappa), WalkmaxStatus::Ok);
        assert!(gamma > 0.0 && gamma < 1.0 && a <= 0.0 && kappa > 0.0);
        walkmax_approximation_free(approx);
        walkmax_model_free(model);
    }
}

#[test]
fn run_config_fills_one_summary_per_level() {
    let text = CString::new("model = exp_diff\nestimator = crude\nb = 1, 2\nn = 200\nseed = 4\n[model]\nmu = 1\nlambda = 0.5\n").unwrap();
    let mut out = [WalkmaxSummary::default(); 2];
    let mut written = 0usize;
    unsafe {
        assert_eq!(
            walkmax_run_config(text.as_ptr(), 1, out.as_mut_ptr(), 1, &mut written),
            WalkmaxStatus::InvalidArgument
        );
        assert_eq!(written, 2);
        assert_eq!(walkmax_run_config(text.as_ptr(), 1, out.as_mut_ptr(), 2, &mut written), WalkmaxStatus::Ok);
        assert!(out[0].mean > out[1].mean && out[1].n == 200);
        let bad = CString::new("model = exp_diff\n").unwrap();
        assert_eq!(walkmax_run_config(bad.as_ptr(), 1, out.as_mut_ptr(), 2, &mut written), WalkmaxStatus::Config);
    }
}
