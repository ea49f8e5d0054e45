//! C interface to the walkmax simulator.
//!
//! Objects are opaque heap handles created by `*_new`-style constructors
//! and released by the matching `*_free`. Every fallible function returns a
//! [`WalkmaxStatus`]; on failure the message is kept per thread and can be
//! copied out with [`walkmax_last_error`]. Output pointers are written only
//! on success.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;
use std::sync::Arc;

use walkmax::approximation::{find_a_star, optimize_gamma, Approximation, SafetyParams, GAMMA_GRID};
use walkmax::config::parse_config;
use walkmax::estimators::{bg_experiment, crude_experiment, default_crude_steps, siegmund_experiment, BgPlan, Summary};
use walkmax::experiment::run_experiment;
use walkmax::models::{ModelSpec, SharedModel};
use walkmax::sampler::SamplerConfig;
use walkmax::Error;

/// Result of every fallible call.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum WalkmaxStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    Config = 3,
    Numeric = 4,
    Calibration = 5,
    Sampler = 6,
    Run = 7,
    Validation = 8,
    Io = 9,
    Panic = 10,
}

/// An increment distribution.
pub struct WalkmaxModel {
    inner: SharedModel,
}

/// The tail approximation `v` and its smoothing `w` for one model.
pub struct WalkmaxApproximation {
    inner: Arc<Approximation>,
}

/// A calibrated importance sampler, reusable across levels up to the
/// `b_max` it was built for.
pub struct WalkmaxBgPlan {
    inner: BgPlan,
}

/// Replication summary of one estimate. `std_error` avoids the `stderr`
/// macro of `<stdio.h>`.
#[repr(C)]
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct WalkmaxSummary {
    pub n: u64,
    pub mean: f64,
    pub std_error: f64,
    pub cv: f64,
    pub ci_lo: f64,
    pub ci_hi: f64,
    pub mean_steps: f64,
    pub mean_variates: f64,
    pub second_moment: f64,
    pub second_moment_stderr: f64,
    pub wall_time: f64,
}

impl From<&Summary> for WalkmaxSummary {
    fn from(s: &Summary) -> Self {
        WalkmaxSummary {
            n: s.n,
            mean: s.mean,
            std_error: s.stderr,
            cv: s.cv,
            ci_lo: s.ci95.0,
            ci_hi: s.ci95.1,
            mean_steps: s.mean_steps,
            mean_variates: s.mean_variates,
            second_moment: s.second_moment,
            second_moment_stderr: s.second_moment_stderr,
            wall_time: s.wall_time,
        }
    }
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_last_error(msg: String) {
    let c = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

fn status_of(e: &Error) -> WalkmaxStatus {
    match e.root() {
        Error::NumericFailure { .. } => WalkmaxStatus::Numeric,
        Error::CalibrationFailure(_) => WalkmaxStatus::Calibration,
        Error::SamplerFailure { .. } | Error::SamplerPrecondition { .. } => WalkmaxStatus::Sampler,
        Error::RunFailure(_) | Error::Replication { .. } => WalkmaxStatus::Run,
        Error::Config { .. } => WalkmaxStatus::Config,
        Error::ValidationFailure(_) => WalkmaxStatus::Validation,
        Error::Io(_) => WalkmaxStatus::Io,
        Error::NotLightTailed(_) | Error::Domain(_) | Error::InvalidModel(_) | Error::UnsupportedInstance(_) => {
            WalkmaxStatus::InvalidArgument
        }
    }
}

struct Failure(WalkmaxStatus, String);

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure(status_of(&e), e.to_string())
    }
}

fn null(what: &str) -> Failure {
    Failure(WalkmaxStatus::NullPointer, format!("{what} is null"))
}

fn invalid(msg: impl Into<String>) -> Failure {
    Failure(WalkmaxStatus::InvalidArgument, msg.into())
}

fn guard<F: FnOnce() -> Result<(), Failure>>(f: F) -> WalkmaxStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => WalkmaxStatus::Ok,
        Ok(Err(Failure(status, msg))) => {
            set_last_error(msg);
            status
        }
        Err(payload) => {
            let msg = payload
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| payload.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "unknown panic".into());
            set_last_error(format!("panic: {msg}"));
            WalkmaxStatus::Panic
        }
    }
}

unsafe fn deref<'a, T>(p: *const T, what: &str) -> Result<&'a T, Failure> {
    p.as_ref().ok_or_else(|| null(what))
}

unsafe fn write<T>(out: *mut T, value: T, what: &str) -> Result<(), Failure> {
    if out.is_null() {
        return Err(null(what));
    }
    out.write(value);
    Ok(())
}

fn workers(n: usize) -> usize {
    if n == 0 {
        std::thread::available_parallelism().map(|n| n.get()).unwrap_or(1)
    } else {
        n
    }
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn walkmax_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Copies the calling thread's last error message into `buf` (truncated and
/// NUL-terminated) and returns the buffer size needed for the full message,
/// or 0 when there is no error. `buf` may be null to query the size.
///
/// # Safety
/// `buf` must be null or valid for `len` bytes.
#[no_mangle]
pub unsafe extern "C" fn walkmax_last_error(buf: *mut c_char, len: usize) -> usize {
    LAST_ERROR.with(|e| match e.borrow().as_ref() {
        None => 0,
        Some(msg) => {
            let bytes = msg.as_bytes_with_nul();
            if !buf.is_null() && len > 0 {
                let n = bytes.len().min(len) - 1;
                ptr::copy_nonoverlapping(bytes.as_ptr().cast::<c_char>(), buf, n);
                *buf.add(n) = 0;
            }
            bytes.len()
        }
    })
}

unsafe fn new_model(spec: ModelSpec, out: *mut *mut WalkmaxModel) -> WalkmaxStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        let inner = spec.build()?;
        write(out, Box::into_raw(Box::new(WalkmaxModel { inner })), "out")
    })
}

/// Weibull-tailed service minus deterministic interarrival.
///
/// # Safety
/// `out` must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn walkmax_model_weibull_det(out: *mut *mut WalkmaxModel) -> WalkmaxStatus {
    new_model(ModelSpec::WeibullDetArrival, out)
}

/// Pareto service minus exponential interarrival.
///
/// # Safety
/// `out` must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn walkmax_model_pareto_mg1(out: *mut *mut WalkmaxModel) -> WalkmaxStatus {
    new_model(ModelSpec::ParetoMG1, out)
}

/// Difference of exponentials with rates `mu` (service) and `lambda` (arrivals).
///
/// # Safety
/// `out` must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn walkmax_model_exp_diff(mu: f64, lambda: f64, out: *mut *mut WalkmaxModel) -> WalkmaxStatus {
    new_model(ModelSpec::ExpDiff { mu, lambda }, out)
}

/// Normal increments with mean `-mu`, `mu > 0`.
///
/// # Safety
/// `out` must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn walkmax_model_gaussian(mu: f64, sigma: f64, out: *mut *mut WalkmaxModel) -> WalkmaxStatus {
    new_model(ModelSpec::GaussianDrift { mu, sigma }, out)
}

/// Finite lattice law with `len` atoms.
///
/// # Safety
/// `values` and `probs` must be valid for `len` reads; `out` for writes.
#[no_mangle]
pub unsafe extern "C" fn walkmax_model_lattice(
    values: *const f64,
    probs: *const f64,
    len: usize,
    out: *mut *mut WalkmaxModel,
) -> WalkmaxStatus {
    if values.is_null() || probs.is_null() {
        return guard(|| Err(null("values or probs")));
    }
    let values = std::slice::from_raw_parts(values, len).to_vec();
    let probs = std::slice::from_raw_parts(probs, len).to_vec();
    new_model(ModelSpec::DiscreteLattice { values, probs }, out)
}

/// Mean increment.
///
/// # Safety
/// `model` must be a live handle; `out` valid for writes.
#[no_mangle]
pub unsafe extern "C" fn walkmax_model_mean(model: *const WalkmaxModel, out: *mut f64) -> WalkmaxStatus {
    guard(|| write(out, deref(model, "model")?.inner.mean(), "out"))
}

/// # Safety
/// `model` must be null or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn walkmax_model_free(model: *mut WalkmaxModel) {
    if !model.is_null() {
        drop(Box::from_raw(model));
    }
}

/// # Safety
/// `model` must be a live handle; `out` valid for writes. The new handle
/// does not borrow `model`.
#[no_mangle]
pub unsafe extern "C" fn walkmax_approximation_new(
    model: *const WalkmaxModel,
    out: *mut *mut WalkmaxApproximation,
) -> WalkmaxStatus {
    guard(|| {
        let m = deref(model, "model")?;
        if out.is_null() {
            return Err(null("out"));
        }
        let inner = Arc::new(Approximation::new(m.inner.clone())?);
        write(out, Box::into_raw(Box::new(WalkmaxApproximation { inner })), "out")
    })
}

/// `v(y)`, the approximation of `P(M > -y)`.
///
/// # Safety
/// `approx` must be a live handle; `out` valid for writes.
#[no_mangle]
pub unsafe extern "C" fn walkmax_approximation_v(
    approx: *const WalkmaxApproximation,
    y: f64,
    out: *mut f64,
) -> WalkmaxStatus {
    guard(|| write(out, deref(approx, "approx")?.inner.v(y), "out"))
}

/// `w(y)`, the one-step smoothing of `v`.
///
/// # Safety
/// `approx` must be a live handle; `out` valid for writes.
#[no_mangle]
pub unsafe extern "C" fn walkmax_approximation_w(
    approx: *const WalkmaxApproximation,
    y: f64,
    out: *mut f64,
) -> WalkmaxStatus {
    guard(|| write(out, deref(approx, "approx")?.inner.w(y)?, "out"))
}

/// # Safety
/// `approx` must be null or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn walkmax_approximation_free(approx: *mut WalkmaxApproximation) {
    if !approx.is_null() {
        drop(Box::from_raw(approx));
    }
}

/// Scans `[y_min, 0]` with spacing `grid_step` for the largest shift at
/// which the margin condition holds on the whole grid below it.
///
/// # Safety
/// `approx` must be a live handle; `a_star` and `kappa` valid for writes.
#[no_mangle]
pub unsafe extern "C" fn walkmax_find_a_star(
    approx: *const WalkmaxApproximation,
    gamma: f64,
    y_min: f64,
    grid_step: f64,
    a_star: *mut f64,
    kappa: *mut f64,
) -> WalkmaxStatus {
    guard(|| {
        let a = deref(approx, "approx")?;
        if a_star.is_null() || kappa.is_null() {
            return Err(null("a_star or kappa"));
        }
        let sp = find_a_star(&a.inner, gamma, y_min, grid_step)?;
        write(a_star, sp.a_star, "a_star")?;
        write(kappa, sp.kappa, "kappa")
    })
}

/// Calibrates the shift for each `γ` on a built-in grid and reports the one
/// with the smallest second-moment bound constant.
///
/// # Safety
/// `approx` must be a live handle; `gamma`, `a_star` and `kappa` valid for
/// writes.
#[no_mangle]
pub unsafe extern "C" fn walkmax_optimize_gamma(
    approx: *const WalkmaxApproximation,
    y_min: f64,
    grid_step: f64,
    gamma: *mut f64,
    a_star: *mut f64,
    kappa: *mut f64,
) -> WalkmaxStatus {
    guard(|| {
        let a = deref(approx, "approx")?;
        if gamma.is_null() || a_star.is_null() || kappa.is_null() {
            return Err(null("gamma, a_star or kappa"));
        }
        let sp = optimize_gamma(&a.inner, GAMMA_GRID, y_min, grid_step)?;
        write(gamma, sp.gamma, "gamma")?;
        write(a_star, sp.a_star, "a_star")?;
        write(kappa, sp.kappa, "kappa")
    })
}

/// Builds a sampler with shift `a_star` for levels up to `b_max`, using the
/// scheme chosen automatically from the tail class.
///
/// # Safety
/// `approx` must be a live handle; `out` valid for writes.
#[no_mangle]
pub unsafe extern "C" fn walkmax_bg_plan_new(
    approx: *const WalkmaxApproximation,
    gamma: f64,
    a_star: f64,
    b_max: f64,
    out: *mut *mut WalkmaxBgPlan,
) -> WalkmaxStatus {
    guard(|| {
        let a = deref(approx, "approx")?;
        if out.is_null() {
            return Err(null("out"));
        }
        if !(b_max > 0.0 && b_max.is_finite()) {
            return Err(invalid(format!("b_max must be positive, got {b_max}")));
        }
        let safety = SafetyParams::manual(&a.inner, gamma, a_star)?;
        let inner = BgPlan::new(a.inner.clone(), safety, SamplerConfig::default(), b_max)?;
        write(out, Box::into_raw(Box::new(WalkmaxBgPlan { inner })), "out")
    })
}

/// # Safety
/// `plan` must be null or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn walkmax_bg_plan_free(plan: *mut WalkmaxBgPlan) {
    if !plan.is_null() {
        drop(Box::from_raw(plan));
    }
}

fn check_level(b: f64, n: u64) -> Result<(), Failure> {
    if !(b > 0.0 && b.is_finite()) {
        return Err(invalid(format!("b must be positive, got {b}")));
    }
    if n == 0 {
        return Err(invalid("n must be at least 1"));
    }
    Ok(())
}

/// Importance-sampling estimate of `P(M > b)`. `workers = 0` uses all
/// cores; the result does not depend on it.
///
/// # Safety
/// `plan` must be a live handle; `out` valid for writes.
#[no_mangle]
pub unsafe extern "C" fn walkmax_bg_estimate(
    plan: *const WalkmaxBgPlan,
    b: f64,
    n: u64,
    seed: u64,
    workers_: usize,
    out: *mut WalkmaxSummary,
) -> WalkmaxStatus {
    guard(|| {
        let p = deref(plan, "plan")?;
        check_level(b, n)?;
        let s = bg_experiment(&p.inner, b, n, seed, workers(workers_))?;
        write(out, WalkmaxSummary::from(&s), "out")
    })
}

/// Exponential-tilting estimate for light-tailed models.
///
/// # Safety
/// `model` must be a live handle; `out` valid for writes.
#[no_mangle]
pub unsafe extern "C" fn walkmax_siegmund_estimate(
    model: *const WalkmaxModel,
    b: f64,
    n: u64,
    seed: u64,
    workers_: usize,
    out: *mut WalkmaxSummary,
) -> WalkmaxStatus {
    guard(|| {
        let m = deref(model, "model")?;
        check_level(b, n)?;
        let s = siegmund_experiment(m.inner.as_ref(), b, n, seed, workers(workers_))?;
        write(out, WalkmaxSummary::from(&s), "out")
    })
}

/// Plain simulation truncated at `max_steps` (0 selects the default horizon).
///
/// # Safety
/// `model` must be a live handle; `out` valid for writes.
#[no_mangle]
pub unsafe extern "C" fn walkmax_crude_estimate(
    model: *const WalkmaxModel,
    b: f64,
    max_steps: u64,
    n: u64,
    seed: u64,
    workers_: usize,
    out: *mut WalkmaxSummary,
) -> WalkmaxStatus {
    guard(|| {
        let m = deref(model, "model")?;
        check_level(b, n)?;
        let steps = if max_steps == 0 {
            default_crude_steps(m.inner.as_ref(), b)
        } else {
            max_steps
        };
        let s = crude_experiment(m.inner.as_ref(), b, steps, n, seed, workers(workers_))?;
        write(out, WalkmaxSummary::from(&s), "out")
    })
}

/// Runs an experiment described by configuration text, writing one summary
/// per level into `out` (capacity `capacity`) and the level count into
/// `written`. If `capacity` is too small nothing is run, `written` receives
/// the required count and the status is `InvalidArgument`.
///
/// # Safety
/// `config` must be a NUL-terminated string; `out` valid for `capacity`
/// writes; `written` valid for writes.
#[no_mangle]
pub unsafe extern "C" fn walkmax_run_config(
    config: *const c_char,
    workers_: usize,
    out: *mut WalkmaxSummary,
    capacity: usize,
    written: *mut usize,
) -> WalkmaxStatus {
    guard(|| {
        if config.is_null() {
            return Err(null("config"));
        }
        if written.is_null() {
            return Err(null("written"));
        }
        let text = CStr::from_ptr(config)
            .to_str()
            .map_err(|e| Failure(WalkmaxStatus::Config, format!("config is not UTF-8: {e}")))?;
        let cfg = parse_config(text)?;
        written.write(cfg.levels.len());
        if capacity < cfg.levels.len() {
            return Err(invalid(format!("need room for {} summaries, got {capacity}", cfg.levels.len())));
        }
        if out.is_null() {
            return Err(null("out"));
        }
        for (i, r) in run_experiment(&cfg, workers(workers_))?.iter().enumerate() {
            out.add(i).write(WalkmaxSummary::from(&r.summary));
        }
        Ok(())
    })
}
