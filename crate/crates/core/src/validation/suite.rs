use std::sync::Arc;

use crate::approximation::{find_a_star, Approximation};
use crate::error::{Error, Result};
use crate::estimators::{run_kernel, run_replications, Summary};
use crate::models::DiscreteLattice;

use super::{
    bg_weight, exact_killed, exact_second_moment, exact_u_star, harmonic_residual, shifted_certificate,
    value_iteration, DiscreteWalkSpec, LatticeKernel, PositiveFn,
};

pub const CHECK_NAMES: &[&str] = &[
    "gamblers_ruin",
    "solver_agreement",
    "harmonic",
    "zero_variance",
    "unbiased",
    "second_moment",
    "certificate",
    "killed_chain",
];

#[derive(Debug, Clone)]
pub struct SuiteOptions {
    pub replications: u64,
    pub seed: u64,
    pub workers: usize,
    /// Multiplies the exact solution on levels `<= 0` before it is used as
    /// the zero-variance `v`. Anything but 1 must make that check fail.
    pub v_scale: f64,
}

impl Default for SuiteOptions {
    fn default() -> Self {
        SuiteOptions {
            replications: 100_000,
            seed: 20_070_101,
            workers: std::thread::available_parallelism().map(|n| n.get()).unwrap_or(1),
            v_scale: 1.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CheckOutcome {
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
}

fn outcome(name: &'static str, passed: bool, detail: String) -> CheckOutcome {
    CheckOutcome { name, passed, detail }
}

/// Lattice with the classical gambler's-ruin closed form.
pub fn ruin_walk() -> DiscreteWalkSpec {
    DiscreteWalkSpec::new(vec![-1.0, 1.0], vec![0.7, 0.3]).expect("valid walk")
}

/// Four-point lattice with an occasional large jump.
pub fn four_point_walk() -> DiscreteWalkSpec {
    DiscreteWalkSpec::new(vec![-3.0, -1.0, 2.0, 6.0], vec![0.5, 0.3, 0.15, 0.05]).expect("valid walk")
}

/// Three-point lattice whose rare jump is large relative to the drift.
pub fn jump_walk() -> DiscreteWalkSpec {
    DiscreteWalkSpec::new(vec![-2.0, 5.0, 20.0], vec![0.92, 0.06, 0.02]).expect("valid walk")
}

fn exponential_v(rate: f64) -> PositiveFn {
    Arc::new(move |y: f64| if y > 0.0 { 1.0 } else { (rate * y).exp() })
}

fn simulate(spec: &DiscreteWalkSpec, v: PositiveFn, a_star: f64, b: f64, opts: &SuiteOptions, n: u64) -> Result<Summary> {
    let kernel = LatticeKernel::new(spec.clone(), v);
    run_replications(
        n,
        opts.seed ^ b.to_bits(),
        opts.workers,
        || kernel.clone(),
        |k, rng| run_kernel(k, a_star, b, 1_000_000, rng),
    )
}

fn gamblers_ruin() -> Result<CheckOutcome> {
    let sol = exact_u_star(&ruin_walk(), 30)?;
    let mut worst: f64 = 0.0;
    for b in 0..=30 {
        let exact = (3.0f64 / 7.0).powi(b + 1);
        worst = worst.max((sol.at_level(-b as i64) - exact).abs() / exact);
    }
    Ok(outcome("gamblers_ruin", worst < 1e-10, format!("max relative error {worst:.2e}")))
}

fn solver_agreement() -> Result<CheckOutcome> {
    let spec = DiscreteWalkSpec::new(vec![-2.0, 1.0], vec![0.5, 0.5])?;
    let sol = exact_u_star(&spec, 40)?;
    let depth = sol.solved_depth;
    let vi = value_iteration(&spec, depth, 1e-14, 5_000_000)?;
    let mut worst: f64 = 0.0;
    for k in sol.levels() {
        let a = sol.at_level(k);
        worst = worst.max((a - vi[(k + depth) as usize]).abs() / a);
    }
    Ok(outcome("solver_agreement", worst < 1e-10, format!("max relative gap {worst:.2e}")))
}

fn harmonic() -> Result<CheckOutcome> {
    let mut worst: f64 = 0.0;
    for spec in [ruin_walk(), four_point_walk(), jump_walk()] {
        let sol = exact_u_star(&spec, 100)?;
        worst = worst.max(harmonic_residual(&spec, &sol));
    }
    Ok(outcome("harmonic", worst < 1e-10, format!("max residual {worst:.2e}")))
}

fn zero_variance(opts: &SuiteOptions) -> Result<CheckOutcome> {
    let spec = ruin_walk();
    let sol = Arc::new(exact_u_star(&spec, 40)?);
    let scale = opts.v_scale;
    let u = sol.clone();
    let v: PositiveFn = Arc::new(move |y: f64| if y > 0.0 { 1.0 } else { scale * u.at(y) });
    let b = 5.0;
    let target = sol.at(-b);
    let s = simulate(&spec, v, 0.0, b, opts, 2_000)?;
    let variance = s.stderr * s.stderr * s.n as f64;
    let rel = (s.mean - target).abs() / target;
    Ok(outcome(
        "zero_variance",
        rel < 1e-12 && variance < 1e-24,
        format!("mean {:.15e} vs exact {target:.15e}, sample variance {variance:.2e}", s.mean),
    ))
}

fn unbiased(opts: &SuiteOptions) -> Result<CheckOutcome> {
    let mut lines = Vec::new();
    let mut passed = true;
    for (label, spec, rate) in [("ruin", ruin_walk(), 0.6), ("four_point", four_point_walk(), 0.25)] {
        let sol = exact_u_star(&spec, 20)?;
        for b in [3.0, 5.0, 8.0] {
            let s = simulate(&spec, exponential_v(rate), 0.0, b, opts, opts.replications)?;
            let z = (s.mean - sol.at(-b)) / s.stderr;
            passed &= z.abs() <= 4.0;
            lines.push(format!("{label} b={b}: z={z:+.2}"));
        }
    }
    Ok(outcome("unbiased", passed, lines.join(", ")))
}

fn second_moment(opts: &SuiteOptions) -> Result<CheckOutcome> {
    let spec = four_point_walk();
    let v = exponential_v(0.25);
    let sol = exact_u_star(&spec, 60)?;
    let r = |y: f64, z: f64| bg_weight(&spec, v.as_ref(), 0.0, y, z);
    let sm = exact_second_moment(&spec, &r, 400)?;
    if let Some(g) = sm.divergence {
        return Ok(outcome("second_moment", false, format!("series diverges with growth {g:.4}")));
    }
    let mut dominated = true;
    for k in sol.levels() {
        let y = spec.position(k);
        dominated &= sm.at(y) >= sol.at(y).powi(2) * (1.0 - 1e-10);
    }
    let b = 5.0;
    let s = simulate(&spec, v.clone(), 0.0, b, opts, opts.replications)?;
    let z = (s.second_moment - sm.at(-b)) / s.second_moment_stderr;
    Ok(outcome(
        "second_moment",
        dominated && z.abs() <= 4.0,
        format!("E R^2 at b=5: sample {:.6e}, exact {:.6e} (z={z:+.2}); dominates u*^2: {dominated}", s.second_moment, sm.at(-b)),
    ))
}

/// Smallest round `γ` for which the jump walk admits a shift: at `γ = 0.5`
/// the margin already fails at the deepest level the sampler can visit.
pub const JUMP_WALK_GAMMA: f64 = 0.75;

/// Heavy-ish lattice with the integrated-tail `v` and a calibrated shift.
pub struct CalibratedJumpWalk {
    pub spec: DiscreteWalkSpec,
    pub approx: Arc<Approximation>,
    pub gamma: f64,
    pub a_star: f64,
    pub kappa: f64,
}

pub fn calibrated_jump_walk(gamma: f64) -> Result<CalibratedJumpWalk> {
    let spec = jump_walk();
    let model = DiscreteLattice::new(spec.values().to_vec(), spec.probs().to_vec())?;
    let approx = Arc::new(Approximation::new(Arc::new(model))?);
    let sp = find_a_star(&approx, gamma, -200.0, spec.span())?;
    Ok(CalibratedJumpWalk {
        spec,
        approx,
        gamma,
        a_star: sp.a_star,
        kappa: sp.kappa,
    })
}

fn certificate() -> Result<CheckOutcome> {
    let cal = calibrated_jump_walk(JUMP_WALK_GAMMA)?;
    let approx = cal.approx.clone();
    let v = move |y: f64| approx.v(y);
    let depth = 200;
    let (report, bound) = shifted_certificate(&cal.spec, &v, cal.gamma, cal.a_star, cal.kappa, depth);
    let scale = report.rows.iter().map(|&(y, _)| bound(y)).fold(0.0f64, f64::max);
    let margin_ok = report.max_margin <= 1e-12 * scale;
    let r = |y: f64, z: f64| bg_weight(&cal.spec, &v, cal.a_star, y, z);
    let sm = exact_second_moment(&cal.spec, &r, depth)?;
    let mut dominated = sm.divergence.is_none();
    for &(y, _) in &report.rows {
        dominated &= sm.at(y) <= bound(y) * (1.0 + 1e-10);
    }
    Ok(outcome(
        "certificate",
        margin_ok && dominated,
        format!(
            "a_* = {}, {} levels, max drift margin {:.3e}, exact second moment within bound: {dominated}",
            cal.a_star,
            report.rows.len(),
            report.max_margin
        ),
    ))
}

fn killed_chain(opts: &SuiteOptions) -> Result<CheckOutcome> {
    let cal = calibrated_jump_walk(JUMP_WALK_GAMMA)?;
    let approx = cal.approx.clone();
    let v: PositiveFn = Arc::new(move |y: f64| approx.v(y));
    let a_star = cal.a_star;
    let alive_v = v.clone();
    let span = cal.spec.span();
    let alive = move |k: i64| alive_v(k as f64 * span + a_star) > 0.0;
    let sol = exact_killed(&cal.spec, 30, &alive)?;
    let mut lines = Vec::new();
    let mut passed = true;
    let mut any = false;
    for b in [3.0, 5.0, 8.0] {
        if v(-b + a_star) == 0.0 {
            lines.push(format!("b={b}: start outside the support of v"));
            continue;
        }
        any = true;
        let s = simulate(&cal.spec, v.clone(), a_star, b, opts, opts.replications)?;
        let z = (s.mean - sol.at(-b)) / s.stderr;
        passed &= z.abs() <= 4.0;
        lines.push(format!("b={b}: z={z:+.2}"));
    }
    Ok(outcome("killed_chain", passed && any, lines.join(", ")))
}

/// Runs the selected checks in the order given.
pub fn run_suite(selection: &[&str], opts: &SuiteOptions) -> Result<Vec<CheckOutcome>> {
    if selection.is_empty() {
        return Err(Error::Domain("no validation checks selected".into()));
    }
    selection
        .iter()
        .map(|&name| match name {
            "gamblers_ruin" => gamblers_ruin(),
            "solver_agreement" => solver_agreement(),
            "harmonic" => harmonic(),
            "zero_variance" => zero_variance(opts),
            "unbiased" => unbiased(opts),
            "second_moment" => second_moment(opts),
            "certificate" => certificate(),
            "killed_chain" => killed_chain(opts),
            other => Err(Error::Domain(format!(
                "unknown validation check '{other}' (known: {})",
                CHECK_NAMES.join(", ")
            ))),
        })
        .collect()
}
