//! End-to-end acceptance run. Prints one PASS/FAIL line per criterion and
//! fails unless every criterion outside `KNOWN_UNATTAINABLE` passes.
//!
//! The table goes straight to the stderr handle, which the test harness
//! does not capture, so it also shows up in a plain `cargo test` run.

use std::collections::HashMap;
use std::io::Write;
use std::sync::Arc;

use walkmax::approximation::{default_y_min, optimize_gamma, Approximation, SafetyParams, GAMMA_GRID};
use walkmax::diagnostics::{default_sampler_cases, run_sampler_case, sampler_plan, SamplerCheck, ACCEPTANCE_FLOOR};
use walkmax::estimators::{bg_experiment, run_kernel, run_replications, siegmund_experiment, solve_theta_star, BgPlan, Summary};
use walkmax::models::{DiscreteLattice, ExpDiff, ModelSpec, ParetoMG1, WeibullDetArrival};
use walkmax::sampler::{SamplerConfig, SchemeChoice};
use walkmax::stats::linear_fit;
use walkmax::validation::{exact_u_star, run_suite, DiscreteWalkSpec, LatticeKernel, PositiveFn, SuiteOptions};
use walkmax::Result;

const SEED: u64 = 20_070_101;

/// Criteria that cannot pass as stated; they are run and reported but do not
/// fail the test. Criterion 7 prescribes the integrated-tail `v` on the ±1
/// walk, which vanishes at every start level below 0, so the importance
/// sampler has no admissible transition there.
const KNOWN_UNATTAINABLE: &[u32] = &[7];

const COMPLEXITY_LEVELS: [f64; 5] = [50.0, 100.0, 200.0, 400.0, 800.0];

fn report(line: &str) {
    let _ = writeln!(std::io::stderr().lock(), "{line}");
}

fn workers() -> usize {
    std::thread::available_parallelism().map(|n| n.get()).unwrap_or(1)
}

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs()
}

struct Verdict {
    passed: bool,
    detail: String,
}

fn verdict(passed: bool, detail: impl Into<String>) -> Result<Verdict> {
    Ok(Verdict {
        passed,
        detail: detail.into(),
    })
}

/// Shared state: the Weibull plan with the fixed shift, its summaries, and
/// the sampler goodness-of-fit results (reused for the acceptance floor).
struct Context {
    weibull: Arc<Approximation>,
    weibull_plan: BgPlan,
    weibull_runs: HashMap<u64, Summary>,
    sampler_checks: Vec<(&'static str, SamplerCheck)>,
}

impl Context {
    fn new() -> Result<Self> {
        let weibull = Arc::new(Approximation::new(Arc::new(WeibullDetArrival::new()))?);
        let safety = SafetyParams::manual(&weibull, 0.5, -10.0)?;
        let weibull_plan = BgPlan::new(weibull.clone(), safety, SamplerConfig::default(), 800.0)?;
        Ok(Context {
            weibull,
            weibull_plan,
            weibull_runs: HashMap::new(),
            sampler_checks: Vec::new(),
        })
    }

    /// BG summary for the Weibull model at level `b` with 20 000 replications.
    fn weibull_at(&mut self, b: f64) -> Result<Summary> {
        if let Some(s) = self.weibull_runs.get(&b.to_bits()) {
            return Ok(s.clone());
        }
        let s = bg_experiment(&self.weibull_plan, b, 20_000, SEED, workers())?;
        self.weibull_runs.insert(b.to_bits(), s.clone());
        Ok(s)
    }
}

fn weibull_v_values(ctx: &mut Context) -> Result<Verdict> {
    let table = [(10.0, 1.004e-2), (50.0, 9.577e-6), (250.0, 5.666e-13), (500.0, 1.655e-18), (650.0, 3.584e-21)];
    let mut worst: f64 = 0.0;
    let mut parts = Vec::new();
    for (b, expected) in table {
        let v = ctx.weibull.v(-b);
        worst = worst.max(rel(v, expected));
        parts.push(format!("v(-{b})={v:.4e}"));
    }
    verdict(worst <= 0.01, format!("{}; max relative error {worst:.2e}", parts.join(" ")))
}

fn pareto_v_values(_: &mut Context) -> Result<Verdict> {
    let approx = Approximation::new(Arc::new(ParetoMG1::new()))?;
    let v2 = approx.v(-100.0);
    let v3 = approx.v(-1000.0);
    let v4 = approx.v(-10_000.0);
    let e3 = rel(v3, 3.151e-5);
    let e4 = rel(v4, 9.996e-7);
    // Integrated tail of index 1.5: a tenfold level costs a factor 10^1.5.
    let scaling = rel(v2 / v3, 10f64.powf(1.5));
    verdict(
        e3 <= 0.01 && e4 <= 0.01 && scaling <= 0.15,
        format!(
            "v(-1e3)={v3:.4e} (err {e3:.2e}), v(-1e4)={v4:.4e} (err {e4:.2e}), v(-1e2)={v2:.4e} with ratio error {scaling:.3}"
        ),
    )
}

fn weibull_low_level(ctx: &mut Context) -> Result<Verdict> {
    let s = ctx.weibull_at(10.0)?;
    verdict(
        (1.857e-2..=2.027e-2).contains(&s.mean) && s.cv <= 6.0,
        format!("mean {:.4e} (stderr {:.2e}), cv {:.2}", s.mean, s.stderr, s.cv),
    )
}

fn weibull_high_levels(ctx: &mut Context) -> Result<Verdict> {
    let mut passed = true;
    let mut parts = Vec::new();
    for (b, lo, hi) in [(250.0, 6.842e-13, 7.310e-13), (500.0, 1.797e-18, 1.997e-18)] {
        let s = ctx.weibull_at(b)?;
        passed &= (lo..=hi).contains(&s.mean);
        parts.push(format!("b={b}: mean {:.4e} in [{lo:.3e}, {hi:.3e}]", s.mean));
    }
    verdict(passed, parts.join(", "))
}

/// Pareto plan with `γ` chosen by the second-moment bound.
fn pareto_plan(b_max: f64) -> Result<BgPlan> {
    let approx = Arc::new(Approximation::new(Arc::new(ParetoMG1::new()))?);
    let safety = optimize_gamma(&approx, GAMMA_GRID, default_y_min(b_max), 1.0)?;
    BgPlan::new(approx, safety, SamplerConfig::default(), b_max)
}

fn pareto_estimate(_: &mut Context) -> Result<Verdict> {
    let plan = pareto_plan(1000.0)?;
    let s = bg_experiment(&plan, 1000.0, 10_000, SEED, workers())?;
    verdict(
        (3.10e-5..=3.20e-5).contains(&s.mean),
        format!(
            "gamma={}, a_*={}, mean {:.4e} (stderr {:.2e}, cv {:.3}, mean steps {:.0})",
            plan.safety.gamma, plan.safety.a_star, s.mean, s.stderr, s.cv, s.mean_steps
        ),
    )
}

fn ruin_walk() -> DiscreteWalkSpec {
    DiscreteWalkSpec::new(vec![-1.0, 1.0], vec![0.7, 0.3]).expect("valid walk")
}

fn lattice_summary(spec: &DiscreteWalkSpec, v: PositiveFn, b: f64, n: u64) -> Result<Summary> {
    let kernel = LatticeKernel::new(spec.clone(), v);
    run_replications(n, SEED, workers(), || kernel.clone(), |k, rng| run_kernel(k, 0.0, b, 1_000_000, rng))
}

fn zero_variance(_: &mut Context) -> Result<Verdict> {
    let spec = ruin_walk();
    let sol = Arc::new(exact_u_star(&spec, 40)?);
    let u = sol.clone();
    let v: PositiveFn = Arc::new(move |y: f64| if y > 0.0 { 1.0 } else { u.at(y) });
    let b = 5.0;
    // Exceeding 0 from -5 takes six net up-steps.
    let exact = (3.0f64 / 7.0).powi(6);
    let s = lattice_summary(&spec, v, b, 10_000)?;
    let variance = s.stderr * s.stderr * s.n as f64;
    verdict(
        rel(s.mean, exact) < 1e-13 && variance < 1e-24,
        format!("mean {:.16e} vs (3/7)^6 = {exact:.16e}, sample variance {variance:.2e}", s.mean),
    )
}

fn integrated_tail_unbiased(_: &mut Context) -> Result<Verdict> {
    let spec = ruin_walk();
    let approx = Arc::new(Approximation::new(Arc::new(DiscreteLattice::new(
        spec.values().to_vec(),
        spec.probs().to_vec(),
    )?))?);
    let sol = exact_u_star(&spec, 20)?;
    let mut passed = true;
    let mut parts = Vec::new();
    for b in [3.0, 5.0, 8.0] {
        let a = approx.clone();
        let v: PositiveFn = Arc::new(move |y: f64| a.v(y));
        match lattice_summary(&spec, v, b, 100_000) {
            Ok(s) => {
                let z = (s.mean - sol.at(-b)) / s.stderr;
                passed &= z.abs() <= 4.0;
                parts.push(format!("b={b}: z={z:+.2}"));
            }
            Err(e) => {
                passed = false;
                parts.push(format!("b={b}: v(-{b})={:.1e}, {e}", approx.v(-b)));
            }
        }
    }
    verdict(passed, parts.join("; "))
}

fn lyapunov_bound(ctx: &mut Context) -> Result<Verdict> {
    let cert = &run_suite(&["certificate"], &SuiteOptions::default())?[0];
    let mut passed = cert.passed;
    let mut parts = vec![format!("lattice: {}", cert.detail)];
    let safety = ctx.weibull_plan.safety.clone();
    for b in [10.0, 50.0, 250.0] {
        let s = ctx.weibull_at(b)?;
        let bound = safety.second_moment_bound(&ctx.weibull, b);
        let slack = 1.0 + 5.0 * s.second_moment_stderr / s.second_moment;
        passed &= s.second_moment <= bound * slack;
        parts.push(format!("b={b}: E R^2 {:.3e} <= {:.3e}", s.second_moment, bound * slack));
    }
    verdict(passed, parts.join("; "))
}

fn siegmund_light_tail(_: &mut Context) -> Result<Verdict> {
    let model = ExpDiff::new(1.0, 0.5)?;
    let theta = solve_theta_star(&model)?;
    let b = 10.0;
    let s = siegmund_experiment(&model, b, 20_000, SEED, workers())?;
    // M has an atom at 0 and an exponential tail of rate 1 - 0.5 with mass 0.5.
    let exact = 0.5 * (-5.0f64).exp();
    let z = (s.mean - exact) / s.stderr;
    let bound = (-2.0 * theta * b).exp();
    verdict(
        (theta - 0.5).abs() <= 1e-12 && z.abs() <= 3.0 && s.second_moment <= bound,
        format!(
            "theta*={theta:.15}, mean {:.5e} vs {exact:.5e} (z={z:+.2}), E R^2 {:.3e} <= {bound:.3e}",
            s.mean, s.second_moment
        ),
    )
}

fn complexity(ctx: &mut Context) -> Result<Verdict> {
    let x = COMPLEXITY_LEVELS.to_vec();
    let mut passed = true;
    let mut parts = Vec::new();
    let weibull = &ctx.weibull_plan;
    let pareto = pareto_plan(800.0)?;
    for (label, plan) in [("weibull", weibull), ("pareto", &pareto)] {
        let mut steps = Vec::new();
        for &b in &COMPLEXITY_LEVELS {
            steps.push(bg_experiment(plan, b, 10_000, SEED, workers())?.mean_steps);
        }
        let fit = linear_fit(&x, &steps);
        passed &= fit.r_squared > 0.95;
        let shown: Vec<String> = steps.iter().map(|s| format!("{s:.1}")).collect();
        parts.push(format!("{label} steps [{}] R^2={:.4}", shown.join(", "), fit.r_squared));
    }
    let grid = [1.0, 3.0, 10.0, 30.0, 100.0, 300.0, 1000.0, 3000.0, 10_000.0];
    let mut lowest = f64::INFINITY;
    for (model, scheme) in [(ModelSpec::WeibullDetArrival, SchemeChoice::Stratified), (ModelSpec::ParetoMG1, SchemeChoice::RegVar)] {
        let config = SamplerConfig {
            scheme,
            ..SamplerConfig::default()
        };
        let plan = sampler_plan(&model, config, 10_000.0)?;
        for &beta in &grid {
            lowest = lowest.min(plan.acceptance_probability(beta)?);
        }
    }
    for (_, c) in ctx.sampler_checks.iter().filter(|(_, c)| c.scheme != "naive") {
        lowest = lowest.min(c.acceptance_rate);
    }
    passed &= lowest >= ACCEPTANCE_FLOOR;
    parts.push(format!("lowest specialized acceptance {lowest:.3}"));
    verdict(passed, parts.join("; "))
}

fn sampler_fit(ctx: &mut Context) -> Result<Verdict> {
    let mut passed = true;
    let mut parts = Vec::new();
    for case in default_sampler_cases() {
        for c in run_sampler_case(&case, 100_000, SEED, 10)? {
            passed &= c.ks_p_value > 0.01;
            parts.push(format!("{} {} beta={}: p={:.3}", case.model.name(), c.scheme, c.beta, c.ks_p_value));
            ctx.sampler_checks.push((case.model.name(), c));
        }
    }
    verdict(passed, parts.join(", "))
}

type Check = fn(&mut Context) -> Result<Verdict>;

#[test]
fn acceptance_criteria() {
    let mut ctx = Context::new().expect("Weibull plan");
    // Sampler checks run before the complexity criterion, which reuses their
    // acceptance rates.
    let order: [(u32, &str, Check); 11] = [
        (1, "Weibull v against tabulated values", weibull_v_values),
        (2, "Pareto v against tabulated values", pareto_v_values),
        (3, "Weibull estimate at b = 10", weibull_low_level),
        (4, "Weibull estimates at b = 250, 500", weibull_high_levels),
        (5, "Pareto estimate at b = 1000", pareto_estimate),
        (6, "zero-variance lattice run", zero_variance),
        (7, "integrated-tail v on the lattice is unbiased", integrated_tail_unbiased),
        (8, "second-moment certificate and bound", lyapunov_bound),
        (9, "tilted estimator for exponential differences", siegmund_light_tail),
        (11, "sampler goodness of fit", sampler_fit),
        (10, "steps grow linearly in b; acceptance floor", complexity),
    ];
    let mut results: Vec<(u32, &str, bool, String)> = Vec::new();
    for (id, name, check) in order {
        let (passed, detail) = match check(&mut ctx) {
            Ok(v) => (v.passed, v.detail),
            Err(e) => (false, format!("error: {e}")),
        };
        report(&format!("criterion {id:>2} {name}: {} {detail}", if passed { "PASS" } else { "FAIL" }));
        results.push((id, name, passed, detail));
    }

    let opts = SuiteOptions {
        workers: workers(),
        ..SuiteOptions::default()
    };
    for o in run_suite(&["unbiased", "second_moment"], &opts).expect("lattice suite") {
        report(&format!(
            "INFO lattice {} with an exponential v: {} {}",
            o.name,
            if o.passed { "PASS" } else { "FAIL" },
            o.detail
        ));
        assert!(o.passed, "{}: {}", o.name, o.detail);
    }

    let failed: Vec<String> = results
        .iter()
        .filter(|(id, _, passed, _)| !passed && !KNOWN_UNATTAINABLE.contains(id))
        .map(|(id, name, _, detail)| format!("{id} {name}: {detail}"))
        .collect();
    assert!(failed.is_empty(), "failed criteria:\n{}", failed.join("\n"));
}
