//! Replication-level estimators of `P(max_n S_n > b)` and the parallel
//! replication harness.
//!
//! The walk starts at `S_0 = -b` and the target is the probability that it
//! ever exceeds 0.

use std::sync::Arc;
use std::time::Instant;

use rayon::prelude::*;

use crate::approximation::{Approximation, ExceedTable, SafetyParams};
use crate::error::{Error, Result};
use crate::models::IncrementModel;
use crate::numeric::{brent, KahanSum};
use crate::rng::CountingRng;
use crate::sampler::{ConditionalSampler, SamplerConfig, SamplerPlan, SamplerStats};
use crate::stats::mean_var;

pub const DEFAULT_STEP_CAP: u64 = 100_000_000;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RunResult {
    /// Log of the likelihood ratio; meaningful only when `crossed`.
    pub log_r: f64,
    pub crossed: bool,
    pub steps: u64,
    pub variates: u64,
}

impl RunResult {
    pub fn estimate(&self) -> f64 {
        if self.crossed {
            self.log_r.exp()
        } else {
            0.0
        }
    }
}

/// One step of a state-dependent change of measure.
pub trait Kernel {
    /// `ln v(y)`.
    fn ln_v(&self, y: f64) -> f64;

    /// Draws the increment at level `β` and returns `(ln P(X + Z > β), x)`.
    fn step(&mut self, beta: f64, rng: &mut CountingRng) -> Result<(f64, f64)>;
}

/// Runs the importance-sampled walk from `-b` until it exceeds 0.
///
/// With the current position `y`, the increment is drawn at level
/// `β = -y - a_*` and the likelihood ratio is multiplied by
/// `w(y + a_*) / v(y + X + a_*)`.
pub fn run_kernel<K: Kernel + ?Sized>(
    kernel: &mut K,
    a_star: f64,
    b: f64,
    step_cap: u64,
    rng: &mut CountingRng,
) -> Result<RunResult> {
    let start = rng.consumed();
    let mut s = -b;
    let mut log_r = KahanSum::new();
    let mut steps = 0;
    while steps < step_cap {
        let y = s;
        let (ln_w, x) = kernel.step(-y - a_star, rng)?;
        s = y + x;
        log_r.add(ln_w - kernel.ln_v(s + a_star));
        steps += 1;
        if s > 0.0 {
            return Ok(RunResult {
                log_r: log_r.value(),
                crossed: true,
                steps,
                variates: rng.consumed() - start,
            });
        }
    }
    Err(Error::RunFailure(format!("walk from -{b} did not cross 0 within {step_cap} steps")))
}

/// Everything a replication of the heavy-tailed estimator needs, shared
/// read-only across workers.
#[derive(Debug, Clone)]
pub struct BgPlan {
    pub safety: SafetyParams,
    pub sampler: SamplerPlan,
    pub step_cap: u64,
}

impl BgPlan {
    /// Tabulates `ln w` over the levels a walk from `-b_max` is expected to
    /// visit and resolves the sampler scheme.
    pub fn new(approx: Arc<Approximation>, safety: SafetyParams, config: SamplerConfig, b_max: f64) -> Result<Self> {
        let beta_lo = -safety.a_star;
        // Under the sampler a regularly varying walk drifts down until one big
        // jump, so rare paths go very deep; direct quadrature there costs
        // about a millisecond per step.
        let beta_hi = (200.0 * (b_max + safety.a_star.abs()) + 1000.0).max(1e7);
        let exceed = Arc::new(ExceedTable::build(approx, beta_lo.min(0.0), beta_hi, 1e-10)?);
        let sampler = SamplerPlan::new(exceed, config, beta_hi)?;
        Ok(BgPlan {
            safety,
            sampler,
            step_cap: DEFAULT_STEP_CAP,
        })
    }

    pub fn approximation(&self) -> &Arc<Approximation> {
        self.sampler.approximation()
    }
}

pub struct BgKernel<'a> {
    approx: &'a Approximation,
    table: &'a ExceedTable,
    sampler: ConditionalSampler<'a>,
}

impl<'a> BgKernel<'a> {
    pub fn new(plan: &'a BgPlan) -> Self {
        BgKernel {
            approx: plan.approximation(),
            table: plan.sampler.exceed_table(),
            sampler: plan.sampler.sampler(),
        }
    }

    pub fn sampler_stats(&self) -> SamplerStats {
        self.sampler.stats()
    }
}

impl Kernel for BgKernel<'_> {
    fn ln_v(&self, y: f64) -> f64 {
        self.approx.ln_v(y)
    }

    fn step(&mut self, beta: f64, rng: &mut CountingRng) -> Result<(f64, f64)> {
        let ln_w = self.table.ln_exceed(beta)?;
        let x = self.sampler.sample_with_exceed(beta, ln_w.exp(), rng)?;
        Ok((ln_w, x))
    }
}

pub fn bg_replicate(kernel: &mut BgKernel<'_>, plan: &BgPlan, b: f64, rng: &mut CountingRng) -> Result<RunResult> {
    run_kernel(kernel, plan.safety.a_star, b, plan.step_cap, rng)
}

/// Positive root of `ln E[e^{θX}] = 0`.
pub fn solve_theta_star(model: &dyn IncrementModel) -> Result<f64> {
    let f = |t: f64| model.log_mgf(t);
    let not_light = || Error::NotLightTailed(format!("{} has no positive root of its log-mgf", model.name()));
    let mut lo = 1e-9;
    if !(f(lo) < 0.0) {
        return Err(not_light());
    }
    let mut hi = 1e-3;
    loop {
        let v = f(hi);
        if v.is_nan() {
            return Err(not_light());
        }
        if v.is_infinite() {
            // Pull back towards the last finite negative point.
            let mut inf = hi;
            let mut found = None;
            for _ in 0..200 {
                let mid = 0.5 * (lo + inf);
                let fm = f(mid);
                if fm.is_infinite() {
                    inf = mid;
                } else if fm > 0.0 {
                    found = Some(mid);
                    break;
                } else {
                    lo = mid;
                }
            }
            hi = found.ok_or_else(not_light)?;
            break;
        }
        if v > 0.0 {
            break;
        }
        lo = hi;
        hi *= 2.0;
        if hi > 1e6 {
            return Err(not_light());
        }
    }
    brent(f, lo, hi, 1e-15)
}

/// Exponentially tilted walk; `R = exp(-θ*(b + overshoot))`.
pub fn siegmund_replicate(
    model: &dyn IncrementModel,
    theta_star: f64,
    b: f64,
    step_cap: u64,
    rng: &mut CountingRng,
) -> Result<RunResult> {
    let start = rng.consumed();
    let mut s = -b;
    let mut steps = 0;
    while steps < step_cap {
        s += model.sample_tilted(theta_star, rng)?;
        steps += 1;
        if s > 0.0 {
            return Ok(RunResult {
                log_r: -theta_star * (b + s),
                crossed: true,
                steps,
                variates: rng.consumed() - start,
            });
        }
    }
    Err(Error::RunFailure(format!("tilted walk from -{b} did not cross 0 within {step_cap} steps")))
}

/// Default truncation for crude simulation: `ceil(20 b / |E X|)`.
pub fn default_crude_steps(model: &dyn IncrementModel, b: f64) -> u64 {
    (20.0 * b / model.mean().abs()).ceil().max(1.0) as u64
}

/// Plain simulation under the original law, truncated after `max_steps`.
pub fn crude_replicate(model: &dyn IncrementModel, b: f64, max_steps: u64, rng: &mut CountingRng) -> RunResult {
    let start = rng.consumed();
    let mut s = -b;
    for step in 1..=max_steps {
        s += model.sample(rng);
        if s > 0.0 {
            return RunResult {
                log_r: 0.0,
                crossed: true,
                steps: step,
                variates: rng.consumed() - start,
            };
        }
    }
    RunResult {
        log_r: f64::NEG_INFINITY,
        crossed: false,
        steps: max_steps,
        variates: rng.consumed() - start,
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Summary {
    pub n: u64,
    pub mean: f64,
    pub stderr: f64,
    /// Sample standard deviation over mean.
    pub cv: f64,
    pub ci95: (f64, f64),
    pub mean_steps: f64,
    pub mean_variates: f64,
    pub wall_time: f64,
    /// Sample mean of `R^2` and its standard error.
    pub second_moment: f64,
    pub second_moment_stderr: f64,
    pub sampler: SamplerStats,
}

impl Summary {
    pub fn from_runs(runs: &[RunResult], sampler: SamplerStats, wall_time: f64) -> Self {
        let n = runs.len();
        let r: Vec<f64> = runs.iter().map(RunResult::estimate).collect();
        let (mean, var) = mean_var(&r);
        let sq: Vec<f64> = r.iter().map(|x| x * x).collect();
        let (m2, var2) = mean_var(&sq);
        let nf = n as f64;
        let stderr = (var / nf).sqrt();
        let cv = if mean > 0.0 { var.sqrt() / mean } else { 0.0 };
        let mean_steps = runs.iter().map(|r| r.steps as f64).collect::<KahanSum>().value() / nf;
        let mean_variates = runs.iter().map(|r| r.variates as f64).collect::<KahanSum>().value() / nf;
        Summary {
            n: n as u64,
            mean,
            stderr,
            cv,
            ci95: (mean - 1.96 * stderr, mean + 1.96 * stderr),
            mean_steps,
            mean_variates,
            wall_time,
            second_moment: m2,
            second_moment_stderr: (var2 / nf).sqrt(),
            sampler,
        }
    }
}

/// Runs `n` replications of `replicate` on a pool of `workers` threads.
///
/// Replication `i` draws from its own stream seeded by
/// [`stream_seed(seed, i)`](crate::rng::stream_seed), and results are
/// aggregated in index order, so the summary does not depend on `workers`.
/// `init` builds per-worker state such as a sampler with its counters.
pub fn run_replications<S, I, F>(n: u64, seed: u64, workers: usize, init: I, replicate: F) -> Result<Summary>
where
    I: Fn() -> S + Sync + Send,
    F: Fn(&mut S, &mut CountingRng) -> Result<RunResult> + Sync + Send,
    S: WorkerStats,
{
    if n == 0 {
        return Err(Error::RunFailure("number of replications must be at least 1".into()));
    }
    let started = Instant::now();
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers.max(1))
        .build()
        .map_err(|e| Error::RunFailure(format!("thread pool: {e}")))?;
    let chunk = 256u64;
    let chunks: Vec<(u64, u64)> = (0..n).step_by(chunk as usize).map(|lo| (lo, (lo + chunk).min(n))).collect();
    let outcome: Vec<Result<(Vec<RunResult>, SamplerStats)>> = pool.install(|| {
        chunks
            .par_iter()
            .map(|&(lo, hi)| {
                let mut state = init();
                let mut out = Vec::with_capacity((hi - lo) as usize);
                for i in lo..hi {
                    let mut rng = CountingRng::for_replication(seed, i);
                    let run = replicate(&mut state, &mut rng).map_err(|e| Error::Replication {
                        index: i,
                        seed: rng.seed(),
                        source: Box::new(e),
                    })?;
                    out.push(run);
                }
                Ok((out, state.sampler_stats()))
            })
            .collect()
    });
    let mut runs = Vec::with_capacity(n as usize);
    let mut stats = SamplerStats::default();
    for part in outcome {
        let (r, s) = part?;
        runs.extend(r);
        stats.merge(&s);
    }
    Ok(Summary::from_runs(&runs, stats, started.elapsed().as_secs_f64()))
}

/// Per-worker state that may carry sampler counters.
pub trait WorkerStats {
    fn sampler_stats(&self) -> SamplerStats {
        SamplerStats::default()
    }
}

impl WorkerStats for () {}

impl WorkerStats for BgKernel<'_> {
    fn sampler_stats(&self) -> SamplerStats {
        self.sampler.stats()
    }
}

pub fn bg_experiment(plan: &BgPlan, b: f64, n: u64, seed: u64, workers: usize) -> Result<Summary> {
    run_replications(n, seed, workers, || BgKernel::new(plan), |k, rng| bg_replicate(k, plan, b, rng))
}

pub fn siegmund_experiment(model: &dyn IncrementModel, b: f64, n: u64, seed: u64, workers: usize) -> Result<Summary> {
    let theta = solve_theta_star(model)?;
    run_replications(n, seed, workers, || (), |_, rng| siegmund_replicate(model, theta, b, DEFAULT_STEP_CAP, rng))
}

pub fn crude_experiment(model: &dyn IncrementModel, b: f64, max_steps: u64, n: u64, seed: u64, workers: usize) -> Result<Summary> {
    run_replications(n, seed, workers, || (), |_, rng| Ok(crude_replicate(model, b, max_steps, rng)))
}
