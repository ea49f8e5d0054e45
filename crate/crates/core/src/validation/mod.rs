//! Exact oracles for walks on a lattice and inequality checkers for
//! second-moment certificates.
//!
//! Positions are multiples of the lattice span. Levels `y <= 0` are interior;
//! the walk is absorbed (counted as a success) once it exceeds 0.

mod kernel;
mod suite;

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

pub use kernel::{bg_weight, LatticeKernel, PositiveFn};
pub use suite::{
    calibrated_jump_walk, four_point_walk, JUMP_WALK_GAMMA, jump_walk, ruin_walk, run_suite, CalibratedJumpWalk, CheckOutcome, SuiteOptions,
    CHECK_NAMES,
};

/// Increment law with finite support on a lattice `{k h}`.
#[derive(Debug, Clone, PartialEq)]
pub struct DiscreteWalkSpec {
    values: Vec<f64>,
    probs: Vec<f64>,
    steps: Vec<i64>,
    span: f64,
}

fn detect_span(values: &[f64]) -> Option<f64> {
    for k in 0..=6 {
        let scale = 10f64.powi(k);
        let scaled: Vec<f64> = values.iter().map(|v| v * scale).collect();
        if scaled.iter().all(|s| (s - s.round()).abs() < 1e-9 * s.abs().max(1.0)) {
            let g = scaled.iter().fold(0i64, |g, s| gcd(g, s.round().abs() as i64));
            if g > 0 {
                return Some(g as f64 / scale);
            }
        }
    }
    None
}

fn gcd(a: i64, b: i64) -> i64 {
    if b == 0 {
        a
    } else {
        gcd(b, a % b)
    }
}

impl DiscreteWalkSpec {
    pub fn new(values: Vec<f64>, probs: Vec<f64>) -> Result<Self> {
        if values.is_empty() || values.len() != probs.len() {
            return Err(Error::InvalidModel("support and probabilities must be nonempty and of equal length".into()));
        }
        if probs.iter().any(|p| !(*p >= 0.0)) || values.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidModel("probabilities must be nonnegative and support finite".into()));
        }
        let total: f64 = probs.iter().sum();
        if (total - 1.0).abs() > 1e-12 {
            return Err(Error::InvalidModel(format!("probabilities sum to {total}, not 1")));
        }
        let mean: f64 = values.iter().zip(&probs).map(|(v, p)| v * p).sum();
        if !(mean < 0.0) {
            return Err(Error::InvalidModel(format!("mean increment must be negative, got {mean}")));
        }
        let span = detect_span(&values)
            .ok_or_else(|| Error::UnsupportedInstance("support does not lie on a common lattice".into()))?;
        let steps = values.iter().map(|v| (v / span).round() as i64).collect();
        Ok(DiscreteWalkSpec {
            values,
            probs,
            steps,
            span,
        })
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    pub fn span(&self) -> f64 {
        self.span
    }

    pub fn mean(&self) -> f64 {
        self.values.iter().zip(&self.probs).map(|(v, p)| v * p).sum()
    }

    /// Position of lattice level `k`.
    pub fn position(&self, level: i64) -> f64 {
        level as f64 * self.span
    }

    /// Lattice level of position `y`, if `y` lies on the lattice.
    pub fn level(&self, y: f64) -> Option<i64> {
        let k = (y / self.span).round();
        ((y - k * self.span).abs() < 1e-9 * self.span.max(y.abs())).then_some(k as i64)
    }

    fn transitions(&self) -> impl Iterator<Item = (i64, f64)> + '_ {
        self.steps.iter().copied().zip(self.probs.iter().copied())
    }
}

/// Exceedance probabilities `P(max_n S_n > 0 | S_0 = y)` on levels `-L..=0`.
#[derive(Debug, Clone, PartialEq)]
pub struct ExactSolution {
    span: f64,
    depth: i64,
    /// Indexed by `level + depth`.
    pub u_star: Vec<f64>,
    /// Depth of the truncated system the values were taken from.
    pub solved_depth: i64,
}

impl ExactSolution {
    pub fn depth(&self) -> i64 {
        self.depth
    }

    pub fn levels(&self) -> std::ops::RangeInclusive<i64> {
        -self.depth..=0
    }

    pub fn at_level(&self, level: i64) -> f64 {
        if level > 0 {
            1.0
        } else if level < -self.depth {
            0.0
        } else {
            self.u_star[(level + self.depth) as usize]
        }
    }

    /// Value at position `y`; positions off the lattice are rounded down.
    pub fn at(&self, y: f64) -> f64 {
        if y > 0.0 {
            return 1.0;
        }
        self.at_level((y / self.span + 1e-9).floor() as i64)
    }
}

const MAX_DEPTH: i64 = 4096;

/// Solves the truncated system on `-depth..=0`: `u = 1` above 0, `u = 0`
/// below `-depth` and on levels where `alive` is false.
fn solve_truncated(spec: &DiscreteWalkSpec, depth: i64, alive: &dyn Fn(i64) -> bool) -> Result<Vec<f64>> {
    let n = (depth + 1) as usize;
    let mut a = DMatrix::<f64>::identity(n, n);
    let mut rhs = DVector::<f64>::zeros(n);
    for i in 0..n {
        let k = i as i64 - depth;
        if !alive(k) {
            continue;
        }
        for (d, p) in spec.transitions() {
            let z = k + d;
            if z > 0 {
                rhs[i] += p;
            } else if z >= -depth && alive(z) {
                a[(i, (z + depth) as usize)] -= p;
            }
        }
    }
    let sol = a
        .lu()
        .solve(&rhs)
        .ok_or_else(|| Error::NumericFailure {
            what: format!("lattice linear system of size {n}"),
            achieved: f64::INFINITY,
            target: 0.0,
        })?;
    Ok(sol.iter().map(|x| x.clamp(0.0, 1.0)).collect())
}

fn stabilized(spec: &DiscreteWalkSpec, levels: i64, alive: &dyn Fn(i64) -> bool) -> Result<ExactSolution> {
    if levels < 0 {
        return Err(Error::Domain(format!("number of levels must be nonnegative, got {levels}")));
    }
    let mut depth = (2 * levels).max(32);
    let mut prev = solve_truncated(spec, depth, alive)?;
    loop {
        let next_depth = 2 * depth;
        if next_depth > MAX_DEPTH {
            return Err(Error::NumericFailure {
                what: format!("lattice solution did not stabilize within depth {MAX_DEPTH}"),
                achieved: f64::NAN,
                target: 1e-10,
            });
        }
        let next = solve_truncated(spec, next_depth, alive)?;
        let top = next[next_depth as usize];
        let bottom = next[0];
        let mut change: f64 = 0.0;
        for k in -levels..=0 {
            let a = prev[(k + depth) as usize];
            let b = next[(k + next_depth) as usize];
            if b > 0.0 {
                change = change.max((a - b).abs() / b);
            }
        }
        let deep_enough = bottom <= 1e-12 * top || top == 0.0;
        if deep_enough && change <= 1e-10 {
            let u_star = next[(next_depth - levels) as usize..].to_vec();
            return Ok(ExactSolution {
                span: spec.span,
                depth: levels,
                u_star,
                solved_depth: next_depth,
            });
        }
        depth = next_depth;
        prev = next;
    }
}

/// `u*` on levels `-levels..=0` by a direct linear solve, doubling the
/// truncation depth until the requested values stabilize.
pub fn exact_u_star(spec: &DiscreteWalkSpec, levels: i64) -> Result<ExactSolution> {
    stabilized(spec, levels, &|_| true)
}

/// Probability of exceeding 0 before entering a level where `alive` is false.
pub fn exact_killed(spec: &DiscreteWalkSpec, levels: i64, alive: &dyn Fn(i64) -> bool) -> Result<ExactSolution> {
    stabilized(spec, levels, alive)
}

/// `u*` on `-depth..=0` by value iteration from 0, which increases to the
/// minimal solution of the truncated system. Stops once no level changes by
/// more than `tol` relative.
pub fn value_iteration(spec: &DiscreteWalkSpec, depth: i64, tol: f64, max_iter: usize) -> Result<Vec<f64>> {
    let n = (depth + 1) as usize;
    let mut u = vec![0.0; n];
    for _ in 0..max_iter {
        let mut change: f64 = 0.0;
        // Relative change, so that deep levels converge as well.
        // Sweeping from the top uses freshly updated neighbours.
        for i in (0..n).rev() {
            let k = i as i64 - depth;
            let mut s = 0.0;
            for (d, p) in spec.transitions() {
                let z = k + d;
                if z > 0 {
                    s += p;
                } else if z >= -depth {
                    s += p * u[(z + depth) as usize];
                }
            }
            if s > 0.0 {
                change = change.max((s - u[i]).abs() / s);
            }
            u[i] = s;
        }
        if change <= tol {
            return Ok(u);
        }
    }
    Err(Error::NumericFailure {
        what: "value iteration".into(),
        achieved: f64::NAN,
        target: tol,
    })
}

/// Largest `|u(y) - Σ p(z - y) u(z)|` over interior levels `-depth+span..=0`
/// whose transitions stay inside the solved range.
pub fn harmonic_residual(spec: &DiscreteWalkSpec, sol: &ExactSolution) -> f64 {
    let reach = spec.steps.iter().map(|d| (-d).max(0)).max().unwrap_or(0);
    let mut worst: f64 = 0.0;
    for k in (-sol.depth + reach)..=0 {
        let s: f64 = spec.transitions().map(|(d, p)| p * sol.at_level(k + d)).sum();
        worst = worst.max((s - sol.at_level(k)).abs());
    }
    worst
}

/// Second moment of a likelihood-ratio estimator with one-step weight
/// `r(y, z)` (a weight of 0 marks a transition the sampler never makes).
#[derive(Debug, Clone, PartialEq)]
pub struct SecondMoment {
    span: f64,
    depth: i64,
    pub values: Vec<f64>,
    pub iterations: usize,
    /// Geometric growth rate of the series terms when it failed to converge.
    pub divergence: Option<f64>,
}

impl SecondMoment {
    pub fn at(&self, y: f64) -> f64 {
        let k = (y / self.span + 1e-9).floor() as i64;
        if k < -self.depth || k > 0 {
            return f64::NAN;
        }
        self.values[(k + self.depth) as usize]
    }
}

/// `s* = Σ_n K^n η` on levels `-depth..=0` with `K(y, z) = r(y, z) p(z - y)`
/// for interior `z` and `η(y) = Σ_{z > 0} r(y, z) p(z - y)`.
pub fn exact_second_moment(
    spec: &DiscreteWalkSpec,
    r: &dyn Fn(f64, f64) -> f64,
    depth: i64,
) -> Result<SecondMoment> {
    let n = (depth + 1) as usize;
    let mut eta = vec![0.0; n];
    // Sparse rows of K.
    let mut rows: Vec<Vec<(usize, f64)>> = vec![Vec::new(); n];
    for i in 0..n {
        let k = i as i64 - depth;
        let y = spec.position(k);
        for (d, p) in spec.transitions() {
            let z = k + d;
            let weight = r(y, spec.position(z));
            if weight == 0.0 {
                continue;
            }
            if z > 0 {
                eta[i] += weight * p;
            } else if z >= -depth {
                rows[i].push(((z + depth) as usize, weight * p));
            }
        }
    }
    let mut sum = eta.clone();
    let mut term = eta;
    let mut norms = vec![term.iter().fold(0.0f64, |m, x| m.max(x.abs()))];
    let max_iter = 2_000_000;
    for it in 1..=max_iter {
        let next: Vec<f64> = rows.iter().map(|row| row.iter().map(|&(j, k)| k * term[j]).sum()).collect();
        term = next;
        let norm = term.iter().fold(0.0f64, |m, x| m.max(x.abs()));
        let mut converged = true;
        for (s, t) in sum.iter_mut().zip(&term) {
            converged &= t.abs() <= 1e-14 * s.abs();
            *s += t;
        }
        norms.push(norm);
        if converged {
            return Ok(SecondMoment {
                span: spec.span,
                depth,
                values: sum,
                iterations: it,
                divergence: None,
            });
        }
        if it >= 200 && it % 100 == 0 {
            let half = norms[it / 2];
            if norm > half && half > 0.0 {
                let growth = (norm / half).powf(1.0 / (it - it / 2) as f64);
                log::warn!("second-moment series is not converging (term growth rate {growth:.6} per step); the importance sampler is unstable");
                return Ok(SecondMoment {
                    span: spec.span,
                    depth,
                    values: sum,
                    iterations: it,
                    divergence: Some(growth),
                });
            }
        }
    }
    Err(Error::NumericFailure {
        what: "second-moment series".into(),
        achieved: *norms.last().unwrap_or(&f64::NAN),
        target: 1e-14,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct LyapunovReport {
    /// `(y, (K h)(y) - h(y) + η(y))` per grid point.
    pub rows: Vec<(f64, f64)>,
    pub max_margin: f64,
}

impl LyapunovReport {
    pub fn holds(&self) -> bool {
        self.max_margin <= 0.0
    }
}

/// Evaluates the drift inequality `(K h)(y) <= h(y) - η(y)` at each grid point
/// by exact summation over the support.
pub fn lyapunov_check(
    spec: &DiscreteWalkSpec,
    h: &dyn Fn(f64) -> f64,
    r: &dyn Fn(f64, f64) -> f64,
    grid: &[f64],
) -> LyapunovReport {
    let mut rows = Vec::with_capacity(grid.len());
    let mut max_margin = f64::NEG_INFINITY;
    for &y in grid {
        let mut kh = 0.0;
        let mut eta = 0.0;
        for (&x, &p) in spec.values.iter().zip(&spec.probs) {
            let z = y + x;
            let weight = r(y, z);
            if weight == 0.0 {
                continue;
            }
            if z > 0.0 {
                eta += weight * p;
            } else {
                kh += weight * p * h(z);
            }
        }
        let margin = kh - h(y) + eta;
        max_margin = max_margin.max(margin);
        rows.push((y, margin));
    }
    LyapunovReport { rows, max_margin }
}

/// Drift check of the bound `s*(y) <= (1-γ)^{-1} κ^{-2} v(y + a)^2` for the
/// kernel proportional to `v(· + a)`, on the levels where `v(y + a) > 0`.
/// Returns the report and the bound as a function.
pub fn shifted_certificate<'a>(
    spec: &'a DiscreteWalkSpec,
    v: &'a dyn Fn(f64) -> f64,
    gamma: f64,
    a_star: f64,
    kappa: f64,
    depth: i64,
) -> (LyapunovReport, impl Fn(f64) -> f64 + 'a) {
    let bound = move |y: f64| v(y + a_star).powi(2) / ((1.0 - gamma) * kappa * kappa);
    let r = move |y: f64, z: f64| bg_weight(spec, v, a_star, y, z);
    let grid: Vec<f64> = (-depth..=0)
        .map(|k| spec.position(k))
        .filter(|&y| v(y + a_star) > 0.0)
        .collect();
    let report = lyapunov_check(spec, &bound, &r, &grid);
    (report, bound)
}
