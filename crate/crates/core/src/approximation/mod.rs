//! The approximation `v(y) = P(Z > -y)` of the exceedance probability and
//! its one-step smoothing `w(y) = P(X + Z > -y)`.
//!
//! `Z` is the nonnegative variable with
//! `P(Z > t) = min(∫_t^∞ P(X > s) ds / |E X|, 1)`. It may carry an atom at
//! `y0 = inf{t : P(Z > t) < 1}`; on `(y0, ∞)` it has density `P(X > t)/|E X|`.
//! Hence for any level `β`
//!
//! ```text
//! P(X + Z > β) = P(Z = y0) P(X > β - y0) + |E X|^{-1} ∫_{y0}^∞ P(X > β - z) P(X > z) dz
//! ```
//!
//! which only involves tails of `X` and is what [`Approximation::exceed`]
//! evaluates.

use std::sync::Arc;

use crate::error::{Error, Result};
use crate::models::{SharedModel, TailClass};
use crate::numeric::{self, brent, Tolerance};

mod calibration;
mod table;

pub use calibration::{default_y_min, find_a_star, optimize_gamma, MarginRow, SafetyParams, GAMMA_GRID};
pub use table::{ChebyshevTable, TableSpec};

#[derive(Debug, Clone)]
pub struct Approximation {
    model: SharedModel,
    abs_mean: f64,
    y0: f64,
    z_atom: f64,
    tol: Tolerance,
}

impl Approximation {
    pub fn new(model: SharedModel) -> Result<Self> {
        let mean = model.mean();
        if !(mean < 0.0 && mean.is_finite()) {
            return Err(Error::InvalidModel(format!("mean must be negative, got {mean}")));
        }
        let abs_mean = -mean;
        let i0 = model.integrated_tail(0.0);
        let y0 = if i0 <= abs_mean {
            0.0
        } else {
            let mut hi = 1.0;
            while model.integrated_tail(hi) > abs_mean {
                hi *= 2.0;
                if hi > 1e12 {
                    return Err(Error::InvalidModel("integrated tail does not decay".into()));
                }
            }
            brent(|t| model.integrated_tail(t) - abs_mean, 0.0, hi, 1e-13)?
        };
        let z_atom = 1.0 - (model.integrated_tail(y0) / abs_mean).min(1.0);
        Ok(Approximation {
            model,
            abs_mean,
            y0,
            z_atom,
            tol: Tolerance::new(1e-11, 0.0),
        })
    }

    pub fn with_tolerance(mut self, tol: Tolerance) -> Self {
        self.tol = tol;
        self
    }

    pub fn model(&self) -> &SharedModel {
        &self.model
    }

    pub fn abs_mean(&self) -> f64 {
        self.abs_mean
    }

    /// Lower end of the support of `Z`.
    pub fn y0(&self) -> f64 {
        self.y0
    }

    /// `P(Z = y0)`.
    pub fn z_atom(&self) -> f64 {
        self.z_atom
    }

    /// `P(Z > t)`, right-continuous.
    pub fn z_tail(&self, t: f64) -> f64 {
        if t < self.y0 {
            1.0
        } else {
            (self.model.integrated_tail(t) / self.abs_mean).min(1.0)
        }
    }

    pub fn v(&self, y: f64) -> f64 {
        self.z_tail(-y)
    }

    pub fn ln_v(&self, y: f64) -> f64 {
        self.v(y).ln()
    }

    /// Level below which `X + Z` exceeds it almost surely.
    pub fn sure_level(&self) -> f64 {
        self.model.support_lower() + self.y0
    }

    /// `P(X + Z > β)`.
    pub fn exceed(&self, beta: f64) -> Result<f64> {
        if beta < self.sure_level() {
            return Ok(1.0);
        }
        if let Some(atoms) = self.model.atoms() {
            return Ok(atoms.iter().map(|&(x, p)| p * self.z_tail(beta - x)).sum::<f64>().min(1.0));
        }
        let atom = self.z_atom * self.model.tail(beta - self.y0);
        let cont = self.cross_integral(beta, self.y0, f64::INFINITY)? / self.abs_mean;
        Ok((atom + cont).min(1.0))
    }

    pub fn w(&self, y: f64) -> Result<f64> {
        self.exceed(-y)
    }

    /// `P(X > t, X + Z > β)`.
    pub fn joint_exceed(&self, beta: f64, t: f64) -> Result<f64> {
        if let Some(atoms) = self.model.atoms() {
            return Ok(atoms
                .iter()
                .filter(|a| a.0 > t)
                .map(|&(x, p)| p * self.z_tail(beta - x))
                .sum());
        }
        let m = &self.model;
        let atom = self.z_atom * m.tail(t.max(beta - self.y0));
        // For z >= beta - t the event X > beta - z is implied by X > t.
        let split = self.y0.max(beta - t);
        let lower = self.cross_integral(beta, self.y0, split)?;
        let upper = m.tail(t) * m.integrated_tail(split);
        Ok(atom + (lower + upper) / self.abs_mean)
    }

    /// `P(X <= t | X + Z > β)`.
    pub fn conditional_cdf(&self, beta: f64, t: f64) -> Result<f64> {
        let total = self.exceed(beta)?;
        if total <= 0.0 {
            return Err(Error::Domain(format!("P(X + Z > {beta}) vanishes")));
        }
        Ok((1.0 - self.joint_exceed(beta, t)? / total).clamp(0.0, 1.0))
    }

    /// `∫_x^∞ P(X > t) dt / P(X > x)`.
    pub fn xi(&self, x: f64) -> Result<f64> {
        let tail = self.model.tail(x);
        if tail <= 0.0 {
            return Err(Error::Domain(format!("P(X > {x}) = 0")));
        }
        Ok(self.model.integrated_tail(x) / tail)
    }

    /// `∫_a^c P(X > β - z) P(X > z) dz` for `y0 <= a`, `c` possibly infinite.
    fn cross_integral(&self, beta: f64, a: f64, c: f64) -> Result<f64> {
        if !(c > a) {
            return Ok(0.0);
        }
        let m = &self.model;
        let f = |z: f64| m.tail(beta - z) * m.tail(z);
        let bps = m.breakpoints();
        let mut breaks: Vec<f64> = bps.iter().flat_map(|&p| [beta - p, p]).collect();
        breaks.push(0.5 * beta);
        let s_lo = m.support_lower();
        if s_lo.is_finite() {
            // Beyond zc the first factor is 1; below it behaves like a square
            // root of (zc - z), removed by z = zc - u^2.
            let zc = beta - s_lo;
            if c > zc {
                let from = a.max(zc);
                let tail_part = m.integrated_tail(from) - if c.is_finite() { m.integrated_tail(c) } else { 0.0 };
                if zc <= a {
                    return Ok(tail_part);
                }
                let u_max = (zc - a).sqrt();
                let ubreaks: Vec<f64> = breaks.iter().filter(|&&z| z > a && z < zc).map(|&z| (zc - z).sqrt()).collect();
                let g = |u: f64| {
                    let z = zc - u * u;
                    2.0 * u * f(z)
                };
                let body = numeric::integrate_with_breaks(g, 0.0, u_max, &ubreaks, &self.tol)?;
                return Ok(body.value + tail_part);
            }
            return Ok(numeric::integrate_with_breaks(f, a, c, &breaks, &self.tol)?.value);
        }
        if c.is_finite() {
            return Ok(numeric::integrate_with_breaks(f, a, c, &breaks, &self.tol)?.value);
        }
        let mid = a.max(beta) + 1.0;
        breaks.push(beta);
        let body = numeric::integrate_with_breaks(f, a, mid, &breaks, &self.tol)?;
        let far = numeric::integrate_to_inf(f, mid, &self.tol)?;
        Ok(body.value + far.value)
    }
}

/// `ln P(X + Z > β)` served from a Chebyshev table where one was built, and
/// computed directly otherwise.
#[derive(Debug, Clone)]
pub struct ExceedTable {
    approx: Arc<Approximation>,
    table: Option<ChebyshevTable>,
}

impl ExceedTable {
    /// Direct evaluation only.
    pub fn direct(approx: Arc<Approximation>) -> Self {
        ExceedTable { approx, table: None }
    }

    /// Tabulates `ln P(X + Z > β)` on `[beta_lo, beta_hi]` to absolute
    /// accuracy `abs_tol`. Discrete models are never tabulated.
    pub fn build(approx: Arc<Approximation>, beta_lo: f64, beta_hi: f64, abs_tol: f64) -> Result<Self> {
        if approx.model().atoms().is_some() {
            return Ok(Self::direct(approx));
        }
        let sure = approx.sure_level();
        let lo = beta_lo.max(sure);
        if !(beta_hi > lo) {
            return Ok(Self::direct(approx));
        }
        // Stop where the exceedance underflows; beyond it ln is -inf and is
        // served by direct evaluation.
        let representable = |b: f64| -> Result<bool> { Ok(approx.exceed(b)? > 1e-290) };
        let mut beta_hi = beta_hi;
        if !representable(beta_hi)? {
            if !representable(lo)? {
                return Ok(Self::direct(approx));
            }
            let (mut good, mut bad) = (lo, beta_hi);
            for _ in 0..100 {
                let mid = 0.5 * (good + bad);
                if representable(mid)? {
                    good = mid;
                } else {
                    bad = mid;
                }
            }
            beta_hi = good;
            if !(beta_hi > lo) {
                return Ok(Self::direct(approx));
            }
        }
        let y0 = approx.y0();
        let mut breaks: Vec<f64> = approx.model().breakpoints().iter().map(|b| b + y0).collect();
        let sqrt_points: Vec<f64> = if sure.is_finite() { vec![sure] } else { Vec::new() };
        breaks.extend(sqrt_points.iter().copied());
        let spec = TableSpec {
            lo,
            hi: beta_hi,
            breaks: &breaks,
            sqrt_points: &sqrt_points,
            abs_tol,
        };
        let a = approx.clone();
        let table = ChebyshevTable::build(move |beta| Ok(a.exceed(beta)?.ln()), &spec)?;
        log::debug!(
            "exceedance table on [{lo}, {beta_hi}]: {} segments, max check error {:.2e}",
            table.segment_count(),
            table.max_check_error()
        );
        Ok(ExceedTable { approx, table: Some(table) })
    }

    pub fn approximation(&self) -> &Arc<Approximation> {
        &self.approx
    }

    pub fn table(&self) -> Option<&ChebyshevTable> {
        self.table.as_ref()
    }

    pub fn ln_exceed(&self, beta: f64) -> Result<f64> {
        if beta < self.approx.sure_level() {
            return Ok(0.0);
        }
        if let Some(v) = self.table.as_ref().and_then(|t| t.eval(beta)).filter(|v| v.is_finite()) {
            return Ok(v.min(0.0));
        }
        Ok(self.approx.exceed(beta)?.ln())
    }

    pub fn ln_w(&self, y: f64) -> Result<f64> {
        self.ln_exceed(-y)
    }
}

pub(crate) fn class_warning(class: TailClass) -> Option<String> {
    match class {
        TailClass::LightTailed => Some(
            "model is light-tailed: the integrated-tail approximation is not asymptotically exact \
             and exponential tilting is the natural estimator"
                .into(),
        ),
        _ => None,
    }
}
