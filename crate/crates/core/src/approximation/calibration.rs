//! Calibration of the safety shift `a_*`.
//!
//! For a given `γ ∈ (0, 1)` the shift must satisfy, for every `y <= a_*`,
//!
//! ```text
//! (v(y)^2 - w(y)^2) / (P(X > -y) w(y)) >= -γ
//! ```
//!
//! The check is carried out on a finite grid; `a_*` is the largest grid point
//! such that every grid point at or below it passes. Points with `v(y) = 0`
//! are never visited by the shifted sampler and are skipped.

use std::sync::Arc;

use crate::error::{Error, Result};

use super::{class_warning, Approximation, ExceedTable};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MarginRow {
    pub y: f64,
    pub v: f64,
    pub w: f64,
    pub tail: f64,
    pub margin: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SafetyParams {
    pub gamma: f64,
    pub a_star: f64,
    /// `v(a_*)`, the floor of `v(· + a_*)` on `[0, ∞)`.
    pub kappa: f64,
    pub verified_grid: Vec<MarginRow>,
    pub warnings: Vec<String>,
}

impl SafetyParams {
    /// Uses a caller-chosen shift without verifying the margin condition.
    /// Positive shifts are accepted as given and flagged.
    pub fn manual(approx: &Approximation, gamma: f64, a_star: f64) -> Result<Self> {
        check_gamma(gamma)?;
        if !a_star.is_finite() {
            return Err(Error::CalibrationFailure(format!("a_star must be finite, got {a_star}")));
        }
        let mut warnings = Vec::new();
        if a_star > 0.0 {
            let msg = format!("a_star = {a_star} is positive; the shift is normally taken in (-inf, 0]");
            log::warn!("{msg}");
            warnings.push(msg);
        }
        let kappa = approx.v(a_star);
        if !(kappa > 0.0) {
            return Err(Error::CalibrationFailure(format!("v(a_star) = {kappa} at a_star = {a_star}")));
        }
        Ok(SafetyParams {
            gamma,
            a_star,
            kappa,
            verified_grid: Vec::new(),
            warnings,
        })
    }

    /// `(1 - γ)^{-1} κ^{-2} v(-b + a_*)^2`, the bound on the second moment of
    /// the estimator started at `-b`.
    pub fn second_moment_bound(&self, approx: &Approximation, b: f64) -> f64 {
        let v = approx.v(-b + self.a_star);
        v * v * self.bound_constant()
    }

    /// `(1 - γ)^{-1} κ^{-2}`, the factor by which the second-moment bound
    /// exceeds `v(-b + a_*)^2`.
    pub fn bound_constant(&self) -> f64 {
        1.0 / ((1.0 - self.gamma) * self.kappa * self.kappa)
    }
}

/// Candidate values of `γ` for [`optimize_gamma`].
pub const GAMMA_GRID: &[f64] = &[0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9, 0.95, 0.99];

/// Calibrates the shift for every `γ` in `gammas` and keeps the one with the
/// smallest [`SafetyParams::bound_constant`]. Values of `γ` for which no
/// shift exists are skipped.
pub fn optimize_gamma(approx: &Arc<Approximation>, gammas: &[f64], y_min: f64, grid_step: f64) -> Result<SafetyParams> {
    let mut best: Option<SafetyParams> = None;
    let mut last_err = None;
    for &gamma in gammas {
        match find_a_star(approx, gamma, y_min, grid_step) {
            Ok(sp) => {
                log::info!("gamma = {gamma}: a_star = {}, bound constant {:.4e}", sp.a_star, sp.bound_constant());
                if best.as_ref().map_or(true, |b| sp.bound_constant() < b.bound_constant()) {
                    best = Some(sp);
                }
            }
            Err(e @ Error::CalibrationFailure(_)) => last_err = Some(e),
            Err(e) => return Err(e),
        }
    }
    best.ok_or_else(|| last_err.unwrap_or_else(|| Error::CalibrationFailure("no candidate gamma given".into())))
}

fn check_gamma(gamma: f64) -> Result<()> {
    if gamma > 0.0 && gamma < 1.0 {
        Ok(())
    } else {
        Err(Error::CalibrationFailure(format!("gamma must lie in (0, 1), got {gamma}")))
    }
}

/// Default depth of the verification grid for target level `b`.
pub fn default_y_min(b: f64) -> f64 {
    -(200f64.max(2.0 * b))
}

fn margin(v: f64, w: f64, tail: f64, gamma: f64) -> f64 {
    let num = v * v - w * w;
    if num == 0.0 {
        return gamma;
    }
    let den = tail * w;
    if den <= 0.0 {
        return if num > 0.0 { f64::INFINITY } else { f64::NEG_INFINITY };
    }
    num / den + gamma
}

pub fn find_a_star(approx: &Arc<Approximation>, gamma: f64, y_min: f64, grid_step: f64) -> Result<SafetyParams> {
    check_gamma(gamma)?;
    if !(y_min < 0.0 && y_min.is_finite()) {
        return Err(Error::CalibrationFailure(format!("y_min must be negative, got {y_min}")));
    }
    if !(grid_step > 0.0) {
        return Err(Error::CalibrationFailure(format!("grid_step must be positive, got {grid_step}")));
    }
    let v_deep = approx.v(y_min);
    if v_deep >= 1e-3 {
        return Err(Error::CalibrationFailure(format!(
            "v(y_min) = {v_deep:.3e} at y_min = {y_min}; choose a deeper y_min (v below 1e-3)"
        )));
    }
    let mut warnings = Vec::new();
    if let Some(w) = class_warning(approx.model().tail_class()) {
        log::warn!("{w}");
        warnings.push(w);
    }

    let table = ExceedTable::build(approx.clone(), 0.0, -y_min, 1e-10)?;
    let n = ((-y_min) / grid_step).round() as usize;
    let mut rows = Vec::with_capacity(n + 1);
    let mut a_star = None;
    let mut feasible = true;
    for k in 0..=n {
        // Walk upwards from y_min; the last point is exactly 0.
        let y = if k == n { 0.0 } else { y_min + k as f64 * grid_step };
        let v = approx.v(y);
        let w = table.ln_w(y)?.exp();
        let tail = approx.model().tail(-y);
        let m = margin(v, w, tail, gamma);
        if v == 0.0 {
            rows.push(MarginRow { y, v, w, tail, margin: m });
            continue;
        }
        if feasible && m >= 0.0 {
            a_star = Some(y);
        } else {
            feasible = false;
        }
        rows.push(MarginRow { y, v, w, tail, margin: m });
    }
    let a_star = a_star.ok_or_else(|| {
        Error::CalibrationFailure(format!(
            "margin condition fails at y_min = {y_min} (margin {:.3e}); try a deeper y_min or a larger gamma",
            rows[0].margin
        ))
    })?;
    let kappa = approx.v(a_star);
    Ok(SafetyParams {
        gamma,
        a_star,
        kappa,
        verified_grid: rows,
        warnings,
    })
}
