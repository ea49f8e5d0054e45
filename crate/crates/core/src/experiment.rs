//! Runs a parsed configuration: calibration, plan construction and one
//! summary per level.

use std::sync::Arc;

use crate::approximation::{default_y_min, find_a_star, optimize_gamma, Approximation, SafetyParams, GAMMA_GRID};
use crate::config::{CalibrationConfig, EstimatorKind, ExperimentConfig};
use crate::error::Result;
use crate::estimators::{bg_experiment, crude_experiment, default_crude_steps, siegmund_experiment, BgPlan, Summary};
use crate::report::SummaryRow;

/// Uses the configured shift if present, otherwise scans for one.
pub fn resolve_safety(approx: &Arc<Approximation>, cal: &CalibrationConfig, b_max: f64) -> Result<SafetyParams> {
    let y_min = cal.y_min.unwrap_or_else(|| default_y_min(b_max));
    match cal.a_star {
        Some(a) => SafetyParams::manual(approx, cal.gamma, a),
        None if cal.optimize_gamma => optimize_gamma(approx, GAMMA_GRID, y_min, cal.grid_step),
        None => find_a_star(approx, cal.gamma, y_min, cal.grid_step),
    }
}

#[derive(Debug, Clone)]
pub struct LevelResult {
    pub b: f64,
    pub summary: Summary,
    pub safety: Option<SafetyParams>,
}

/// Runs every configured level with the configured estimator.
pub fn run_experiment(cfg: &ExperimentConfig, workers: usize) -> Result<Vec<LevelResult>> {
    let model = cfg.model.build()?;
    let b_max = cfg.levels.iter().copied().fold(0.0, f64::max);
    match cfg.estimator {
        EstimatorKind::Bg => {
            let approx = Arc::new(Approximation::new(model)?);
            let safety = resolve_safety(&approx, &cfg.calibration, b_max)?;
            log::info!("using a_star = {} (kappa = {:.4e})", safety.a_star, safety.kappa);
            let plan = BgPlan::new(approx, safety.clone(), cfg.sampler.clone(), b_max)?;
            log::info!("sampler scheme: {:?}", plan.sampler.scheme());
            cfg.levels
                .iter()
                .map(|&b| {
                    Ok(LevelResult {
                        b,
                        summary: bg_experiment(&plan, b, cfg.n, cfg.seed, workers)?,
                        safety: Some(safety.clone()),
                    })
                })
                .collect()
        }
        EstimatorKind::Siegmund => cfg
            .levels
            .iter()
            .map(|&b| {
                Ok(LevelResult {
                    b,
                    summary: siegmund_experiment(model.as_ref(), b, cfg.n, cfg.seed, workers)?,
                    safety: None,
                })
            })
            .collect(),
        EstimatorKind::Crude => cfg
            .levels
            .iter()
            .map(|&b| {
                let steps = cfg.max_steps.unwrap_or_else(|| default_crude_steps(model.as_ref(), b));
                Ok(LevelResult {
                    b,
                    summary: crude_experiment(model.as_ref(), b, steps, cfg.n, cfg.seed, workers)?,
                    safety: None,
                })
            })
            .collect(),
    }
}

pub fn summary_rows(cfg: &ExperimentConfig, results: &[LevelResult]) -> Vec<SummaryRow> {
    results
        .iter()
        .map(|r| {
            SummaryRow::new(
                cfg.model.name(),
                &cfg.estimator.to_string(),
                r.b,
                r.safety.as_ref().map(|s| s.gamma),
                r.safety.as_ref().map(|s| s.a_star),
                cfg.seed,
                &r.summary,
            )
        })
        .collect()
}
