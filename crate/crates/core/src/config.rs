//! Experiment configuration: `key = value` lines, optionally grouped under
//! `[section]` headers. `#` starts a comment.
//!
//! ```text
//! model = weibull_det
//! estimator = bg
//! b = 10, 50, 250
//! n = 20000
//! seed = 1
//!
//! [calibration]
//! gamma = 0.5
//! a_star = -10
//!
//! [sampler]
//! scheme = auto
//! ```

use std::collections::HashMap;
use std::fmt;
use std::path::PathBuf;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::models::ModelSpec;
use crate::sampler::{SamplerConfig, SchemeChoice};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EstimatorKind {
    Bg,
    Siegmund,
    Crude,
}

impl FromStr for EstimatorKind {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "bg" => Ok(EstimatorKind::Bg),
            "siegmund" => Ok(EstimatorKind::Siegmund),
            "crude" => Ok(EstimatorKind::Crude),
            other => Err(format!("unknown estimator '{other}' (expected bg, siegmund or crude)")),
        }
    }
}

impl fmt::Display for EstimatorKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            EstimatorKind::Bg => "bg",
            EstimatorKind::Siegmund => "siegmund",
            EstimatorKind::Crude => "crude",
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CalibrationConfig {
    pub gamma: f64,
    /// Chooses `γ` from a grid by the second-moment bound (`gamma = auto`);
    /// `gamma` is then ignored.
    pub optimize_gamma: bool,
    /// Skips the margin scan when set.
    pub a_star: Option<f64>,
    /// Defaults to `-max(200, 2 b)` for the largest level.
    pub y_min: Option<f64>,
    pub grid_step: f64,
}

impl Default for CalibrationConfig {
    fn default() -> Self {
        CalibrationConfig {
            gamma: 0.5,
            optimize_gamma: false,
            a_star: None,
            y_min: None,
            grid_step: 0.1,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub model: ModelSpec,
    pub estimator: EstimatorKind,
    pub levels: Vec<f64>,
    pub n: u64,
    pub seed: u64,
    pub calibration: CalibrationConfig,
    pub sampler: SamplerConfig,
    /// Truncation for crude simulation; `None` uses the default horizon.
    pub max_steps: Option<u64>,
    pub output: Option<PathBuf>,
}

struct Entry {
    line: usize,
    value: String,
    used: bool,
}

struct Table {
    entries: HashMap<String, Entry>,
}

impl Table {
    fn take(&mut self, key: &str) -> Option<(usize, String)> {
        self.entries.get_mut(key).map(|e| {
            e.used = true;
            (e.line, e.value.clone())
        })
    }

    fn parse<T: FromStr>(&mut self, key: &str) -> Result<Option<(usize, T)>>
    where
        T::Err: fmt::Display,
    {
        match self.take(key) {
            None => Ok(None),
            Some((line, raw)) => raw
                .parse::<T>()
                .map(|v| Some((line, v)))
                .map_err(|e| Error::config(line, format!("{key}: cannot parse '{raw}': {e}"))),
        }
    }

    fn required<T: FromStr>(&mut self, key: &str) -> Result<(usize, T)>
    where
        T::Err: fmt::Display,
    {
        self.parse(key)?
            .ok_or_else(|| Error::config(0, format!("missing required key '{key}'")))
    }

    fn list(&mut self, key: &str) -> Result<Option<(usize, Vec<f64>)>> {
        match self.take(key) {
            None => Ok(None),
            Some((line, raw)) => raw
                .split(',')
                .map(|s| {
                    s.trim()
                        .parse::<f64>()
                        .map_err(|e| Error::config(line, format!("{key}: cannot parse '{}': {e}", s.trim())))
                })
                .collect::<Result<Vec<f64>>>()
                .map(|v| Some((line, v))),
        }
    }
}

fn tokenize(text: &str) -> Result<Table> {
    let mut entries = HashMap::new();
    let mut section = String::new();
    for (i, raw) in text.lines().enumerate() {
        let line = i + 1;
        let content = raw.split('#').next().unwrap_or("").trim();
        if content.is_empty() {
            continue;
        }
        if let Some(rest) = content.strip_prefix('[') {
            let name = rest
                .strip_suffix(']')
                .ok_or_else(|| Error::config(line, format!("malformed section header '{content}'")))?
                .trim();
            if !matches!(name, "model" | "calibration" | "sampler" | "crude" | "output") {
                return Err(Error::config(line, format!("unknown section [{name}]")));
            }
            section = name.to_string();
            continue;
        }
        let (key, value) = content
            .split_once('=')
            .ok_or_else(|| Error::config(line, format!("expected key = value, got '{content}'")))?;
        let key = key.trim();
        let full = if section.is_empty() { key.to_string() } else { format!("{section}.{key}") };
        let entry = Entry {
            line,
            value: value.trim().to_string(),
            used: false,
        };
        if let Some(prev) = entries.insert(full.clone(), entry) {
            return Err(Error::config(line, format!("duplicate key '{full}' (first set on line {})", prev.line)));
        }
    }
    Ok(Table { entries })
}

fn model_spec(t: &mut Table) -> Result<ModelSpec> {
    let (line, name): (usize, String) = t.required("model")?;
    let spec = match name.as_str() {
        "weibull_det" => ModelSpec::WeibullDetArrival,
        "pareto_mg1" => ModelSpec::ParetoMG1,
        "exp_diff" => ModelSpec::ExpDiff {
            mu: t.required::<f64>("model.mu")?.1,
            lambda: t.required::<f64>("model.lambda")?.1,
        },
        "gaussian" => ModelSpec::GaussianDrift {
            mu: t.required::<f64>("model.mu")?.1,
            sigma: t.required::<f64>("model.sigma")?.1,
        },
        "lattice" => {
            let values = t.list("model.values")?.ok_or_else(|| Error::config(line, "lattice needs model.values"))?;
            let probs = t.list("model.probs")?.ok_or_else(|| Error::config(line, "lattice needs model.probs"))?;
            ModelSpec::DiscreteLattice {
                values: values.1,
                probs: probs.1,
            }
        }
        other => {
            return Err(Error::config(
                line,
                format!("unknown model '{other}' (expected weibull_det, pareto_mg1, exp_diff, gaussian or lattice)"),
            ))
        }
    };
    // Parameter validation happens in the model constructors.
    spec.build().map_err(|e| Error::config(line, e.to_string()))?;
    Ok(spec)
}

/// Parses and validates a configuration, applying defaults.
pub fn parse_config(text: &str) -> Result<ExperimentConfig> {
    let mut t = tokenize(text)?;
    let model = model_spec(&mut t)?;
    let (est_line, estimator): (usize, EstimatorKind) = t.required("estimator")?;
    let (b_line, levels) = t
        .list("b")?
        .ok_or_else(|| Error::config(0, "missing required key 'b'"))?;
    if levels.is_empty() || levels.iter().any(|b| !(*b > 0.0) || !b.is_finite()) {
        return Err(Error::config(b_line, "every level b must be a positive number"));
    }
    let (n_line, n): (usize, u64) = t.required("n")?;
    if n == 0 {
        return Err(Error::config(n_line, "n must be at least 1"));
    }
    let (_, seed): (usize, u64) = t.required("seed")?;

    let mut calibration = CalibrationConfig::default();
    if t.entries.get("calibration.gamma").is_some_and(|e| e.value == "auto") {
        t.take("calibration.gamma");
        calibration.optimize_gamma = true;
    } else if let Some((line, g)) = t.parse::<f64>("calibration.gamma")? {
        if !(g > 0.0 && g < 1.0) {
            return Err(Error::config(line, format!("gamma must lie in (0, 1), got {g}")));
        }
        calibration.gamma = g;
    }
    if let Some((line, a)) = t.parse::<f64>("calibration.a_star")? {
        if !a.is_finite() {
            return Err(Error::config(line, "a_star must be finite"));
        }
        calibration.a_star = Some(a);
    }
    if let Some((line, y)) = t.parse::<f64>("calibration.y_min")? {
        if !(y < 0.0) || !y.is_finite() {
            return Err(Error::config(line, format!("y_min must be negative, got {y}")));
        }
        calibration.y_min = Some(y);
    }
    if let Some((line, h)) = t.parse::<f64>("calibration.grid_step")? {
        if !(h > 0.0) || !h.is_finite() {
            return Err(Error::config(line, format!("grid_step must be positive, got {h}")));
        }
        calibration.grid_step = h;
    }

    let mut sampler = SamplerConfig::default();
    if let Some((_, s)) = t.parse::<SchemeChoice>("sampler.scheme")? {
        sampler.scheme = s;
    }
    if let Some((line, th)) = t.parse::<f64>("sampler.theta")? {
        if !(th > 0.0 && th < 1.0) {
            return Err(Error::config(line, format!("theta must lie in (0, 1), got {th}")));
        }
        sampler.theta = th;
    }
    if let Some((line, cap)) = t.parse::<u64>("sampler.proposal_cap")? {
        if cap == 0 {
            return Err(Error::config(line, "proposal_cap must be at least 1"));
        }
        sampler.proposal_cap = cap;
    }
    let max_steps = match t.parse::<u64>("crude.max_steps")? {
        Some((line, 0)) => return Err(Error::config(line, "max_steps must be at least 1")),
        Some((_, m)) => Some(m),
        None => None,
    };
    let output = t.take("output.path").map(|(_, p)| PathBuf::from(p));

    let built = model.build().map_err(|e| Error::config(0, e.to_string()))?;
    let class = built.tail_class();
    match estimator {
        EstimatorKind::Siegmund if class.is_heavy() => {
            return Err(Error::config(
                est_line,
                format!(
                    "the siegmund estimator needs a light-tailed model, but {} is {class}; its moment generating function is infinite for every positive argument",
                    model.name()
                ),
            ))
        }
        EstimatorKind::Siegmund if matches!(model, ModelSpec::DiscreteLattice { .. }) && built.tail(0.0) == 0.0 => {
            return Err(Error::config(est_line, "the siegmund estimator needs some mass above 0"));
        }
        _ => {}
    }

    if let Some((key, e)) = t.entries.iter().find(|(_, e)| !e.used) {
        return Err(Error::config(e.line, format!("unknown key '{key}'")));
    }
    Ok(ExperimentConfig {
        model,
        estimator,
        levels,
        n,
        seed,
        calibration,
        sampler,
        max_steps,
        output,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = "model = weibull_det\nestimator = bg\nb = 10\nn = 1000\nseed = 1\n";

    #[test]
    fn minimal_config_gets_defaults() {
        let c = parse_config(MINIMAL).unwrap();
        assert_eq!(c.calibration.gamma, 0.5);
        assert_eq!(c.sampler.scheme, SchemeChoice::Auto);
        assert_eq!(c.levels, vec![10.0]);
        assert_eq!(c.calibration.a_star, None);
    }

    #[test]
    fn sections_and_lists() {
        let text = "model = exp_diff\nestimator = siegmund\nb = 1, 2.5\nn = 5\nseed = 9\n[model]\nmu = 1\nlambda = 0.5\n[sampler]\nscheme = naive # plain\n";
        let c = parse_config(text).unwrap();
        assert_eq!(c.model, ModelSpec::ExpDiff { mu: 1.0, lambda: 0.5 });
        assert_eq!(c.levels, vec![1.0, 2.5]);
        assert_eq!(c.sampler.scheme, SchemeChoice::Naive);
    }

    fn line_of(e: Error) -> usize {
        match e {
            Error::Config { line, .. } => line,
            other => panic!("not a config error: {other}"),
        }
    }

    #[test]
    fn gamma_out_of_range_reports_line() {
        let e = parse_config(&format!("{MINIMAL}[calibration]\ngamma = 1.5\n")).unwrap_err();
        assert_eq!(line_of(e), 7);
    }

    #[test]
    fn gamma_auto_selects_optimization() {
        let c = parse_config(&format!("{MINIMAL}[calibration]\ngamma = auto\n")).unwrap();
        assert!(c.calibration.optimize_gamma);
        assert!(!parse_config(MINIMAL).unwrap().calibration.optimize_gamma);
    }

    #[test]
    fn siegmund_rejected_for_heavy_tails() {
        let e = parse_config(&MINIMAL.replace("bg", "siegmund")).unwrap_err();
        assert!(e.to_string().contains("light-tailed"), "{e}");
        assert_eq!(line_of(e), 2);
    }

    #[test]
    fn unknown_and_missing_keys() {
        assert_eq!(line_of(parse_config(&format!("{MINIMAL}colour = red\n")).unwrap_err()), 6);
        let e = parse_config("model = weibull_det\nestimator = bg\nb = 10\nseed = 1\n").unwrap_err();
        assert!(e.to_string().contains("'n'"));
        assert_eq!(line_of(parse_config(&MINIMAL.replace("n = 1000", "n = lots")).unwrap_err()), 4);
    }
}
