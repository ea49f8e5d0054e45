//! Increment distributions for the random walk.
//!
//! Every model exposes its tail `P(X > t)`, integrated tail
//! `∫_t^∞ P(X > s) ds`, density (when continuous) and exact samplers for the
//! unconditioned law and for the law truncated to an interval `(lo, hi]`.

use std::fmt;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::rng::CountingRng;

mod expdiff;
mod gaussian;
mod lattice;
mod pareto;
mod weibull;

pub use expdiff::ExpDiff;
pub use gaussian::GaussianDrift;
pub use lattice::DiscreteLattice;
pub use pareto::ParetoMG1;
pub use weibull::WeibullDetArrival;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum TailClass {
    RegularlyVarying { index: f64 },
    WeibullType,
    LightTailed,
    DiscreteFinite,
}

impl TailClass {
    pub fn is_heavy(&self) -> bool {
        matches!(self, TailClass::RegularlyVarying { .. } | TailClass::WeibullType)
    }
}

impl fmt::Display for TailClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            TailClass::RegularlyVarying { index } => write!(f, "regularly varying (index {index})"),
            TailClass::WeibullType => f.write_str("Weibull-type"),
            TailClass::LightTailed => f.write_str("light-tailed"),
            TailClass::DiscreteFinite => f.write_str("discrete finite"),
        }
    }
}

pub trait IncrementModel: Send + Sync + fmt::Debug {
    /// Short identifier used in reports, e.g. `weibull_det`.
    fn name(&self) -> &'static str;

    /// `P(X > t)`.
    fn tail(&self, t: f64) -> f64;

    fn ln_tail(&self, t: f64) -> f64 {
        self.tail(t).ln()
    }

    /// `P(X <= t)`; overridden where `1 - tail` would cancel.
    fn cdf(&self, t: f64) -> f64 {
        1.0 - self.tail(t)
    }

    /// Lebesgue density, `None` for discrete models.
    fn density(&self, t: f64) -> Option<f64>;

    /// `E[X]`, strictly negative.
    fn mean(&self) -> f64;

    /// `∫_t^∞ P(X > s) ds`.
    fn integrated_tail(&self, t: f64) -> f64;

    fn support_lower(&self) -> f64;

    fn tail_class(&self) -> TailClass;

    /// Points where the tail fails to be smooth (kinks, support ends).
    fn breakpoints(&self) -> Vec<f64> {
        Vec::new()
    }

    /// `(value, probability)` pairs for discrete models.
    fn atoms(&self) -> Option<&[(f64, f64)]> {
        None
    }

    /// Draw from the law of `X` conditioned on `lo < X <= hi`. Either bound
    /// may be infinite. The caller guarantees the interval has positive mass.
    fn sample_between(&self, lo: f64, hi: f64, rng: &mut CountingRng) -> f64;

    fn sample(&self, rng: &mut CountingRng) -> f64 {
        self.sample_between(f64::NEG_INFINITY, f64::INFINITY, rng)
    }

    fn sample_above(&self, c: f64, rng: &mut CountingRng) -> f64 {
        self.sample_between(c, f64::INFINITY, rng)
    }

    fn sample_below(&self, c: f64, rng: &mut CountingRng) -> f64 {
        self.sample_between(f64::NEG_INFINITY, c, rng)
    }

    /// `ln E[e^{θX}]`, `+∞` where the transform diverges.
    fn log_mgf(&self, theta: f64) -> f64 {
        if theta == 0.0 {
            0.0
        } else if theta > 0.0 {
            f64::INFINITY
        } else {
            f64::NAN
        }
    }

    /// Draw from the exponentially tilted law `e^{θt - log_mgf(θ)} P(X ∈ dt)`.
    fn sample_tilted(&self, theta: f64, _rng: &mut CountingRng) -> Result<f64> {
        Err(Error::NotLightTailed(format!(
            "{} has no exponential tilt at theta = {theta}",
            self.name()
        )))
    }

    /// `P(lo < X <= hi)`.
    fn mass_between(&self, lo: f64, hi: f64) -> f64 {
        if hi <= lo {
            return 0.0;
        }
        let upper = self.tail(lo) - self.tail(hi);
        if upper > 0.5 {
            upper
        } else {
            (self.cdf(hi) - self.cdf(lo)).max(upper).max(0.0)
        }
    }
}

pub type SharedModel = Arc<dyn IncrementModel>;

/// Built-in model selected by name plus parameters.
#[derive(Debug, Clone, PartialEq)]
pub enum ModelSpec {
    ParetoMG1,
    WeibullDetArrival,
    ExpDiff { mu: f64, lambda: f64 },
    GaussianDrift { mu: f64, sigma: f64 },
    DiscreteLattice { values: Vec<f64>, probs: Vec<f64> },
}

impl ModelSpec {
    pub fn build(&self) -> Result<SharedModel> {
        Ok(match self {
            ModelSpec::ParetoMG1 => Arc::new(ParetoMG1::new()),
            ModelSpec::WeibullDetArrival => Arc::new(WeibullDetArrival::new()),
            ModelSpec::ExpDiff { mu, lambda } => Arc::new(ExpDiff::new(*mu, *lambda)?),
            ModelSpec::GaussianDrift { mu, sigma } => Arc::new(GaussianDrift::new(*mu, *sigma)?),
            ModelSpec::DiscreteLattice { values, probs } => {
                Arc::new(DiscreteLattice::new(values.clone(), probs.clone())?)
            }
        })
    }

    pub fn name(&self) -> &'static str {
        match self {
            ModelSpec::ParetoMG1 => "pareto_mg1",
            ModelSpec::WeibullDetArrival => "weibull_det",
            ModelSpec::ExpDiff { .. } => "exp_diff",
            ModelSpec::GaussianDrift { .. } => "gaussian",
            ModelSpec::DiscreteLattice { .. } => "lattice",
        }
    }
}

/// Exponential variate with the given rate conditioned to `[0, width)`.
pub(crate) fn truncated_exponential(rate: f64, width: f64, rng: &mut CountingRng) -> f64 {
    let u = rng.uniform();
    if width.is_infinite() {
        return -u.ln() / rate;
    }
    // Inverse of F(e) = (1 - e^{-rate e}) / (1 - e^{-rate width}).
    let span = -(-rate * width).exp_m1();
    let e = -(-u * span).ln_1p() / rate;
    e.min(width)
}
