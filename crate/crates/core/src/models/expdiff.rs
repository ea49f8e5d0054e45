use crate::error::{Error, Result};
use crate::rng::CountingRng;

use super::{truncated_exponential, IncrementModel, TailClass};

/// `X = V - A` with `V ~ Exp(μ)`, `A ~ Exp(λ)`, `λ < μ` (M/M/1).
///
/// `X` is a two-sided exponential: positive with probability `λ/(λ+μ)` and
/// then `Exp(μ)`, otherwise `-Exp(λ)`.
#[derive(Debug, Clone, Copy)]
pub struct ExpDiff {
    mu: f64,
    lambda: f64,
}

impl ExpDiff {
    pub fn new(mu: f64, lambda: f64) -> Result<Self> {
        if !(mu > 0.0 && lambda > 0.0 && mu.is_finite() && lambda.is_finite()) {
            return Err(Error::InvalidModel(format!(
                "exp_diff rates must be positive and finite (mu = {mu}, lambda = {lambda})"
            )));
        }
        if lambda >= mu {
            return Err(Error::InvalidModel(format!(
                "exp_diff needs lambda < mu for negative drift (mu = {mu}, lambda = {lambda})"
            )));
        }
        Ok(ExpDiff { mu, lambda })
    }

    pub fn mu(&self) -> f64 {
        self.mu
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    fn p_positive(&self) -> f64 {
        self.lambda / (self.lambda + self.mu)
    }

    /// Exact `P(max_n S_n > b)` for `b >= 0`.
    pub fn exact_exceedance(&self, b: f64) -> f64 {
        self.lambda / self.mu * (-(self.mu - self.lambda) * b).exp()
    }
}

impl IncrementModel for ExpDiff {
    fn name(&self) -> &'static str {
        "exp_diff"
    }

    fn tail(&self, t: f64) -> f64 {
        if t >= 0.0 {
            self.p_positive() * (-self.mu * t).exp()
        } else {
            1.0 - self.cdf(t)
        }
    }

    fn cdf(&self, t: f64) -> f64 {
        if t >= 0.0 {
            1.0 - self.tail(t)
        } else {
            (1.0 - self.p_positive()) * (self.lambda * t).exp()
        }
    }

    fn density(&self, t: f64) -> Option<f64> {
        Some(if t >= 0.0 {
            self.mu * self.tail(t)
        } else {
            self.lambda * self.cdf(t)
        })
    }

    fn mean(&self) -> f64 {
        1.0 / self.mu - 1.0 / self.lambda
    }

    fn integrated_tail(&self, t: f64) -> f64 {
        if t >= 0.0 {
            self.tail(t) / self.mu
        } else {
            let q = 1.0 - self.p_positive();
            self.p_positive() / self.mu - t + q * (self.lambda * t).exp_m1() / self.lambda
        }
    }

    fn support_lower(&self) -> f64 {
        f64::NEG_INFINITY
    }

    fn tail_class(&self) -> TailClass {
        TailClass::LightTailed
    }

    fn breakpoints(&self) -> Vec<f64> {
        vec![0.0]
    }

    fn sample_between(&self, lo: f64, hi: f64, rng: &mut CountingRng) -> f64 {
        let neg = if lo < 0.0 { self.mass_between(lo, hi.min(0.0)) } else { 0.0 };
        let pos = if hi > 0.0 { self.mass_between(lo.max(0.0), hi) } else { 0.0 };
        let take_neg = if pos == 0.0 {
            true
        } else if neg == 0.0 {
            false
        } else {
            rng.uniform() * (neg + pos) < neg
        };
        if take_neg {
            let top = hi.min(0.0);
            top - truncated_exponential(self.lambda, top - lo, rng)
        } else {
            let bottom = lo.max(0.0);
            bottom + truncated_exponential(self.mu, hi - bottom, rng)
        }
    }

    fn log_mgf(&self, theta: f64) -> f64 {
        if theta >= self.mu || theta <= -self.lambda {
            return f64::INFINITY;
        }
        (self.mu * self.lambda / ((self.mu - theta) * (self.lambda + theta))).ln()
    }

    fn sample_tilted(&self, theta: f64, rng: &mut CountingRng) -> Result<f64> {
        if !self.log_mgf(theta).is_finite() {
            return Err(Error::NotLightTailed(format!(
                "exp_diff tilt theta = {theta} outside (-lambda, mu)"
            )));
        }
        let v = rng.exponential(self.mu - theta);
        let a = rng.exponential(self.lambda + theta);
        Ok(v - a)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_nonnegative_drift() {
        assert!(ExpDiff::new(1.0, 1.0).is_err());
        assert!(ExpDiff::new(1.0, -0.5).is_err());
    }

    #[test]
    fn integrated_tail_is_continuous_and_matches_mean() {
        let m = ExpDiff::new(1.0, 0.5).unwrap();
        assert!((m.integrated_tail(1e-13) - m.integrated_tail(-1e-13)).abs() < 1e-12);
        // I(t) + t → E[X] as t → -∞
        let t = -80.0;
        assert!((m.integrated_tail(t) + t - m.mean()).abs() < 1e-10);
    }

    #[test]
    fn mgf_root_at_mu_minus_lambda() {
        let m = ExpDiff::new(1.0, 0.5).unwrap();
        assert!(m.log_mgf(0.5).abs() < 1e-15);
    }
}
