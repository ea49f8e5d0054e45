use crate::rng::CountingRng;

use super::{IncrementModel, TailClass};

/// `X = V - 1` with `P(V > t) = exp(-2 sqrt(t))`: Weibull-type service, unit
/// deterministic interarrival. `E[X] = -1/2`.
#[derive(Debug, Clone, Copy, Default)]
pub struct WeibullDetArrival;

impl WeibullDetArrival {
    pub fn new() -> Self {
        WeibullDetArrival
    }
}

impl IncrementModel for WeibullDetArrival {
    fn name(&self) -> &'static str {
        "weibull_det"
    }

    fn tail(&self, t: f64) -> f64 {
        if t <= -1.0 {
            1.0
        } else {
            self.ln_tail(t).exp()
        }
    }

    fn ln_tail(&self, t: f64) -> f64 {
        if t <= -1.0 {
            0.0
        } else {
            -2.0 * (t + 1.0).sqrt()
        }
    }

    fn cdf(&self, t: f64) -> f64 {
        -self.ln_tail(t).exp_m1()
    }

    fn density(&self, t: f64) -> Option<f64> {
        if t <= -1.0 {
            return Some(0.0);
        }
        let r = (t + 1.0).sqrt();
        Some((-2.0 * r).exp() / r)
    }

    fn mean(&self) -> f64 {
        -0.5
    }

    fn integrated_tail(&self, t: f64) -> f64 {
        if t < -1.0 {
            return 0.5 + (-1.0 - t);
        }
        let r = (t + 1.0).sqrt();
        (r + 0.5) * (-2.0 * r).exp()
    }

    fn support_lower(&self) -> f64 {
        -1.0
    }

    fn tail_class(&self) -> TailClass {
        TailClass::WeibullType
    }

    fn breakpoints(&self) -> Vec<f64> {
        vec![-1.0]
    }

    fn sample_between(&self, lo: f64, hi: f64, rng: &mut CountingRng) -> f64 {
        let lo = lo.max(-1.0);
        let ln_lo = self.ln_tail(lo);
        let u = rng.uniform();
        // Uniform on (T(hi), T(lo)] expressed relative to T(lo) in log form.
        let ln_p = if hi.is_infinite() {
            ln_lo + u.ln()
        } else {
            let one_minus_r = -(self.ln_tail(hi) - ln_lo).exp_m1();
            ln_lo + (-u * one_minus_r).ln_1p()
        };
        let s = 0.25 * ln_p * ln_p - 1.0;
        if hi.is_finite() {
            s.clamp(lo, hi)
        } else {
            s.max(lo)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn integrated_tail_continues_linearly_below_support() {
        let m = WeibullDetArrival;
        // ∫_{-1}^∞ P(X > s) ds = E[V] = 1/2
        let i_m1 = m.integrated_tail(-1.0);
        assert!((i_m1 - 0.5).abs() < 1e-15);
        assert!((m.integrated_tail(-3.0) - (i_m1 + 2.0)).abs() < 1e-14);
    }

    #[test]
    fn truncated_draws_respect_bounds() {
        let m = WeibullDetArrival;
        let mut rng = CountingRng::seed_from_u64(3);
        for _ in 0..2000 {
            let x = m.sample_between(400.0, 401.0, &mut rng);
            assert!(x > 400.0 && x <= 401.0);
            let y = m.sample_between(-0.5, 0.0, &mut rng);
            assert!(y >= -0.5 && y <= 0.0);
        }
    }
}
