use crate::numeric::special::upper_gamma_scaled;
use crate::rng::CountingRng;

use super::{truncated_exponential, IncrementModel, TailClass};

const ALPHA: f64 = 2.5;
const RATE: f64 = 0.75;

/// M/G/1 increment `X = V - A` with `P(V > t) = (1 + t)^{-2.5}` and `A`
/// exponential with rate 3/4 (traffic intensity 1/2). `E[X] = -2/3`.
///
/// For `s >= 0` the tail is `E[(1 + s + A)^{-α}] = λ^α e^z Γ(1 - α, z)` with
/// `z = λ(1 + s)`; below zero `P(X <= s) = e^{λs} P(X <= 0)` because the
/// arrival overshoot is memoryless.
#[derive(Debug, Clone)]
pub struct ParetoMG1 {
    // P(X <= 0) = E[e^{-λV}]
    mass_nonpositive: f64,
    integrated_at_zero: f64,
}

impl Default for ParetoMG1 {
    fn default() -> Self {
        Self::new()
    }
}

/// `E[(1 + x + A)^{-a}]` for `x >= 0`.
fn shifted_power_moment(a: f64, x: f64) -> f64 {
    let z = RATE * (1.0 + x);
    RATE.powf(a) * upper_gamma_scaled(1.0 - a, z)
}

impl ParetoMG1 {
    pub fn new() -> Self {
        let g0 = shifted_power_moment(ALPHA, 0.0);
        ParetoMG1 {
            mass_nonpositive: 1.0 - g0,
            integrated_at_zero: shifted_power_moment(ALPHA - 1.0, 0.0) / (ALPHA - 1.0),
        }
    }

    pub fn alpha(&self) -> f64 {
        ALPHA
    }

    pub fn arrival_rate(&self) -> f64 {
        RATE
    }

    /// `E[V] - E[A]` recomputed from the tail decomposition, used as a
    /// consistency check against the exact mean.
    pub fn mean_from_tails(&self) -> f64 {
        self.integrated_at_zero - self.mass_nonpositive / RATE
    }

    fn sample_nonpositive(&self, lo: f64, hi: f64, rng: &mut CountingRng) -> f64 {
        // X | X <= hi is hi - Exp(λ) for hi <= 0.
        let width = hi - lo;
        hi - truncated_exponential(RATE, width, rng)
    }

    fn sample_positive(&self, lo: f64, hi: f64, rng: &mut CountingRng) -> f64 {
        // Draw A with weight P(lo + A < V <= hi + A) / P(V > lo), then V given A.
        loop {
            let a = rng.exponential(RATE);
            let c = 1.0 + lo + a;
            let keep = ((1.0 + lo) / c).powf(ALPHA);
            let r = if hi.is_infinite() {
                0.0
            } else {
                (c / (1.0 + hi + a)).powf(ALPHA)
            };
            if rng.uniform() < keep * (1.0 - r) {
                let u = rng.uniform();
                let v = c * (r + u * (1.0 - r)).powf(-1.0 / ALPHA) - 1.0;
                let x = v - a;
                return if hi.is_finite() { x.clamp(lo, hi) } else { x.max(lo) };
            }
        }
    }
}

impl IncrementModel for ParetoMG1 {
    fn name(&self) -> &'static str {
        "pareto_mg1"
    }

    fn tail(&self, t: f64) -> f64 {
        if t == 0.0 {
            1.0 - self.mass_nonpositive
        } else if t > 0.0 {
            shifted_power_moment(ALPHA, t)
        } else {
            1.0 - self.cdf(t)
        }
    }

    fn cdf(&self, t: f64) -> f64 {
        if t == 0.0 {
            self.mass_nonpositive
        } else if t > 0.0 {
            1.0 - shifted_power_moment(ALPHA, t)
        } else {
            (RATE * t).exp() * self.mass_nonpositive
        }
    }

    fn density(&self, t: f64) -> Option<f64> {
        Some(if t >= 0.0 {
            ALPHA * shifted_power_moment(ALPHA + 1.0, t)
        } else {
            RATE * (RATE * t).exp() * self.mass_nonpositive
        })
    }

    fn mean(&self) -> f64 {
        1.0 / (ALPHA - 1.0) - 1.0 / RATE
    }

    fn integrated_tail(&self, t: f64) -> f64 {
        if t >= 0.0 {
            shifted_power_moment(ALPHA - 1.0, t) / (ALPHA - 1.0)
        } else {
            // ∫_t^0 (1 - e^{λs} P(X <= 0)) ds
            self.integrated_at_zero - t + self.mass_nonpositive * (RATE * t).exp_m1() / RATE
        }
    }

    fn support_lower(&self) -> f64 {
        f64::NEG_INFINITY
    }

    fn tail_class(&self) -> TailClass {
        TailClass::RegularlyVarying { index: ALPHA }
    }

    fn breakpoints(&self) -> Vec<f64> {
        vec![0.0]
    }

    fn sample(&self, rng: &mut CountingRng) -> f64 {
        let v = rng.uniform().powf(-1.0 / ALPHA) - 1.0;
        v - rng.exponential(RATE)
    }

    fn sample_between(&self, lo: f64, hi: f64, rng: &mut CountingRng) -> f64 {
        if lo == f64::NEG_INFINITY && hi == f64::INFINITY {
            return self.sample(rng);
        }
        if hi <= 0.0 {
            return self.sample_nonpositive(lo, hi, rng);
        }
        if lo == f64::NEG_INFINITY {
            // P(X <= hi) >= P(X <= 0) > 0.4, so plain rejection is cheap.
            loop {
                let x = self.sample(rng);
                if x <= hi {
                    return x;
                }
            }
        }
        if lo >= 0.0 {
            return self.sample_positive(lo, hi, rng);
        }
        let neg = self.mass_between(lo, 0.0);
        let pos = self.mass_between(0.0, hi);
        if rng.uniform() * (neg + pos) < neg {
            self.sample_nonpositive(lo, 0.0, rng)
        } else {
            self.sample_positive(0.0, hi, rng)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn tail_decomposition_reproduces_mean() {
        let m = ParetoMG1::new();
        assert!((m.mean() + 2.0 / 3.0).abs() < 1e-15);
        assert!((m.mean_from_tails() - m.mean()).abs() < 1e-12);
    }

    #[test]
    fn nonpositive_mass_supports_rejection_below() {
        assert!(ParetoMG1::new().cdf(0.0) > 0.4);
    }

    #[test]
    fn tail_is_continuous_at_zero() {
        let m = ParetoMG1::new();
        assert!((m.tail(0.0) - m.tail(-1e-12)).abs() < 1e-11);
        assert!((m.integrated_tail(1e-12) - m.integrated_tail(-1e-12)).abs() < 1e-11);
    }

    #[test]
    fn far_tail_approaches_service_tail() {
        let m = ParetoMG1::new();
        let t: f64 = 1e4;
        let service = (1.0 + t).powf(-ALPHA);
        let ratio = m.tail(t) / service;
        // E[(1 + A/(1+t))^{-α}] ≈ 1 - α E[A]/(1+t)
        assert!((ratio - (1.0 - ALPHA * (4.0 / 3.0) / (1.0 + t))).abs() < 1e-6);
    }
}
