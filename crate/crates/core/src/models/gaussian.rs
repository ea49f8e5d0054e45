use crate::error::{Error, Result};
use crate::numeric::special::{normal_cdf, normal_pdf, normal_quantile, normal_sf};
use crate::rng::CountingRng;

use super::{IncrementModel, TailClass};

/// Normal increments with mean `-μ < 0` and standard deviation `σ`.
#[derive(Debug, Clone, Copy)]
pub struct GaussianDrift {
    mu: f64,
    sigma: f64,
}

impl GaussianDrift {
    pub fn new(mu: f64, sigma: f64) -> Result<Self> {
        if !(mu > 0.0 && mu.is_finite()) {
            return Err(Error::InvalidModel(format!(
                "gaussian drift needs mu > 0 (mean -mu), got {mu}"
            )));
        }
        if !(sigma > 0.0 && sigma.is_finite()) {
            return Err(Error::InvalidModel(format!("gaussian sigma must be positive, got {sigma}")));
        }
        Ok(GaussianDrift { mu, sigma })
    }

    fn z(&self, t: f64) -> f64 {
        (t + self.mu) / self.sigma
    }

    fn draw_standard(&self, zlo: f64, zhi: f64, rng: &mut CountingRng) -> f64 {
        let u = rng.uniform();
        if zlo >= 0.0 {
            // Work with upper tails to keep resolution far to the right.
            let (a, b) = (normal_sf(zhi), normal_sf(zlo));
            -normal_quantile(a + u * (b - a))
        } else {
            let (a, b) = (normal_cdf(zlo), normal_cdf(zhi));
            normal_quantile(a + u * (b - a))
        }
    }
}

impl IncrementModel for GaussianDrift {
    fn name(&self) -> &'static str {
        "gaussian"
    }

    fn tail(&self, t: f64) -> f64 {
        normal_sf(self.z(t))
    }

    fn cdf(&self, t: f64) -> f64 {
        normal_cdf(self.z(t))
    }

    fn density(&self, t: f64) -> Option<f64> {
        Some(normal_pdf(self.z(t)) / self.sigma)
    }

    fn mean(&self) -> f64 {
        -self.mu
    }

    fn integrated_tail(&self, t: f64) -> f64 {
        let z = self.z(t);
        self.sigma * normal_pdf(z) - (t + self.mu) * normal_sf(z)
    }

    fn support_lower(&self) -> f64 {
        f64::NEG_INFINITY
    }

    fn tail_class(&self) -> TailClass {
        TailClass::LightTailed
    }

    fn sample_between(&self, lo: f64, hi: f64, rng: &mut CountingRng) -> f64 {
        let z = self.draw_standard(self.z(lo), self.z(hi), rng);
        let x = -self.mu + self.sigma * z;
        x.clamp(lo, hi)
    }

    fn log_mgf(&self, theta: f64) -> f64 {
        -self.mu * theta + 0.5 * self.sigma * self.sigma * theta * theta
    }

    fn sample_tilted(&self, theta: f64, rng: &mut CountingRng) -> Result<f64> {
        let z = normal_quantile(rng.uniform());
        Ok(-self.mu + theta * self.sigma * self.sigma + self.sigma * z)
    }
}
