use std::sync::Arc;

use crate::error::{Error, Result};
use crate::estimators::{Kernel, WorkerStats};
use crate::rng::CountingRng;

use super::DiscreteWalkSpec;

pub type PositiveFn = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

/// `Σ p(x) v(y + x + a)`.
fn normalizer(spec: &DiscreteWalkSpec, v: &dyn Fn(f64) -> f64, shifted: f64) -> f64 {
    spec.values().iter().zip(spec.probs()).map(|(x, p)| p * v(shifted + x)).sum()
}

/// One-step weight `w(y + a) / v(z + a)` of the kernel proportional to
/// `v(· + a)`; 0 where `v(z + a) = 0`, since that transition is never made.
pub fn bg_weight(spec: &DiscreteWalkSpec, v: &dyn Fn(f64) -> f64, a_star: f64, y: f64, z: f64) -> f64 {
    let vz = v(z + a_star);
    if vz == 0.0 {
        return 0.0;
    }
    normalizer(spec, v, y + a_star) / vz
}

/// Exact sampler for the kernel `P(y + X ∈ dz) v(z + a) / w(y + a)` on a
/// lattice, for an arbitrary nonnegative `v`.
#[derive(Clone)]
pub struct LatticeKernel {
    spec: DiscreteWalkSpec,
    v: PositiveFn,
    weights: Vec<f64>,
}

impl LatticeKernel {
    pub fn new(spec: DiscreteWalkSpec, v: PositiveFn) -> Self {
        let n = spec.values().len();
        LatticeKernel {
            spec,
            v,
            weights: vec![0.0; n],
        }
    }

    pub fn spec(&self) -> &DiscreteWalkSpec {
        &self.spec
    }
}

impl Kernel for LatticeKernel {
    fn ln_v(&self, y: f64) -> f64 {
        (self.v)(y).ln()
    }

    fn step(&mut self, beta: f64, rng: &mut CountingRng) -> Result<(f64, f64)> {
        let base = -beta;
        let mut total = 0.0;
        for (i, (x, p)) in self.spec.values().iter().zip(self.spec.probs()).enumerate() {
            let w = p * (self.v)(base + x);
            self.weights[i] = w;
            total += w;
        }
        if !(total > 0.0) {
            return Err(Error::SamplerPrecondition {
                beta,
                reason: "v vanishes on every reachable level".into(),
            });
        }
        let target = rng.uniform() * total;
        let mut acc = 0.0;
        let mut pick = self.weights.len() - 1;
        for (i, w) in self.weights.iter().enumerate() {
            acc += w;
            if target < acc && *w > 0.0 {
                pick = i;
                break;
            }
        }
        Ok((total.ln(), self.spec.values()[pick]))
    }
}

impl WorkerStats for LatticeKernel {}
