use crate::error::{Error, Result};
use crate::rng::CountingRng;

use super::{IncrementModel, TailClass};

/// Finite-support increment law.
#[derive(Debug, Clone)]
pub struct DiscreteLattice {
    atoms: Vec<(f64, f64)>,
    // upper[i] = P(X >= atoms[i].0)
    upper: Vec<f64>,
    cumulative: Vec<f64>,
    mean: f64,
}

impl DiscreteLattice {
    pub fn new(values: Vec<f64>, probs: Vec<f64>) -> Result<Self> {
        if values.is_empty() || values.len() != probs.len() {
            return Err(Error::InvalidModel(format!(
                "lattice needs matching nonempty values/probs (got {} and {})",
                values.len(),
                probs.len()
            )));
        }
        if values.iter().any(|v| !v.is_finite()) || probs.iter().any(|p| !(*p >= 0.0) || !p.is_finite()) {
            return Err(Error::InvalidModel("lattice values must be finite and probabilities nonnegative".into()));
        }
        let total: f64 = probs.iter().sum();
        if (total - 1.0).abs() > 1e-12 {
            return Err(Error::InvalidModel(format!("lattice probabilities sum to {total}, not 1")));
        }
        let mut atoms: Vec<(f64, f64)> = values.into_iter().zip(probs).filter(|a| a.1 > 0.0).collect();
        atoms.sort_by(|a, b| a.0.total_cmp(&b.0));
        if atoms.windows(2).any(|w| w[0].0 == w[1].0) {
            return Err(Error::InvalidModel("lattice values must be distinct".into()));
        }
        let mean: f64 = atoms.iter().map(|(x, p)| x * p).sum();
        if !(mean < 0.0) {
            return Err(Error::InvalidModel(format!("lattice mean must be negative, got {mean}")));
        }
        let mut upper = vec![0.0; atoms.len()];
        let mut acc = 0.0;
        for i in (0..atoms.len()).rev() {
            acc += atoms[i].1;
            upper[i] = acc;
        }
        let mut cumulative = Vec::with_capacity(atoms.len());
        let mut acc = 0.0;
        for a in &atoms {
            acc += a.1;
            cumulative.push(acc);
        }
        Ok(DiscreteLattice {
            atoms,
            upper,
            cumulative,
            mean,
        })
    }

    pub fn values(&self) -> impl Iterator<Item = f64> + '_ {
        self.atoms.iter().map(|a| a.0)
    }

    pub fn probs(&self) -> impl Iterator<Item = f64> + '_ {
        self.atoms.iter().map(|a| a.1)
    }

    pub fn max_value(&self) -> f64 {
        self.atoms[self.atoms.len() - 1].0
    }
}

impl IncrementModel for DiscreteLattice {
    fn name(&self) -> &'static str {
        "lattice"
    }

    fn tail(&self, t: f64) -> f64 {
        let i = self.atoms.partition_point(|a| a.0 <= t);
        self.upper.get(i).copied().unwrap_or(0.0)
    }

    fn cdf(&self, t: f64) -> f64 {
        let i = self.atoms.partition_point(|a| a.0 <= t);
        if i == 0 {
            0.0
        } else {
            self.cumulative[i - 1]
        }
    }

    fn density(&self, _t: f64) -> Option<f64> {
        None
    }

    fn mean(&self) -> f64 {
        self.mean
    }

    fn integrated_tail(&self, t: f64) -> f64 {
        self.atoms.iter().map(|(x, p)| p * (x - t).max(0.0)).sum()
    }

    fn support_lower(&self) -> f64 {
        self.atoms[0].0
    }

    fn tail_class(&self) -> TailClass {
        TailClass::DiscreteFinite
    }

    fn breakpoints(&self) -> Vec<f64> {
        self.values().collect()
    }

    fn atoms(&self) -> Option<&[(f64, f64)]> {
        Some(&self.atoms)
    }

    fn sample(&self, rng: &mut CountingRng) -> f64 {
        let u = rng.uniform();
        let i = self.cumulative.partition_point(|&c| c < u).min(self.atoms.len() - 1);
        self.atoms[i].0
    }

    fn sample_between(&self, lo: f64, hi: f64, rng: &mut CountingRng) -> f64 {
        let inside = || self.atoms.iter().filter(|a| a.0 > lo && a.0 <= hi);
        let total: f64 = inside().map(|a| a.1).sum();
        let mut u = rng.uniform() * total;
        let mut last = f64::NAN;
        for &(x, p) in inside() {
            last = x;
            if u < p {
                return x;
            }
            u -= p;
        }
        last
    }

    fn log_mgf(&self, theta: f64) -> f64 {
        let m = self.atoms.iter().map(|a| theta * a.0).fold(f64::NEG_INFINITY, f64::max);
        m + self.atoms.iter().map(|(x, p)| p * (theta * x - m).exp()).sum::<f64>().ln()
    }

    fn sample_tilted(&self, theta: f64, rng: &mut CountingRng) -> Result<f64> {
        let lm = self.log_mgf(theta);
        let mut u = rng.uniform();
        let mut last = self.atoms[0].0;
        for &(x, p) in &self.atoms {
            let q = p * (theta * x - lm).exp();
            last = x;
            if u < q {
                return Ok(x);
            }
            u -= q;
        }
        Ok(last)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn tail_counts_mass_strictly_above() {
        let m = DiscreteLattice::new(vec![-1.0, 1.0], vec![0.7, 0.3]).unwrap();
        assert_eq!(m.tail(0.0), 0.3);
        assert_eq!(m.tail(1.0), 0.0);
        assert_eq!(m.tail(-1.0), 0.3);
        assert_eq!(m.tail(-1.5), 1.0);
        assert_eq!(m.cdf(-1.0), 0.7);
        assert!((m.integrated_tail(0.0) - 0.3).abs() < 1e-15);
        assert!((m.mean() + 0.4).abs() < 1e-15);
    }

    #[test]
    fn validates_input() {
        assert!(DiscreteLattice::new(vec![-1.0, 1.0], vec![0.3, 0.7]).is_err());
        assert!(DiscreteLattice::new(vec![-1.0, 1.0], vec![0.5, 0.6]).is_err());
        assert!(DiscreteLattice::new(vec![-1.0, -1.0], vec![0.5, 0.5]).is_err());
    }

    #[test]
    fn tilted_weights_sum_to_one() {
        let m = DiscreteLattice::new(vec![-2.0, 1.0], vec![0.5, 0.5]).unwrap();
        let lm = m.log_mgf(0.3);
        let s: f64 = m.atoms.iter().map(|(x, p)| p * (0.3 * x - lm).exp()).sum();
        assert!((s - 1.0).abs() < 1e-14);
    }
}
