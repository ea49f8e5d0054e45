//! Piecewise Chebyshev interpolation of a smooth function on an interval,
//! refined by bisection until a held-out check passes.
//!
//! A segment whose left end is a declared singular point is parametrized by
//! `u = sqrt(x - origin)`, which absorbs square-root type behavior there.

use crate::error::Result;

const DEGREE: usize = 16;
const NODES: usize = DEGREE + 1;

#[derive(Debug, Clone, Copy)]
enum Variable {
    Linear,
    Sqrt { origin: f64 },
}

#[derive(Debug, Clone)]
struct Segment {
    lo: f64,
    hi: f64,
    var: Variable,
    // None marks a segment too short to fit; callers fall back to the exact function.
    coeffs: Option<[f64; NODES]>,
}

impl Variable {
    fn raw(self, x: f64) -> f64 {
        match self {
            Variable::Linear => x,
            Variable::Sqrt { origin } => (x - origin).max(0.0).sqrt(),
        }
    }

    fn from_raw(self, r: f64) -> f64 {
        match self {
            Variable::Linear => r,
            Variable::Sqrt { origin } => origin + r * r,
        }
    }
}

impl Segment {
    /// Local coordinate in [-1, 1].
    fn local(&self, x: f64) -> f64 {
        let a = self.var.raw(self.lo);
        let b = self.var.raw(self.hi);
        (2.0 * self.var.raw(x) - a - b) / (b - a)
    }
}

fn chebyshev_nodes() -> [f64; NODES] {
    let mut x = [0.0; NODES];
    for (k, xk) in x.iter_mut().enumerate() {
        *xk = (std::f64::consts::PI * (k as f64 + 0.5) / NODES as f64).cos();
    }
    x
}

fn clenshaw(c: &[f64; NODES], t: f64) -> f64 {
    let mut b1 = 0.0;
    let mut b2 = 0.0;
    for &ck in c.iter().skip(1).rev() {
        let b0 = 2.0 * t * b1 - b2 + ck;
        b2 = b1;
        b1 = b0;
    }
    t * b1 - b2 + 0.5 * c[0]
}

#[derive(Debug, Clone)]
pub struct ChebyshevTable {
    segments: Vec<Segment>,
    lo: f64,
    hi: f64,
    max_check_error: f64,
}

pub struct TableSpec<'a> {
    pub lo: f64,
    pub hi: f64,
    /// Points where the function is not smooth; segments never straddle them.
    pub breaks: &'a [f64],
    /// Subset of `breaks` with square-root behavior on their right.
    pub sqrt_points: &'a [f64],
    pub abs_tol: f64,
}

impl ChebyshevTable {
    pub fn build<F: Fn(f64) -> Result<f64>>(f: F, spec: &TableSpec<'_>) -> Result<Self> {
        let mut edges = vec![spec.lo];
        let mut inner: Vec<f64> = spec
            .breaks
            .iter()
            .copied()
            .filter(|&x| x > spec.lo && x < spec.hi)
            .collect();
        inner.sort_by(f64::total_cmp);
        inner.dedup();
        edges.extend(inner);
        edges.push(spec.hi);

        let nodes = chebyshev_nodes();
        let mut segments = Vec::new();
        let mut max_check_error: f64 = 0.0;
        for w in edges.windows(2) {
            let var = if spec.sqrt_points.iter().any(|&p| p == w[0]) {
                Variable::Sqrt { origin: w[0] }
            } else {
                Variable::Linear
            };
            let mut stack = vec![(w[0], w[1])];
            while let Some((a, b)) = stack.pop() {
                if b - a < 1e-7 * a.abs().max(1.0) {
                    segments.push(Segment { lo: a, hi: b, var, coeffs: None });
                    continue;
                }
                let (coeffs, err) = fit(&f, a, b, var, &nodes)?;
                if err <= spec.abs_tol {
                    max_check_error = max_check_error.max(err);
                    segments.push(Segment { lo: a, hi: b, var, coeffs: Some(coeffs) });
                } else {
                    let mid = var.from_raw(0.5 * (var.raw(a) + var.raw(b)));
                    // Right half first so the left half pops next and segments stay ordered.
                    stack.push((mid, b));
                    stack.push((a, mid));
                }
            }
        }
        Ok(ChebyshevTable {
            segments,
            lo: spec.lo,
            hi: spec.hi,
            max_check_error,
        })
    }

    pub fn domain(&self) -> (f64, f64) {
        (self.lo, self.hi)
    }

    pub fn segment_count(&self) -> usize {
        self.segments.len()
    }

    /// Largest interpolation error observed at the held-out check points.
    pub fn max_check_error(&self) -> f64 {
        self.max_check_error
    }

    /// Interpolated value, `None` outside the domain or on an unfitted segment.
    pub fn eval(&self, x: f64) -> Option<f64> {
        if !(x >= self.lo && x <= self.hi) {
            return None;
        }
        let i = self.segments.partition_point(|s| s.hi < x).min(self.segments.len() - 1);
        let seg = &self.segments[i];
        let coeffs = seg.coeffs.as_ref()?;
        Some(clenshaw(coeffs, seg.local(x).clamp(-1.0, 1.0)))
    }
}

fn fit<F: Fn(f64) -> Result<f64>>(
    f: &F,
    a: f64,
    b: f64,
    var: Variable,
    nodes: &[f64; NODES],
) -> Result<([f64; NODES], f64)> {
    let (ra, rb) = (var.raw(a), var.raw(b));
    let to_x = |t: f64| var.from_raw(0.5 * (ra + rb) + 0.5 * (rb - ra) * t);
    let mut values = [0.0; NODES];
    for (k, &t) in nodes.iter().enumerate() {
        values[k] = f(to_x(t))?;
    }
    let n = NODES as f64;
    let mut coeffs = [0.0; NODES];
    for (j, c) in coeffs.iter_mut().enumerate() {
        let mut s = 0.0;
        for (k, v) in values.iter().enumerate() {
            s += v * (std::f64::consts::PI * j as f64 * (k as f64 + 0.5) / n).cos();
        }
        *c = 2.0 * s / n;
    }
    // Check halfway between consecutive nodes.
    let mut err: f64 = 0.0;
    for k in 0..NODES - 1 {
        let t = (std::f64::consts::PI * (k as f64 + 1.0) / n).cos();
        let exact = f(to_x(t))?;
        err = err.max((clenshaw(&coeffs, t) - exact).abs());
    }
    Ok((coeffs, err))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn smooth_function_is_reproduced() {
        let spec = TableSpec {
            lo: 0.0,
            hi: 50.0,
            breaks: &[],
            sqrt_points: &[],
            abs_tol: 1e-12,
        };
        let t = ChebyshevTable::build(|x| Ok((x * 0.3).sin() - 0.01 * x), &spec).unwrap();
        for i in 0..=1000 {
            let x = 50.0 * i as f64 / 1000.0;
            assert!((t.eval(x).unwrap() - ((x * 0.3).sin() - 0.01 * x)).abs() < 1e-11);
        }
        assert!(t.eval(50.1).is_none());
    }

    #[test]
    fn sqrt_variable_handles_endpoint_singularity() {
        let g = |x: f64| -2.0 * (x + 1.0).sqrt();
        let spec = TableSpec {
            lo: -1.0,
            hi: 100.0,
            breaks: &[-1.0],
            sqrt_points: &[-1.0],
            abs_tol: 1e-12,
        };
        let t = ChebyshevTable::build(|x| Ok(g(x)), &spec).unwrap();
        assert!(t.segment_count() < 20, "{}", t.segment_count());
        for &x in &[-1.0, -0.999_999, -0.5, 3.0, 99.9] {
            assert!((t.eval(x).unwrap() - g(x)).abs() < 1e-11);
        }
    }
}
