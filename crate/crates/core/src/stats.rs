//! Summary statistics and goodness-of-fit helpers.

use crate::numeric::KahanSum;

/// Compensated mean and unbiased variance (two passes).
pub fn mean_var(xs: &[f64]) -> (f64, f64) {
    let n = xs.len();
    if n == 0 {
        return (f64::NAN, f64::NAN);
    }
    let mean = xs.iter().copied().collect::<KahanSum>().value() / n as f64;
    if n == 1 {
        return (mean, 0.0);
    }
    let ss = xs.iter().map(|x| (x - mean) * (x - mean)).collect::<KahanSum>().value();
    (mean, ss / (n - 1) as f64)
}

/// Kolmogorov limiting distribution, `P(K > λ)`.
pub fn kolmogorov_sf(lambda: f64) -> f64 {
    if lambda <= 0.0 {
        return 1.0;
    }
    if lambda < 0.2 {
        return 1.0;
    }
    let mut sum = 0.0;
    for k in 1..=200 {
        let kf = k as f64;
        let term = (-2.0 * kf * kf * lambda * lambda).exp();
        sum += if k % 2 == 1 { term } else { -term };
        if term < 1e-18 {
            break;
        }
    }
    (2.0 * sum).clamp(0.0, 1.0)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KsResult {
    pub statistic: f64,
    pub p_value: f64,
}

/// Asymptotic p-value with the Stephens small-sample correction.
fn ks_p_value(d: f64, n_eff: f64) -> f64 {
    let s = n_eff.sqrt();
    kolmogorov_sf((s + 0.12 + 0.11 / s) * d)
}

/// One-sample KS test of `xs` against a continuous CDF.
pub fn ks_one_sample<F: FnMut(f64) -> f64>(xs: &[f64], mut cdf: F) -> KsResult {
    let mut sorted = xs.to_vec();
    sorted.sort_by(f64::total_cmp);
    let n = sorted.len() as f64;
    let mut d: f64 = 0.0;
    for (i, &x) in sorted.iter().enumerate() {
        let f = cdf(x);
        d = d.max((i as f64 + 1.0) / n - f).max(f - i as f64 / n);
    }
    KsResult {
        statistic: d,
        p_value: ks_p_value(d, n),
    }
}

/// Exact one-sample KS statistic with fewer CDF evaluations. The CDF is
/// first evaluated at every `stride`-th order statistic; a block between two
/// evaluated points is filled in only if monotonicity allows it to exceed the
/// largest deviation found so far.
pub fn ks_one_sample_strided<F: FnMut(f64) -> f64>(xs: &[f64], stride: usize, mut cdf: F) -> KsResult {
    let mut sorted = xs.to_vec();
    sorted.sort_by(f64::total_cmp);
    let n = sorted.len();
    let nf = n as f64;
    let gap = |i: usize, f: f64| ((i as f64 + 1.0) / nf - f).max(f - i as f64 / nf);
    let mut idx: Vec<usize> = (0..n).step_by(stride.max(1)).collect();
    if idx.last() != Some(&(n - 1)) {
        idx.push(n - 1);
    }
    let values: Vec<f64> = idx.iter().map(|&i| cdf(sorted[i])).collect();
    let mut d = idx.iter().zip(&values).map(|(&i, &f)| gap(i, f)).fold(0.0f64, f64::max);
    let mut blocks: Vec<(f64, usize)> = (0..idx.len().saturating_sub(1))
        .filter(|&j| idx[j + 1] > idx[j] + 1)
        .map(|j| {
            let bound = (idx[j + 1] as f64 / nf - values[j]).max(values[j + 1] - (idx[j] as f64 + 1.0) / nf);
            (bound, j)
        })
        .collect();
    blocks.sort_by(|a, b| b.0.total_cmp(&a.0));
    for (bound, j) in blocks {
        if bound <= d {
            break;
        }
        for i in idx[j] + 1..idx[j + 1] {
            d = d.max(gap(i, cdf(sorted[i])));
        }
    }
    KsResult {
        statistic: d,
        p_value: ks_p_value(d, nf),
    }
}

/// Two-sample KS test.
pub fn ks_two_sample(a: &[f64], b: &[f64]) -> KsResult {
    let mut x = a.to_vec();
    let mut y = b.to_vec();
    x.sort_by(f64::total_cmp);
    y.sort_by(f64::total_cmp);
    let (n, m) = (x.len(), y.len());
    let (mut i, mut j) = (0, 0);
    let mut d: f64 = 0.0;
    while i < n && j < m {
        let t = x[i].min(y[j]);
        while i < n && x[i] <= t {
            i += 1;
        }
        while j < m && y[j] <= t {
            j += 1;
        }
        d = d.max((i as f64 / n as f64 - j as f64 / m as f64).abs());
    }
    let n_eff = (n * m) as f64 / (n + m) as f64;
    KsResult {
        statistic: d,
        p_value: ks_p_value(d, n_eff),
    }
}

/// Dvoretzky–Kiefer–Wolfowitz half-width: `sup |F_n - F| <= ε` with
/// probability at least `confidence`.
pub fn dkw_epsilon(n: usize, confidence: f64) -> f64 {
    ((2.0 / (1.0 - confidence)).ln() / (2.0 * n as f64)).sqrt()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LinearFit {
    pub slope: f64,
    pub intercept: f64,
    pub r_squared: f64,
}

pub fn linear_fit(x: &[f64], y: &[f64]) -> LinearFit {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = x.iter().map(|a| (a - mx) * (a - mx)).sum();
    let syy: f64 = y.iter().map(|b| (b - my) * (b - my)).sum();
    let slope = sxy / sxx;
    LinearFit {
        slope,
        intercept: my - slope * mx,
        r_squared: if syy == 0.0 { 1.0 } else { sxy * sxy / (sxx * syy) },
    }
}
