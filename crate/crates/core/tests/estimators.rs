use std::sync::Arc;

use walkmax::approximation::{optimize_gamma, Approximation, SafetyParams, GAMMA_GRID};
use walkmax::estimators::{
    bg_experiment, crude_experiment, siegmund_experiment, solve_theta_star, BgPlan,
};
use walkmax::models::{DiscreteLattice, ExpDiff, GaussianDrift, ModelSpec, ParetoMG1, WeibullDetArrival};
use walkmax::sampler::SamplerConfig;
use walkmax::validation::{exact_u_star, DiscreteWalkSpec};

fn weibull_plan(b_max: f64) -> BgPlan {
    let approx = Arc::new(Approximation::new(Arc::new(WeibullDetArrival::new())).unwrap());
    let safety = SafetyParams::manual(&approx, 0.5, -10.0).unwrap();
    BgPlan::new(approx, safety, SamplerConfig::default(), b_max).unwrap()
}

#[test]
fn results_do_not_depend_on_worker_count() {
    let plan = weibull_plan(50.0);
    let one = bg_experiment(&plan, 50.0, 700, 42, 1).unwrap();
    let four = bg_experiment(&plan, 50.0, 700, 42, 4).unwrap();
    assert_eq!(one.mean.to_bits(), four.mean.to_bits());
    assert_eq!(one.stderr.to_bits(), four.stderr.to_bits());
    assert_eq!(one.mean_variates.to_bits(), four.mean_variates.to_bits());
    let other = bg_experiment(&plan, 50.0, 700, 43, 1).unwrap();
    assert_ne!(one.mean.to_bits(), other.mean.to_bits());
}

#[test]
fn siegmund_is_unbiased_for_exponential_differences() {
    let model = ExpDiff::new(1.0, 0.5).unwrap();
    let theta = solve_theta_star(&model).unwrap();
    assert!((theta - 0.5).abs() < 1e-12);
    for b in [5.0, 15.0] {
        let s = siegmund_experiment(&model, b, 20_000, 7, 1).unwrap();
        let exact = model.exact_exceedance(b);
        assert!((s.mean - exact).abs() < 4.0 * s.stderr, "b = {b}: {} vs {exact}", s.mean);
        assert!(s.second_moment <= (-2.0 * theta * b).exp());
    }
}

#[test]
fn gaussian_tilt_is_twice_the_drift_over_variance() {
    let model = GaussianDrift::new(0.5, 2.0).unwrap();
    assert!((solve_theta_star(&model).unwrap() - 0.25).abs() < 1e-12);
    assert!(solve_theta_star(&WeibullDetArrival::new()).is_err());
}

#[test]
fn crude_estimate_agrees_with_exact_lattice_solution() {
    let walk = DiscreteWalkSpec::new(vec![-1.0, 1.0], vec![0.6, 0.4]).unwrap();
    let exact = exact_u_star(&walk, 40).unwrap().at(-3.0);
    let model = DiscreteLattice::new(vec![-1.0, 1.0], vec![0.6, 0.4]).unwrap();
    let s = crude_experiment(&model, 3.0, 2_000, 40_000, 3, 1).unwrap();
    assert!((s.mean - exact).abs() < 4.0 * s.stderr, "{} vs {exact}", s.mean);
}

#[test]
fn bg_agrees_with_crude_at_a_moderate_level() {
    let plan = weibull_plan(5.0);
    let bg = bg_experiment(&plan, 5.0, 20_000, 1, 1).unwrap();
    let model = ModelSpec::WeibullDetArrival.build().unwrap();
    let crude = crude_experiment(model.as_ref(), 5.0, 2_000, 100_000, 2, 1).unwrap();
    let se = (bg.stderr.powi(2) + crude.stderr.powi(2)).sqrt();
    assert!((bg.mean - crude.mean).abs() < 4.0 * se, "bg {} vs crude {}", bg.mean, crude.mean);
}

#[test]
fn summaries_count_steps_and_variates() {
    let plan = weibull_plan(10.0);
    let s = bg_experiment(&plan, 10.0, 500, 5, 1).unwrap();
    assert_eq!(s.n, 500);
    assert!(s.mean_steps >= 1.0 && s.mean_variates >= s.mean_steps);
    assert!(s.ci95.0 < s.mean && s.mean < s.ci95.1);
    assert!(s.sampler.acceptance_rate() > 0.05);
}

/// `P(W > b)` for the M/G/1 queue by the Pollaczek-Khinchine series
/// `(1 - ρ) Σ ρ^n P(S_n > b)`, where `S_n` sums `n` equilibrium service
/// times with tail `(1 + t)^{-1.5}`. Each cell of width `h` is put at its
/// left or right end, which brackets the exact value.
fn pollaczek_khinchine_bracket(b: f64, h: f64) -> (f64, f64) {
    let rho: f64 = 0.5;
    let n = (b / h).round() as usize;
    let cdf = |t: f64| 1.0 - (1.0 + t).powf(-1.5);
    let masses: Vec<f64> = (0..n).map(|k| cdf((k + 1) as f64 * h) - cdf(k as f64 * h)).collect();
    let tail = |shift: usize| {
        let mut f = vec![0.0; n + 1];
        for (k, m) in masses.iter().enumerate() {
            f[k + shift] = *m;
        }
        let mut cur = f.clone();
        let mut total = 0.0;
        let mut weight = rho;
        while weight > 1e-17 {
            total += weight * (1.0 - cur.iter().sum::<f64>());
            let mut next = vec![0.0; n + 1];
            for (i, &c) in cur.iter().enumerate().filter(|(_, c)| **c != 0.0) {
                for (j, &fj) in f[..=n - i].iter().enumerate() {
                    next[i + j] += c * fj;
                }
            }
            cur = next;
            weight *= rho;
        }
        (1.0 - rho) * total
    };
    (tail(0), tail(1))
}

#[test]
fn pareto_estimate_matches_the_queueing_formula() {
    let (lo, hi) = pollaczek_khinchine_bracket(100.0, 0.05);
    assert!(hi / lo - 1.0 < 5e-3, "bracket [{lo}, {hi}]");
    let approx = Arc::new(Approximation::new(Arc::new(ParetoMG1::new())).unwrap());
    let safety = optimize_gamma(&approx, GAMMA_GRID, -200.0, 1.0).unwrap();
    let plan = BgPlan::new(approx, safety, SamplerConfig::default(), 100.0).unwrap();
    let s = bg_experiment(&plan, 100.0, 20_000, 11, 2).unwrap();
    let gap = if s.mean < lo { lo - s.mean } else { (s.mean - hi).max(0.0) };
    assert!(gap < 4.0 * s.stderr, "{} +- {} vs [{lo}, {hi}]", s.mean, s.stderr);
}
