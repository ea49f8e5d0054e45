use walkmax::models::{DiscreteLattice, ExpDiff, GaussianDrift, IncrementModel, ModelSpec, ParetoMG1, WeibullDetArrival};
use walkmax::rng::CountingRng;

/// Composite Simpson rule on `[a, b]` with `n` (even) panels.
fn simpson(f: impl Fn(f64) -> f64, a: f64, b: f64, n: usize) -> f64 {
    let h = (b - a) / n as f64;
    let mut s = f(a) + f(b);
    for i in 1..n {
        s += f(a + i as f64 * h) * if i % 2 == 1 { 4.0 } else { 2.0 };
    }
    s * h / 3.0
}

#[test]
fn pareto_tail_matches_direct_integration() {
    let m = ParetoMG1::new();
    for t in [0.0, 1.0, 10.0, 250.0] {
        // P(V - A > t) = E[(1 + t + A)^{-2.5}] with A ~ Exp(3/4); e^{-60} is negligible.
        let direct = simpson(|a: f64| 0.75 * (-0.75 * a).exp() * (1.0 + t + a).powf(-2.5), 0.0, 80.0, 40_000);
        assert!((m.tail(t) / direct - 1.0).abs() < 1e-6, "t = {t}: {} vs {direct}", m.tail(t));
    }
    assert!((m.mean() + 2.0 / 3.0).abs() < 1e-12);
    assert!((m.mean_from_tails() - m.mean()).abs() < 1e-10);
}

#[test]
fn weibull_integrated_tail_matches_quadrature() {
    let m = WeibullDetArrival::new();
    for t in [0.0, 5.0, 50.0] {
        // Substitute s = t + x^2 to tame the stretched exponential.
        let direct = simpson(|x: f64| 2.0 * x * m.tail(t + x * x), 0.0, 60.0, 40_000);
        assert!((m.integrated_tail(t) / direct - 1.0).abs() < 1e-8);
    }
}

#[test]
fn sample_means_agree_with_model_means() {
    let models: Vec<Box<dyn IncrementModel>> = vec![
        Box::new(WeibullDetArrival::new()),
        Box::new(ParetoMG1::new()),
        Box::new(ExpDiff::new(1.0, 0.5).unwrap()),
        Box::new(GaussianDrift::new(0.5, 1.0).unwrap()),
        Box::new(DiscreteLattice::new(vec![-1.0, 1.0], vec![0.7, 0.3]).unwrap()),
    ];
    let n = 200_000;
    for m in models {
        let mut rng = CountingRng::seed_from_u64(11);
        let xs: Vec<f64> = (0..n).map(|_| m.sample(&mut rng)).collect();
        let mean = xs.iter().sum::<f64>() / n as f64;
        let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
        let z = (mean - m.mean()) / (var / n as f64).sqrt();
        assert!(z.abs() < 4.5, "{}: sample mean {mean} vs {} (z = {z})", m.name(), m.mean());
    }
}

#[test]
fn conditional_draws_stay_in_their_interval() {
    let mut rng = CountingRng::seed_from_u64(5);
    for spec in [ModelSpec::WeibullDetArrival, ModelSpec::ParetoMG1, ModelSpec::GaussianDrift { mu: 1.0, sigma: 2.0 }] {
        let m = spec.build().unwrap();
        for (lo, hi) in [(-0.5, 0.5), (3.0, f64::INFINITY), (f64::NEG_INFINITY, -0.2)] {
            for _ in 0..2000 {
                let x = m.sample_between(lo, hi, &mut rng);
                assert!(x > lo && x <= hi, "{}: {x} outside ({lo}, {hi}]", m.name());
            }
        }
    }
}

#[test]
fn invalid_parameters_are_rejected() {
    assert!(ExpDiff::new(0.5, 1.0).is_err());
    assert!(GaussianDrift::new(-0.1, 1.0).is_err());
    assert!(GaussianDrift::new(0.1, 0.0).is_err());
    assert!(DiscreteLattice::new(vec![-1.0, 1.0], vec![0.3, 0.7]).is_err());
    assert!(DiscreteLattice::new(vec![-1.0, 1.0], vec![0.5, 0.4]).is_err());
}

#[test]
fn tail_classes() {
    use walkmax::models::TailClass;
    assert!(matches!(ParetoMG1::new().tail_class(), TailClass::RegularlyVarying { index } if index == 2.5));
    assert_eq!(WeibullDetArrival::new().tail_class(), TailClass::WeibullType);
    assert_eq!(ExpDiff::new(1.0, 0.5).unwrap().tail_class(), TailClass::LightTailed);
}
