use walkmax::diagnostics::{check_sampler, sampler_plan};
use walkmax::models::ModelSpec;
use walkmax::rng::CountingRng;
use walkmax::sampler::{SamplerConfig, Scheme, SchemeChoice};

fn config(scheme: SchemeChoice) -> SamplerConfig {
    SamplerConfig {
        scheme,
        naive_ceiling: None,
        ..SamplerConfig::default()
    }
}

#[test]
fn automatic_scheme_follows_the_tail_class() {
    let w = sampler_plan(&ModelSpec::WeibullDetArrival, SamplerConfig::default(), 50.0).unwrap();
    assert_eq!(w.scheme(), Scheme::WeibullStratified);
    let p = sampler_plan(&ModelSpec::ParetoMG1, SamplerConfig::default(), 50.0).unwrap();
    assert!(matches!(p.scheme(), Scheme::RegVarMixture { .. }));
}

#[test]
fn draws_are_finite() {
    let plan = sampler_plan(&ModelSpec::ParetoMG1, config(SchemeChoice::RegVar), 100.0).unwrap();
    let mut s = plan.sampler();
    let mut rng = CountingRng::seed_from_u64(3);
    for _ in 0..10_000 {
        assert!(s.sample(40.0, &mut rng).unwrap().is_finite());
    }
}

#[test]
fn specialized_schemes_match_the_conditional_law() {
    for (spec, scheme) in [
        (ModelSpec::WeibullDetArrival, SchemeChoice::Stratified),
        (ModelSpec::ParetoMG1, SchemeChoice::RegVar),
    ] {
        let plan = sampler_plan(&spec, config(scheme), 30.0).unwrap();
        for beta in [5.0, 30.0] {
            let c = check_sampler(&plan, beta, 20_000, 17, 10).unwrap();
            assert!(c.passes(0.001), "{spec:?} at {beta}: {c:?}");
            let rel = (c.acceptance_rate - c.predicted_acceptance).abs() / c.predicted_acceptance;
            assert!(rel < 0.05, "acceptance {} vs predicted {}", c.acceptance_rate, c.predicted_acceptance);
        }
    }
}

#[test]
fn naive_rejection_respects_its_ceiling() {
    let cfg = SamplerConfig {
        scheme: SchemeChoice::Naive,
        ..SamplerConfig::default()
    };
    let plan = sampler_plan(&ModelSpec::WeibullDetArrival, cfg, 500.0).unwrap();
    let mut s = plan.sampler();
    let mut rng = CountingRng::seed_from_u64(2);
    assert!(s.sample(20.0, &mut rng).is_ok());
    assert!(matches!(s.sample(60.0, &mut rng), Err(walkmax::Error::SamplerPrecondition { .. })));
}

#[test]
fn proposal_cap_turns_into_a_sampler_failure() {
    let cfg = SamplerConfig {
        scheme: SchemeChoice::Naive,
        naive_ceiling: None,
        proposal_cap: 1,
        ..SamplerConfig::default()
    };
    let plan = sampler_plan(&ModelSpec::ParetoMG1, cfg, 200.0).unwrap();
    let mut s = plan.sampler();
    let mut rng = CountingRng::seed_from_u64(1);
    let failures = (0..200).filter(|_| s.sample(200.0, &mut rng).is_err()).count();
    assert!(failures > 150);
}
