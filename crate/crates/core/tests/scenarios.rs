use combres::optimizer::{estimate_monotone, evaluate, Objective, OptimizerConfig};
use combres::quantifiers::{markov_info, non_markovianity, total_info};
use combres::scenarios::{build_counterexample, build_planted, build_random, ScenarioKind, ScenarioSpec};
use combres::ProcessTensor64;

#[test]
fn counterexample_gains_information_when_coarse_grained() {
    let t: ProcessTensor64 = build_counterexample();
    assert!(t.validate().passes());
    assert!((total_info(&t).unwrap() - 1.0).abs() < 1e-8);
    let cg = t.coarse_grain_all();
    assert!((total_info(&cg).unwrap() - 2.0).abs() < 1e-8);
    assert!(non_markovianity(&t).unwrap() > 1e-3);
}

#[test]
fn markov_random_has_no_non_markovianity() {
    for seed in 0..5 {
        let spec = ScenarioSpec::new(ScenarioKind::MarkovRandom).with_slots(2).with_seed(seed);
        let t: ProcessTensor64 = build_random(&spec).unwrap();
        assert!(t.validate().passes());
        assert!(non_markovianity(&t).unwrap().abs() < 1e-9);
        let i = total_info(&t).unwrap();
        let m = markov_info(&t).unwrap();
        assert!((i - m).abs() < 1e-9);
    }
}

#[test]
fn every_scenario_is_a_valid_process() {
    for kind in [
        ScenarioKind::Counterexample,
        ScenarioKind::MarkovRandom,
        ScenarioKind::UncorrelatedRandom,
        ScenarioKind::HaarRandomEnv,
        ScenarioKind::PlantedUnitary,
        ScenarioKind::DephasingStaticEnv,
    ] {
        let spec = ScenarioSpec::new(kind).with_slots(2).with_seed(7);
        let t: ProcessTensor64 = build_random(&spec).unwrap();
        let d = t.validate();
        assert!(d.passes(), "{kind:?}: {d:?}");
    }
}

#[test]
fn planted_comb_reaches_the_ceiling() {
    for n in 1..=2 {
        let spec = ScenarioSpec::new(ScenarioKind::PlantedUnitary).with_slots(n);
        let (t, z) = build_planted::<f64>(&spec).unwrap();
        let v = evaluate(&t, &z, Objective::TotalInfo).unwrap();
        assert!((v - 2.0).abs() < 1e-9, "n = {n}: {v}");
        let trivial = total_info(&t.coarse_grain_all()).unwrap();
        assert!(trivial < 2.0 - 1e-3);
    }
}

#[test]
fn optimizer_finds_two_bits_on_counterexample() {
    let t: ProcessTensor64 = build_counterexample();
    let cfg = OptimizerConfig::default().with_restarts(4);
    let r = estimate_monotone(&t, &cfg).unwrap();
    assert!(r.best_value > 2.0 - 1e-6, "{r:?}");
}
