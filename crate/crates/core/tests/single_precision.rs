use combres::optimizer::{estimate_monotone, OptimizerConfig};
use combres::quantifiers::{non_markovianity, total_info};
use combres::scenarios::{build_counterexample, build_random, ScenarioKind, ScenarioSpec};
use combres::{ControlComb32, ProcessTensor32};

#[test]
fn counterexample_in_single_precision() {
    let t: ProcessTensor32 = build_counterexample();
    assert!(t.validate().passes());
    assert!((total_info(&t).unwrap() - 1.0).abs() < 1e-4);
    assert!((total_info(&t.coarse_grain_all()).unwrap() - 2.0).abs() < 1e-4);
    assert!(non_markovianity(&t).unwrap() > 0.5);
}

#[test]
fn linking_in_single_precision() {
    let spec = ScenarioSpec::new(ScenarioKind::HaarRandomEnv).with_slots(2).with_seed(3);
    let t: ProcessTensor32 = build_random(&spec).unwrap();
    let out = ControlComb32::trivial(t.slots()).with_mask([1]).unwrap().link(&t).unwrap();
    assert!(out.validate().passes());
    assert_eq!(out.n_slots(), 1);
}

#[test]
fn optimizer_runs_in_single_precision() {
    let t: ProcessTensor32 = build_counterexample();
    let r = estimate_monotone(&t, &OptimizerConfig::default().with_restarts(2)).unwrap();
    assert!(r.best_value > 2.0 - 1e-3, "{}", r.best_value);
}
