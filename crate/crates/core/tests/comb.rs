use combres::quantifiers::{markov_info, non_markovianity, total_info};
use combres::random::{random_channel, random_comb, random_state};
use combres::scenarios::{build_random, ScenarioKind, ScenarioSpec};
use combres::{Channel, ChannelRef, ControlComb, LegSpec, MultiLegMatrix, ProcessTensor, SlotStructure};
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

type T = ProcessTensor<f64>;

/// Entrywise distance of two Choi matrices in canonical leg order; time
/// names may differ.
fn distance(a: &T, b: &T) -> f64 {
    let dims = |t: &T| t.slots().choi_legs().iter().map(|l| l.dim).collect::<Vec<_>>();
    assert_eq!(dims(a), dims(b));
    (a.choi().entries() - b.choi().entries()).iter().map(|z| z.norm()).fold(0.0, f64::max)
}

fn haar_process(n: usize, env: usize, seed: u64) -> T {
    let spec = ScenarioSpec::new(ScenarioKind::HaarRandomEnv)
        .with_slots(n)
        .with_dims(2, env)
        .with_seed(seed);
    build_random(&spec).unwrap()
}

fn subsets(n: usize) -> Vec<Vec<usize>> {
    (0..1usize << n)
        .map(|m| (1..=n).filter(|k| m >> (k - 1) & 1 == 1).collect())
        .collect()
}

#[test]
fn trivial_comb_is_the_identity() {
    for n in 0..=2 {
        let t = haar_process(n, 2, n as u64);
        let out = ControlComb::trivial(t.slots()).link(&t).unwrap();
        assert!(distance(&out, &t) < 1e-13);
    }
}

#[test]
fn linked_processes_are_valid() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for n in 0..=2 {
        let t = haar_process(n, 3, 100 + n as u64);
        for mask in subsets(n) {
            let z = random_comb(t.slots(), &mask, &mut rng);
            let out = z.link(&t).unwrap();
            assert_eq!(out.n_slots(), n - mask.len());
            let d = out.validate();
            assert!(d.passes(), "mask {mask:?}: {d:?}");
        }
    }
}

#[test]
fn contraction_matches_materialized_comb() {
    let mut rng = ChaCha8Rng::seed_from_u64(12);
    for n in 0..=2 {
        let t = haar_process(n, 2, 200 + n as u64);
        for mask in subsets(n) {
            let z = random_comb(t.slots(), &mask, &mut rng);
            let a = z.link(&t).unwrap();
            let b = z.link_materialized(&t).unwrap();
            assert!(distance(&a, &b) < 1e-12, "mask {mask:?}");
        }
    }
}

#[test]
fn composed_combs_act_in_order() {
    let mut rng = ChaCha8Rng::seed_from_u64(13);
    let t = haar_process(2, 2, 300);
    for first in subsets(2) {
        let z = random_comb(t.slots(), &first, &mut rng);
        let mid = z.link(&t).unwrap();
        for second in subsets(mid.n_slots()) {
            let y = random_comb(mid.slots(), &second, &mut rng);
            let direct = y.link(&mid).unwrap();
            let composed = z.then(&y).unwrap().link(&t).unwrap();
            assert!(distance(&direct, &composed) < 1e-12);
        }
    }
}

#[test]
fn lifted_comb_sees_the_coarse_grained_process() {
    let mut rng = ChaCha8Rng::seed_from_u64(14);
    let t = haar_process(2, 2, 400);
    for drop in subsets(2) {
        let cg = t.coarse_grain_indices(&drop).unwrap();
        let y = random_comb(cg.slots(), &[], &mut rng);
        let a = y.link(&cg).unwrap();
        let b = y.lift(t.slots(), &drop).unwrap().link(&t).unwrap();
        assert!(distance(&a, &b) < 1e-12);
    }
}

#[test]
fn coarse_graining_is_associative() {
    let t = haar_process(3, 2, 500);
    let once = t.coarse_grain_all();
    let stepwise = t
        .coarse_grain_indices(&[2])
        .unwrap()
        .coarse_grain_indices(&[1])
        .unwrap()
        .coarse_grain_all();
    assert!(distance(&once, &stepwise) < 1e-13);
}

#[test]
fn parallel_combs_act_on_parallel_processes() {
    let mut rng = ChaCha8Rng::seed_from_u64(15);
    let t = haar_process(1, 2, 600);
    let s = build_random::<f64>(&ScenarioSpec::new(ScenarioKind::MarkovRandom).with_seed(601)).unwrap();
    for mask in subsets(1) {
        let z = random_comb(t.slots(), &mask, &mut rng);
        let w = random_comb(s.slots(), &mask, &mut rng);
        let joint = z.parallel(&w).unwrap().link(&t.compose_parallel(&s).unwrap()).unwrap();
        let separate = z.link(&t).unwrap().compose_parallel(&w.link(&s).unwrap()).unwrap();
        assert!(distance(&joint, &separate) < 1e-12);
    }
}

#[test]
fn concatenated_combs_act_on_sequential_processes() {
    let mut rng = ChaCha8Rng::seed_from_u64(16);
    let t = haar_process(1, 2, 700);
    let s = haar_process(0, 2, 701);
    let z = random_comb(t.slots(), &[1], &mut rng);
    let w = random_comb(s.slots(), &[], &mut rng);
    let joint = z.concat(&w).unwrap().link(&t.compose_sequential(&s).unwrap()).unwrap();
    let separate = z.link(&t).unwrap().compose_sequential(&w.link(&s).unwrap()).unwrap();
    assert!(distance(&joint, &separate) < 1e-12);
}

#[test]
fn uncorrelated_part_can_be_absorbed_into_the_comb() {
    let mut rng = ChaCha8Rng::seed_from_u64(18);
    let t = haar_process(1, 2, 1000);
    let spec = ScenarioSpec::new(ScenarioKind::UncorrelatedRandom).with_dims(3, 1).with_seed(1001);
    let u: T = build_random(&spec).unwrap();
    let tu = t.compose_parallel(&u).unwrap();
    for mask in subsets(1) {
        let z = random_comb(tu.slots(), &mask, &mut rng);
        let reduced = z.absorb_uncorrelated(t.slots(), &u).unwrap();
        let a = z.link(&tu).unwrap();
        let b = reduced.link(&t).unwrap();
        assert!(distance(&a, &b) < 1e-12, "mask {mask:?}");
    }
}

#[test]
fn markov_process_responds_channel_by_channel() {
    let mut rng = ChaCha8Rng::seed_from_u64(17);
    let channels: Vec<Channel<f64>> = vec![random_channel(3, 2, &mut rng), random_channel(2, 3, &mut rng)];
    let t = ProcessTensor::from_markov_channels(&channels).unwrap();
    assert!(t.validate().passes());
    let inputs: Vec<MultiLegMatrix<f64>> = [2, 3]
        .iter()
        .map(|&d| random_state(LegSpec::new("x", d), &mut rng))
        .collect();
    let out = t.respond(&inputs).unwrap();
    let expected = channels[0]
        .apply(&inputs[0])
        .unwrap()
        .tensor(&channels[1].apply(&inputs[1]).unwrap().relabel(&[("x", "y")]).unwrap())
        .unwrap();
    assert!((out.entries() - expected.entries()).iter().all(|z| z.norm() < 1e-13));
}

#[test]
fn sequential_composition_adds_information() {
    for seed in 0..5 {
        let t = haar_process(1, 2, 800 + seed);
        let s = haar_process(1, 3, 900 + seed);
        let joint = t.compose_sequential(&s).unwrap();
        assert!(joint.validate().passes());
        let lhs = total_info(&joint).unwrap();
        let rhs = total_info(&t).unwrap() + total_info(&s).unwrap();
        assert!((lhs - rhs).abs() < 1e-10);
    }
}

#[test]
fn set_channel_rejects_wrong_dimensions() {
    let slots = SlotStructure::uniform(1, 2);
    let mut z = ControlComb::<f64>::trivial(&slots);
    assert!(z.set_channel(ChannelRef::Pre(0), Channel::identity(3)).is_err());
    assert!(z.set_channel(ChannelRef::Post(1), Channel::identity(2)).is_ok());
}

#[test]
fn invalid_choi_is_rejected() {
    let slots = SlotStructure::uniform(0, 2);
    let bad = MultiLegMatrix::<f64>::identity(slots.choi_legs()).unwrap();
    assert!(ProcessTensor::new(bad, slots).is_err());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn total_info_splits_into_markov_and_non_markov(seed in any::<u64>(), n in 0usize..=2, env in 2usize..=3) {
        let t = haar_process(n, env, seed);
        let i = total_info(&t).unwrap();
        let m = markov_info(&t).unwrap();
        let nm = non_markovianity(&t).unwrap();
        prop_assert!((i - (m + nm)).abs() < 1e-9);
        prop_assert!(nm > -1e-9);
        prop_assert!(m > -1e-9);
    }

    #[test]
    fn full_marginal_carries_no_information(seed in any::<u64>(), n in 0usize..=2) {
        let t = haar_process(n, 2, seed);
        prop_assert!(total_info(&t.full_marginal()).unwrap().abs() < 1e-10);
        prop_assert!(non_markovianity(&t.markov_marginal()).unwrap().abs() < 1e-10);
    }

    #[test]
    fn linking_never_breaks_causality(seed in any::<u64>(), mask in 0usize..4) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let t = haar_process(2, 2, seed);
        let mask: Vec<usize> = (1..=2).filter(|k| mask >> (k - 1) & 1 == 1).collect();
        let z = random_comb(t.slots(), &mask, &mut rng);
        prop_assert!(z.link(&t).unwrap().validate().passes());
    }
}
