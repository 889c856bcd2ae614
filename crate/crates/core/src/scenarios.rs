//! Reference processes: the coarse-graining counterexample, random families
//! and models with a known optimal control.

use std::f64::consts::PI;

use nalgebra::DMatrix;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::comb::{Channel, ControlComb, ProcessTensor, SlotStructure};
use crate::error::{Error, Result};
use crate::gates;
use crate::linalg::{LegSpec, MultiLegMatrix};
use crate::optimizer::dd_sequence;
use crate::random::{haar_unitary, random_channel, random_state};
use crate::scalar::{Real, C};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ScenarioKind {
    Counterexample,
    MarkovRandom,
    UncorrelatedRandom,
    HaarRandomEnv,
    PlantedUnitary,
    DephasingStaticEnv,
}

/// Serializable description of a scenario.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioSpec {
    pub kind: ScenarioKind,
    #[serde(default = "two")]
    pub sys_dim: usize,
    #[serde(default = "two")]
    pub env_dim: usize,
    #[serde(default = "one")]
    pub n_slots: usize,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub params: Vec<f64>,
}

fn two() -> usize {
    2
}

fn one() -> usize {
    1
}

/// Coupling angles of the default dephasing scenario.
pub const DEPHASING_ANGLES: [f64; 5] = [0.3, 0.1, 0.25, 0.15, 0.2];

impl ScenarioSpec {
    pub fn new(kind: ScenarioKind) -> Self {
        Self {
            kind,
            sys_dim: 2,
            env_dim: 2,
            n_slots: 1,
            seed: 0,
            params: Vec::new(),
        }
    }

    pub fn with_dims(mut self, sys_dim: usize, env_dim: usize) -> Self {
        self.sys_dim = sys_dim;
        self.env_dim = env_dim;
        self
    }

    pub fn with_slots(mut self, n_slots: usize) -> Self {
        self.n_slots = n_slots;
        self
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn with_params(mut self, params: Vec<f64>) -> Self {
        self.params = params;
        self
    }

    pub fn validate(&self) -> Result<()> {
        let needs_env = matches!(
            self.kind,
            ScenarioKind::HaarRandomEnv | ScenarioKind::PlantedUnitary | ScenarioKind::DephasingStaticEnv
        );
        if self.sys_dim < 2 || (needs_env && self.env_dim < 2) {
            return Err(Error::Config("dimensions must be at least 2".into()));
        }
        match self.kind {
            ScenarioKind::DephasingStaticEnv if self.sys_dim != 2 || self.env_dim != 2 => Err(
                Error::Config("the dephasing scenario is defined for a qubit and a qubit environment".into()),
            ),
            ScenarioKind::PlantedUnitary if self.env_dim != self.sys_dim => Err(Error::Config(
                "the planted scenario needs env_dim equal to sys_dim".into(),
            )),
            ScenarioKind::PlantedUnitary if self.n_slots == 0 => {
                Err(Error::Config("the planted scenario needs at least one slot".into()))
            }
            ScenarioKind::DephasingStaticEnv
                if !self.params.is_empty() && self.params.len() != self.n_slots + 1 =>
            {
                Err(Error::Config(format!(
                    "expected {} coupling angles, got {}",
                    self.n_slots + 1,
                    self.params.len()
                )))
            }
            _ => Ok(()),
        }
    }
}

fn ket0<R: Real>(dim: usize, label: &str) -> MultiLegMatrix<R> {
    let mut v = vec![C::new(R::zero(), R::zero()); dim];
    v[0] = C::new(R::one(), R::zero());
    MultiLegMatrix::pure(&v, vec![LegSpec::new(label, dim)]).expect("normalized")
}

/// One-slot qubit process with `I = 1` whose coarse-graining has `I = 2`.
///
/// The environment is `e₁e₂` in `|0⟩⟨0| ⊗ 1/2`. The first interval swaps
/// `s` and `e₁`; the second dephases `s` completely, swaps `e₁e₂` controlled
/// on `s`, and swaps `s` and `e₁` again.
pub fn build_counterexample<R: Real>() -> ProcessTensor<R> {
    let dims = [2, 2, 2];
    let env = ket0::<R>(2, "e1")
        .tensor(&MultiLegMatrix::maximally_mixed(vec![LegSpec::new("e2", 2)]).unwrap())
        .unwrap()
        .merge_legs(&["e1", "e2"], "env")
        .unwrap();
    let first = Channel::from_unitary(&gates::swap(&dims, 0, 1));
    let tail = gates::swap::<R>(&dims, 0, 1) * gates::controlled_swap(&dims, 0, 1, 2);
    let kraus: Vec<DMatrix<C<R>>> = (0..2)
        .map(|i| {
            let mut p = DMatrix::from_element(2, 2, C::new(R::zero(), R::zero()));
            p[(i, i)] = C::new(R::one(), R::zero());
            &tail * gates::on_subsystem(&dims, 0, &p)
        })
        .collect();
    let second = Channel::from_kraus(&kraus).expect("projectors share a shape");
    ProcessTensor::build(&env, &[first, second], 2).expect("consistent dimensions")
}

/// Builds the process described by `spec`.
pub fn build_random<R: Real>(spec: &ScenarioSpec) -> Result<ProcessTensor<R>> {
    spec.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let (d, n) = (spec.sys_dim, spec.n_slots);
    match spec.kind {
        ScenarioKind::Counterexample => Ok(build_counterexample()),
        ScenarioKind::MarkovRandom => {
            let channels: Vec<Channel<R>> = (0..=n).map(|_| random_channel(d, d, &mut rng)).collect();
            ProcessTensor::from_markov_channels(&channels)
        }
        ScenarioKind::UncorrelatedRandom => {
            let states: Vec<MultiLegMatrix<R>> = (0..=n)
                .map(|_| random_state(LegSpec::new("s", d), &mut rng))
                .collect();
            ProcessTensor::uncorrelated(&states, &vec![d; n + 1])
        }
        ScenarioKind::HaarRandomEnv => {
            let env = random_state(LegSpec::new("env", spec.env_dim), &mut rng);
            let dynamics: Vec<Channel<R>> = (0..=n)
                .map(|_| Channel::from_unitary(&haar_unitary(d * spec.env_dim, &mut rng)))
                .collect();
            ProcessTensor::build(&env, &dynamics, d)
        }
        ScenarioKind::PlantedUnitary | ScenarioKind::DephasingStaticEnv => {
            build_planted(spec).map(|(t, _)| t)
        }
    }
}

/// Process together with a comb that is known to be good for it.
///
/// `planted_unitary`: the environment stores the initial input while the
/// system carries `P|0⟩` to `t_1`; the last interval shifts the stored
/// input by the returned system state. The comb undoes `P` at `t_1`, so the
/// coarse-grained result is the identity channel.
///
/// `dephasing_static_env`: `exp(-i θ_k Z⊗Z)` with a maximally mixed
/// environment; the comb is the `X, Z, X, Z, …` sequence.
pub fn build_planted<R: Real>(spec: &ScenarioSpec) -> Result<(ProcessTensor<R>, ControlComb<R>)> {
    spec.validate()?;
    match spec.kind {
        ScenarioKind::PlantedUnitary => planted_unitary(spec),
        ScenarioKind::DephasingStaticEnv => dephasing_static_env(spec),
        other => Err(Error::Config(format!("{other:?} has no planted comb"))),
    }
}

/// The rotation hidden in the planted scenario.
pub fn planted_rotation<R: Real>(spec: &ScenarioSpec) -> DMatrix<C<R>> {
    if spec.sys_dim == 2 {
        gates::ry(spec.params.first().copied().unwrap_or(PI / 3.0))
    } else {
        haar_unitary(spec.sys_dim, &mut ChaCha8Rng::seed_from_u64(spec.seed))
    }
}

fn planted_unitary<R: Real>(spec: &ScenarioSpec) -> Result<(ProcessTensor<R>, ControlComb<R>)> {
    let (d, n) = (spec.sys_dim, spec.n_slots);
    let dims = [d, d];
    let p = planted_rotation::<R>(spec);
    let first = gates::on_subsystem(&dims, 0, &p) * gates::swap(&dims, 0, 1);
    let last = gates::swap::<R>(&dims, 0, 1) * gates::controlled_shift(&dims, 0, 1);
    let mut dynamics = vec![Channel::from_unitary(&first)];
    dynamics.extend((1..n).map(|_| Channel::identity(d * d)));
    dynamics.push(Channel::from_unitary(&last));
    let t = ProcessTensor::build(&ket0(d, "env"), &dynamics, d)?;
    let mut z = ControlComb::trivial(t.slots()).with_full_mask()?;
    z.set_channel(
        crate::comb::ChannelRef::Post(0),
        Channel::from_unitary(&p.adjoint()),
    )?;
    Ok((t, z))
}

fn dephasing_static_env<R: Real>(spec: &ScenarioSpec) -> Result<(ProcessTensor<R>, ControlComb<R>)> {
    let n = spec.n_slots;
    let angles: Vec<f64> = if spec.params.is_empty() {
        (0..=n).map(|k| DEPHASING_ANGLES[k % DEPHASING_ANGLES.len()]).collect()
    } else {
        spec.params.clone()
    };
    let dynamics: Vec<Channel<R>> = angles
        .iter()
        .map(|&th| {
            Channel::from_unitary(&gates::diagonal_phase(&[2, 2], |x| {
                let zz = if x[0] == x[1] { 1.0 } else { -1.0 };
                th * zz
            }))
        })
        .collect();
    let env = MultiLegMatrix::maximally_mixed(vec![LegSpec::new("env", 2)])?;
    let t = ProcessTensor::build(&env, &dynamics, 2)?;
    let z = dd_sequence(n, &crate::optimizer::xzxz(n))?;
    Ok((t, z))
}

/// Coarse-grains every intermediate time, the `m̂ = ∅` reference comb.
pub fn coarse_graining_comb<R: Real>(slots: &SlotStructure) -> ControlComb<R> {
    ControlComb::trivial(slots)
        .with_full_mask()
        .expect("trivial instruments chain")
}
