use crate::error::{Error, Result};
use crate::linalg::{max_entangled, LegSpec, MultiLegMatrix};
use crate::scalar::Real;

use super::channel::Channel;
use super::control::ControlComb;
use super::slots::SlotStructure;

const SYS: &str = "__sys";
const ENV: &str = "__env";

/// Multitime process: a unit-trace comb Choi matrix over a [`SlotStructure`].
///
/// The Choi legs are always stored in the canonical order of
/// [`SlotStructure::choi_legs`].
#[derive(Clone, Debug, PartialEq)]
pub struct ProcessTensor<R: Real = f64> {
    choi: MultiLegMatrix<R>,
    slots: SlotStructure,
}

/// Outcome of [`ProcessTensor::validate`].
#[derive(Clone, Debug, PartialEq)]
pub struct Diagnostics {
    pub hermiticity_defect: f64,
    pub psd_defect: f64,
    pub trace_defect: f64,
    /// One entry per causality level, starting from `t_f`.
    pub causality_defects: Vec<f64>,
    pub tolerance: f64,
}

impl Diagnostics {
    pub fn worst(&self) -> f64 {
        self.causality_defects
            .iter()
            .copied()
            .fold(self.hermiticity_defect.max(self.psd_defect).max(self.trace_defect), f64::max)
    }

    pub fn passes(&self) -> bool {
        self.worst() <= self.tolerance
    }
}

impl<R: Real> ProcessTensor<R> {
    /// Wraps a Choi matrix, reordering its legs canonically, and validates it.
    pub fn new(choi: MultiLegMatrix<R>, slots: SlotStructure) -> Result<Self> {
        let t = Self::from_parts(choi, slots)?;
        let d = t.validate();
        if !d.passes() {
            return Err(Error::InvalidProcess(format!(
                "validation failed with worst defect {:.3e}: {d:?}",
                d.worst()
            )));
        }
        Ok(t)
    }

    /// Same as [`ProcessTensor::new`] without the validity checks.
    pub fn from_parts(choi: MultiLegMatrix<R>, slots: SlotStructure) -> Result<Self> {
        let legs = slots.choi_legs();
        if choi.legs().len() != legs.len() {
            return Err(Error::DimensionMismatch(format!(
                "Choi has {} legs, slot structure expects {}",
                choi.legs().len(),
                legs.len()
            )));
        }
        for leg in &legs {
            match choi.leg_dim(&leg.label) {
                Some(d) if d == leg.dim => {}
                Some(d) => {
                    return Err(Error::DimensionMismatch(format!(
                        "leg `{}` has dimension {d}, slot structure says {}",
                        leg.label, leg.dim
                    )))
                }
                None => return Err(Error::UnknownLabel(leg.label.clone())),
            }
        }
        let order: Vec<&str> = legs.iter().map(|l| l.label.as_str()).collect();
        let choi = choi.permute(&order)?;
        Ok(Self { choi, slots })
    }

    pub fn choi(&self) -> &MultiLegMatrix<R> {
        &self.choi
    }

    pub fn slots(&self) -> &SlotStructure {
        &self.slots
    }

    pub fn n_slots(&self) -> usize {
        self.slots.n_slots()
    }

    /// PSD, trace and comb-causality defects.
    ///
    /// Level `k` compares `tr_{in_{k+1}} T_k` with `1/d_{out_k} ⊗ tr_{in_{k+1}, out_k} T_k`,
    /// where `T_k` is the process truncated after `t_k`.
    pub fn validate(&self) -> Diagnostics {
        let herm = self.choi.hermiticity_defect().as_f64();
        let eig = crate::linalg::herm_eig_matrix(self.choi.hermitian_part().entries());
        let min = eig.values.last().copied().unwrap_or(R::zero()).as_f64();
        let trace = (self.choi.trace().re.as_f64() - 1.0).abs();
        let n = self.n_slots();
        let mut level = self.choi.clone();
        let mut causality = Vec::with_capacity(n + 1);
        for k in (0..=n).rev() {
            let inl = self.slots.in_leg(k + 1).label.clone();
            let out = self.slots.out_leg(k).clone();
            let reduced = level.partial_trace(&[&inl]).expect("leg present");
            let lower = reduced.partial_trace(&[&out.label]).expect("leg present");
            let mixed = MultiLegMatrix::maximally_mixed(vec![out]).expect("valid leg");
            let expected = mixed.tensor(&lower).expect("disjoint legs");
            causality.push(reduced.max_abs_diff(&expected).expect("same legs").as_f64());
            level = lower;
        }
        Diagnostics {
            hermiticity_defect: herm,
            psd_defect: (-min).max(0.0),
            trace_defect: trace,
            causality_defects: causality,
            tolerance: R::tol(1e-9).as_f64(),
        }
    }

    /// Markov process in which `channels[k]` maps `out_k` to `in_{k+1}`.
    pub fn from_markov_channels(channels: &[Channel<R>]) -> Result<Self> {
        if channels.is_empty() {
            return Err(Error::InvalidProcess("at least one channel is required".into()));
        }
        let n = channels.len() - 1;
        let mids: Vec<(usize, usize)> = (1..=n)
            .map(|k| (channels[k - 1].out_dim(), channels[k].in_dim()))
            .collect();
        let slots = SlotStructure::with_dims(channels[0].in_dim(), &mids, channels[n].out_dim());
        let mut choi = MultiLegMatrix::scalar(crate::scalar::c(R::one()));
        for ((inl, outl), ch) in slots.channel_pairs().into_iter().zip(channels.iter().rev()) {
            choi = choi.tensor(&ch.choi_labelled(&inl.label, &outl.label))?;
        }
        Self::from_parts(choi, slots)
    }

    /// Fully uncorrelated process: `states[k]` is emitted at `in_{k+1}`
    /// irrespective of anything fed in.
    pub fn uncorrelated(states: &[MultiLegMatrix<R>], out_dims: &[usize]) -> Result<Self> {
        if states.len() != out_dims.len() {
            return Err(Error::DimensionMismatch(
                "one state per input dimension is required".into(),
            ));
        }
        let channels = states
            .iter()
            .zip(out_dims)
            .map(|(s, &d)| Channel::replacement(s, d))
            .collect::<Result<Vec<_>>>()?;
        Self::from_markov_channels(&channels)
    }

    /// Process tensor of a system coupled to an environment.
    ///
    /// `dynamics[k]` acts on `sys ⊗ env` (system most significant) between
    /// `t_k` and `t_{k+1}`; the environment starts in `env_state` (one leg)
    /// and is traced out after the last interval.
    pub fn build(env_state: &MultiLegMatrix<R>, dynamics: &[Channel<R>], sys_dim: usize) -> Result<Self> {
        if env_state.legs().len() != 1 {
            return Err(Error::InvalidState("environment state must have one leg".into()));
        }
        if dynamics.is_empty() {
            return Err(Error::InvalidProcess("at least one dynamics map is required".into()));
        }
        let env_dim = env_state.dim();
        let joint = sys_dim * env_dim;
        for (k, d) in dynamics.iter().enumerate() {
            if d.in_dim() != joint || d.out_dim() != joint {
                return Err(Error::DimensionMismatch(format!(
                    "dynamics {k} acts on dimension {} -> {}, expected {joint}",
                    d.in_dim(),
                    d.out_dim()
                )));
            }
        }
        let n = dynamics.len() - 1;
        let slots = SlotStructure::uniform(n, sys_dim);
        let env_label = env_state.legs()[0].label.clone();
        let mut state = env_state.relabel(&[(&env_label, ENV)])?;
        for (k, d) in dynamics.iter().enumerate() {
            let out = slots.out_leg(k).label.clone();
            let inl = slots.in_leg(k + 1).label.clone();
            state = state.tensor(&max_entangled(sys_dim, SYS, &out)?)?;
            let choi = d
                .choi_labelled("__o", "__i")
                .split_leg("__i", vec![LegSpec::new(SYS, sys_dim), LegSpec::new(ENV, env_dim)])?
                .split_leg("__o", vec![LegSpec::new(&inl, sys_dim), LegSpec::new("__env2", env_dim)])?;
            state = state.link(&choi)?.relabel(&[("__env2", ENV)])?;
        }
        let choi = state.partial_trace(&[ENV])?;
        Self::from_parts(choi, slots)
    }

    /// Tensor product of the two-leg marginals on `(in_{k+1}, out_k)`.
    pub fn markov_marginal(&self) -> Self {
        let mut choi = MultiLegMatrix::scalar(crate::scalar::c(R::one()));
        for (inl, outl) in self.slots.channel_pairs() {
            let m = self
                .choi
                .marginal(&[&inl.label, &outl.label])
                .expect("legs present");
            choi = choi.tensor(&m).expect("disjoint legs");
        }
        Self {
            choi,
            slots: self.slots.clone(),
        }
    }

    /// Tensor product of all single-leg marginals.
    pub fn full_marginal(&self) -> Self {
        let mut choi = MultiLegMatrix::scalar(crate::scalar::c(R::one()));
        for leg in self.slots.choi_legs() {
            let m = self.choi.marginal(&[&leg.label]).expect("leg present");
            choi = choi.tensor(&m).expect("disjoint legs");
        }
        Self {
            choi,
            slots: self.slots.clone(),
        }
    }

    /// Closes the named intermediate times with identity channels.
    pub fn coarse_grain(&self, drop: &[&str]) -> Result<Self> {
        let idx = self.slots.resolve_intermediate(drop)?;
        self.coarse_grain_indices(&idx)
    }

    /// Closes the intermediate times with the given indices (`1..=n`).
    pub fn coarse_grain_indices(&self, drop: &[usize]) -> Result<Self> {
        let z = ControlComb::trivial(&self.slots).with_mask(drop.iter().copied())?;
        z.link(self)
    }

    /// Closes every intermediate time, leaving a channel from `t_i` to `t_f`.
    pub fn coarse_grain_all(&self) -> Self {
        let all: Vec<usize> = (1..=self.n_slots()).collect();
        self.coarse_grain_indices(&all).expect("indices in range")
    }

    /// `later ∘ self`: `self`'s final time and `later`'s initial time merge
    /// into a new intermediate time. Times are renamed canonically.
    pub fn compose_sequential(&self, later: &Self) -> Result<Self> {
        let (a, b) = (&self.slots, &later.slots);
        let mut mids: Vec<(usize, usize)> = (1..=a.n_slots())
            .map(|k| (a.in_dim(k), a.out_dim(k)))
            .collect();
        mids.push((a.in_dim(a.n_slots() + 1), b.out_dim(0)));
        mids.extend((1..=b.n_slots()).map(|k| (b.in_dim(k), b.out_dim(k))));
        let slots = SlotStructure::with_dims(a.out_dim(0), &mids, b.in_dim(b.n_slots() + 1));
        // canonical order of the joint Choi is exactly `later ⊗ self`
        let entries = later.choi.entries().kronecker(self.choi.entries());
        let choi = MultiLegMatrix::new(entries, slots.choi_legs())?;
        Ok(Self { choi, slots })
    }

    /// `self ⊗ other` on the same times; legs at each time are fused with
    /// `self` more significant. Leg labels and time names follow `self`.
    pub fn compose_parallel(&self, other: &Self) -> Result<Self> {
        if self.n_slots() != other.n_slots() {
            return Err(Error::SlotMismatch(self.n_slots(), other.n_slots()));
        }
        let la = self.slots.choi_legs();
        let lb = other.slots.choi_legs();
        let a = prefixed(&self.choi, "a:")?;
        let b = prefixed(&other.choi, "b:")?;
        let names: Vec<(String, String)> = la
            .iter()
            .zip(&lb)
            .map(|(x, y)| (format!("a:{}", x.label), format!("b:{}", y.label)))
            .collect();
        let order: Vec<&str> = names
            .iter()
            .flat_map(|(x, y)| [x.as_str(), y.as_str()])
            .collect();
        let mut choi = a.tensor(&b)?.permute(&order)?;
        for ((x, y), leg) in names.iter().zip(&la) {
            choi = choi.merge_legs(&[x, y], &leg.label)?;
        }
        let mut slots = self.slots.clone();
        let n = self.n_slots();
        for k in 0..=n + 1 {
            if k <= n {
                slots.set_out_dim(k, self.slots.out_dim(k) * other.slots.out_dim(k));
            }
            if k >= 1 {
                slots.set_in_dim(k, self.slots.in_dim(k) * other.slots.in_dim(k));
            }
        }
        Self::from_parts(choi, slots)
    }

    /// Links a fixed input at every `out_k` and returns the joint state on
    /// the `in` legs, in time order `in_1, …, in_f`.
    ///
    /// Only meaningful for the instantaneous open-loop inputs used in tests
    /// and examples; adaptive inputs go through [`ControlComb`].
    pub fn respond(&self, inputs: &[MultiLegMatrix<R>]) -> Result<MultiLegMatrix<R>> {
        let n = self.n_slots();
        if inputs.len() != n + 1 {
            return Err(Error::SlotMismatch(inputs.len(), n + 1));
        }
        let mut out = self.choi.clone();
        for (k, s) in inputs.iter().enumerate() {
            if s.legs().len() != 1 {
                return Err(Error::InvalidState("inputs must have one leg".into()));
            }
            let label = s.legs()[0].label.clone();
            let target = self.slots.out_leg(k).label.clone();
            out = out.link(&s.relabel(&[(&label, &target)])?)?;
        }
        let order: Vec<String> = (1..=n + 1).map(|k| self.slots.in_leg(k).label.clone()).collect();
        let order: Vec<&str> = order.iter().map(String::as_str).collect();
        out.permute(&order)
    }
}

fn prefixed<R: Real>(m: &MultiLegMatrix<R>, prefix: &str) -> Result<MultiLegMatrix<R>> {
    let names: Vec<(String, String)> = m
        .labels()
        .into_iter()
        .map(|l| (l.to_string(), format!("{prefix}{l}")))
        .collect();
    let pairs: Vec<(&str, &str)> = names.iter().map(|(a, b)| (a.as_str(), b.as_str())).collect();
    m.relabel(&pairs)
}
