use std::collections::BTreeSet;

use crate::error::{Error, Result};
use crate::linalg::{max_entangled, LegSpec, MultiLegMatrix};
use crate::scalar::{c, Real};

use super::channel::Channel;
use super::process::ProcessTensor;
use super::slots::SlotStructure;

/// Addresses one channel of a [`ControlComb`].
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum ChannelRef {
    /// Pre-processing `V` at time `k` (`0` is `t_i`).
    Pre(usize),
    /// Post-processing `W` at time `k + 1` (`n` is `t_f`).
    Post(usize),
}

/// Control comb built from independent per-time instruments.
///
/// `pre[k]` feeds the process at `t_k` (`k = 0..=n`), `post[k]` acts on what
/// the process emits at `t_{k+1}`. Times in `mask` are closed with identity
/// channels after the instruments act, which coarse-grains them away.
#[derive(Clone, Debug, PartialEq)]
pub struct ControlComb<R: Real = f64> {
    pre: Vec<Channel<R>>,
    post: Vec<Channel<R>>,
    mask: BTreeSet<usize>,
}

pub(crate) fn primed(label: &str) -> String {
    format!("{label}#")
}

impl<R: Real> ControlComb<R> {
    pub fn new(pre: Vec<Channel<R>>, post: Vec<Channel<R>>, mask: impl IntoIterator<Item = usize>) -> Result<Self> {
        if pre.len() != post.len() || pre.is_empty() {
            return Err(Error::Chaining(format!(
                "need equally many pre and post channels, got {} and {}",
                pre.len(),
                post.len()
            )));
        }
        Self {
            pre,
            post,
            mask: BTreeSet::new(),
        }
        .with_mask(mask)
    }

    /// Identity instruments at every time, nothing masked.
    pub fn trivial(slots: &SlotStructure) -> Self {
        let n = slots.n_slots();
        Self {
            pre: (0..=n).map(|k| Channel::identity(slots.out_dim(k))).collect(),
            post: (0..=n).map(|k| Channel::identity(slots.in_dim(k + 1))).collect(),
            mask: BTreeSet::new(),
        }
    }

    /// Replaces the coarse-graining mask (intermediate indices `1..=n`).
    pub fn with_mask(mut self, mask: impl IntoIterator<Item = usize>) -> Result<Self> {
        let n = self.n_slots();
        let mask: BTreeSet<usize> = mask.into_iter().collect();
        for &k in &mask {
            if k == 0 || k > n {
                return Err(Error::UnknownTime(format!("intermediate index {k}")));
            }
            if self.post[k - 1].out_dim() != self.pre[k].in_dim() {
                return Err(Error::Chaining(format!(
                    "masked time {k}: post output dimension {} differs from pre input dimension {}",
                    self.post[k - 1].out_dim(),
                    self.pre[k].in_dim()
                )));
            }
        }
        self.mask = mask;
        Ok(self)
    }

    /// Masks every intermediate time.
    pub fn with_full_mask(self) -> Result<Self> {
        let n = self.n_slots();
        self.with_mask(1..=n)
    }

    pub fn n_slots(&self) -> usize {
        self.pre.len() - 1
    }

    pub fn pre(&self) -> &[Channel<R>] {
        &self.pre
    }

    pub fn post(&self) -> &[Channel<R>] {
        &self.post
    }

    pub fn mask(&self) -> &BTreeSet<usize> {
        &self.mask
    }

    /// All `2(n+1)` channel addresses, ordered by time.
    pub fn channel_refs(&self) -> Vec<ChannelRef> {
        (0..=self.n_slots())
            .flat_map(|k| [ChannelRef::Pre(k), ChannelRef::Post(k)])
            .collect()
    }

    pub fn channel(&self, r: ChannelRef) -> &Channel<R> {
        match r {
            ChannelRef::Pre(k) => &self.pre[k],
            ChannelRef::Post(k) => &self.post[k],
        }
    }

    /// Replaces one channel; the replacement must keep its dimensions.
    pub fn set_channel(&mut self, r: ChannelRef, ch: Channel<R>) -> Result<()> {
        let old = self.channel(r);
        if (old.in_dim(), old.out_dim()) != (ch.in_dim(), ch.out_dim()) {
            return Err(Error::Chaining(format!(
                "replacement for {r:?} maps {} -> {}, expected {} -> {}",
                ch.in_dim(),
                ch.out_dim(),
                old.in_dim(),
                old.out_dim()
            )));
        }
        match r {
            ChannelRef::Pre(k) => self.pre[k] = ch,
            ChannelRef::Post(k) => self.post[k] = ch,
        }
        Ok(())
    }

    /// Checks that the instruments fit the legs of `slots`.
    pub fn check_chaining(&self, slots: &SlotStructure) -> Result<()> {
        let n = slots.n_slots();
        if self.n_slots() != n {
            return Err(Error::SlotMismatch(self.n_slots(), n));
        }
        for k in 0..=n {
            if self.pre[k].out_dim() != slots.out_dim(k) {
                return Err(Error::Chaining(format!(
                    "pre channel at time {k} outputs dimension {}, process accepts {}",
                    self.pre[k].out_dim(),
                    slots.out_dim(k)
                )));
            }
            if self.post[k].in_dim() != slots.in_dim(k + 1) {
                return Err(Error::Chaining(format!(
                    "post channel at time {} accepts dimension {}, process emits {}",
                    k + 1,
                    self.post[k].in_dim(),
                    slots.in_dim(k + 1)
                )));
            }
        }
        Ok(())
    }

    /// Slot structure of the linked process.
    pub fn output_slots(&self, slots: &SlotStructure) -> Result<SlotStructure> {
        self.check_chaining(slots)?;
        let n = slots.n_slots();
        let mut out = slots.clone();
        for k in 0..=n {
            out.set_out_dim(k, self.pre[k].in_dim());
            out.set_in_dim(k + 1, self.post[k].out_dim());
        }
        let drop: Vec<usize> = self.mask.iter().copied().collect();
        Ok(out.without(&drop))
    }

    /// `⟦t | Z⟧`, contracting one instrument at a time.
    pub fn link(&self, t: &ProcessTensor<R>) -> Result<ProcessTensor<R>> {
        let out_slots = self.output_slots(t.slots())?;
        let x = self.contract(t, None)?;
        relabel_output(x, out_slots)
    }

    /// `⟦t | Z⟧` through the materialized comb Choi.
    pub fn link_materialized(&self, t: &ProcessTensor<R>) -> Result<ProcessTensor<R>> {
        let slots = t.slots();
        let out_slots = self.output_slots(slots)?;
        let mut x = t.choi().link(&self.materialize(slots)?)?;
        for &k in &self.mask {
            x = x.link(&self.closure(slots, k)?)?;
        }
        relabel_output(x, out_slots)
    }

    fn closure(&self, slots: &SlotStructure, k: usize) -> Result<MultiLegMatrix<R>> {
        max_entangled(
            self.pre[k].in_dim(),
            &primed(&slots.in_leg(k).label),
            &primed(&slots.out_leg(k).label),
        )
    }

    /// Labels `(out, in)` under which channel `r` enters the contraction.
    ///
    /// Process-side legs keep their label, experimenter-side legs are primed.
    pub(crate) fn channel_labels(slots: &SlotStructure, r: ChannelRef) -> (String, String) {
        match r {
            ChannelRef::Pre(k) => {
                let out = slots.out_leg(k).label.clone();
                let p = primed(&out);
                (out, p)
            }
            ChannelRef::Post(k) => {
                let inl = slots.in_leg(k + 1).label.clone();
                (primed(&inl), inl)
            }
        }
    }

    /// Contracts `t` with every instrument except `skip` and with the
    /// identity closures, in time order so that masked legs disappear early.
    ///
    /// The result carries primed labels for the experimenter-side legs and,
    /// when `skip` is set, the two legs of the skipped channel.
    pub(crate) fn contract(&self, t: &ProcessTensor<R>, skip: Option<ChannelRef>) -> Result<MultiLegMatrix<R>> {
        let slots = t.slots();
        self.check_chaining(slots)?;
        let mut x = t.choi().clone();
        for k in 0..=slots.n_slots() {
            for r in [ChannelRef::Pre(k), ChannelRef::Post(k)] {
                if skip != Some(r) {
                    let (o, i) = Self::channel_labels(slots, r);
                    x = x.link(&self.channel(r).choi_labelled(&o, &i))?;
                }
                if r == ChannelRef::Pre(k) && self.mask.contains(&k) {
                    x = x.link(&self.closure(slots, k)?)?;
                }
            }
        }
        Ok(x)
    }

    /// Full Choi `W_f ⊗ V_n ⊗ W_n ⊗ … ⊗ V_i` on the process legs and their
    /// primed (`label#`) counterparts on the experimenter side.
    pub fn materialize(&self, slots: &SlotStructure) -> Result<MultiLegMatrix<R>> {
        self.check_chaining(slots)?;
        let n = slots.n_slots();
        let mut z = MultiLegMatrix::scalar(c(R::one()));
        for k in (0..=n).rev() {
            let inl = &slots.in_leg(k + 1).label;
            let out = &slots.out_leg(k).label;
            z = z.tensor(&self.post[k].choi_labelled(&primed(inl), inl))?;
            z = z.tensor(&self.pre[k].choi_labelled(out, &primed(out)))?;
        }
        Ok(z)
    }

    /// The comb that applies `self` and then `next` to the resulting process.
    ///
    /// `next` acts on the slots left after `self`'s mask; the result satisfies
    /// `⟦t | self.then(next)⟧ = ⟦⟦t | self⟧ | next⟧`.
    pub fn then(&self, next: &ControlComb<R>) -> Result<Self> {
        let n = self.n_slots();
        let mut kept = vec![0];
        kept.extend((1..=n).filter(|k| !self.mask.contains(k)));
        kept.push(n + 1);
        if next.n_slots() + 2 != kept.len() {
            return Err(Error::SlotMismatch(next.n_slots(), kept.len() - 2));
        }
        let mut pre = self.pre.clone();
        let mut post = self.post.clone();
        for j in 0..=next.n_slots() {
            let k = kept[j];
            pre[k] = next.pre[j].then(&self.pre[k])?;
            let p = kept[j + 1] - 1;
            post[p] = self.post[p].then(&next.post[j])?;
        }
        let mask = self
            .mask
            .iter()
            .copied()
            .chain(next.mask.iter().map(|&j| kept[j]));
        Self::new(pre, post, mask)
    }

    /// Lifts a comb acting on `coarse_grain(slots, drop)` to one acting on `slots`.
    pub fn lift(&self, slots: &SlotStructure, drop: &[usize]) -> Result<Self> {
        Self::trivial(slots)
            .with_mask(drop.iter().copied())?
            .then(self)
    }

    /// Instrument-wise tensor product; both masks must agree.
    pub fn parallel(&self, other: &ControlComb<R>) -> Result<Self> {
        if self.n_slots() != other.n_slots() {
            return Err(Error::SlotMismatch(self.n_slots(), other.n_slots()));
        }
        if self.mask != other.mask {
            return Err(Error::Chaining("parallel combs need identical masks".into()));
        }
        let pre = self
            .pre
            .iter()
            .zip(&other.pre)
            .map(|(a, b)| a.parallel(b))
            .collect::<Result<Vec<_>>>()?;
        let post = self
            .post
            .iter()
            .zip(&other.post)
            .map(|(a, b)| a.parallel(b))
            .collect::<Result<Vec<_>>>()?;
        Self::new(pre, post, self.mask.iter().copied())
    }

    /// Comb for `later ∘ earlier` from combs on the two parts; the new
    /// intermediate time is left unmasked.
    pub fn concat(&self, later: &ControlComb<R>) -> Result<Self> {
        let shift = self.n_slots() + 1;
        let pre = self.pre.iter().chain(&later.pre).cloned().collect();
        let post = self.post.iter().chain(&later.post).cloned().collect();
        let mask = self
            .mask
            .iter()
            .copied()
            .chain(later.mask.iter().map(|k| k + shift));
        Self::new(pre, post, mask)
    }
}

impl<R: Real> ControlComb<R> {
    /// Comb on `t` equivalent to `self` on `t ⊗ u` for an uncorrelated `u`
    /// (one that discards its inputs and emits fixed states).
    ///
    /// Pre-processing is followed by discarding the `u` part; post-processing
    /// receives `u`'s state next to `t`'s output. The resulting instruments
    /// change dimension, and `⟦t | result⟧ = ⟦t ⊗ u | self⟧`.
    pub fn absorb_uncorrelated(&self, t: &SlotStructure, u: &ProcessTensor<R>) -> Result<Self> {
        let n = t.n_slots();
        let us = u.slots();
        if self.n_slots() != n || us.n_slots() != n {
            return Err(Error::SlotMismatch(self.n_slots(), n));
        }
        let mut pre = Vec::with_capacity(n + 1);
        let mut post = Vec::with_capacity(n + 1);
        for k in 0..=n {
            let parts = vec![LegSpec::new("o_t", t.out_dim(k)), LegSpec::new("o_u", us.out_dim(k))];
            let j = self.pre[k].choi_labelled("o", "i").split_leg("o", parts)?;
            pre.push(Channel::from_choi_unchecked(j.partial_trace(&["o_u"])?)?);

            let parts = vec![LegSpec::new("i_t", t.in_dim(k + 1)), LegSpec::new("i_u", us.in_dim(k + 1))];
            let j = self.post[k].choi_labelled("o", "i").split_leg("i", parts)?;
            let rho = u
                .choi()
                .marginal(&[&us.in_leg(k + 1).label])?
                .relabel(&[(&us.in_leg(k + 1).label, "i_u")])?;
            post.push(Channel::from_choi_unchecked(rho.link(&j)?)?);
        }
        Self::new(pre, post, self.mask.iter().copied())
    }
}

fn relabel_output<R: Real>(x: MultiLegMatrix<R>, out_slots: SlotStructure) -> Result<ProcessTensor<R>> {
    let names: Vec<(String, String)> = out_slots
        .choi_labels()
        .into_iter()
        .map(|l| (primed(&l), l))
        .collect();
    let pairs: Vec<(&str, &str)> = names.iter().map(|(a, b)| (a.as_str(), b.as_str())).collect();
    ProcessTensor::from_parts(x.relabel(&pairs)?, out_slots)
}

impl<R: Real> ProcessTensor<R> {
    /// `⟦self | z⟧`.
    pub fn link(&self, z: &ControlComb<R>) -> Result<Self> {
        z.link(self)
    }
}
