use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::linalg::{max_entangled, LegSpec, MultiLegMatrix};
use crate::scalar::{c, Real, C};

const OUT: &str = "out";
const IN: &str = "in";

/// CPTP map stored as its unit-trace Choi matrix on legs `(out, in)`.
///
/// `choi = (Λ ⊗ id)(Ψ⁺)`, so `choi[(a, i), (b, j)] = Λ(|i⟩⟨j|)[a, b] / d_in`
/// and trace preservation reads `tr_out choi = 1 / d_in`.
#[derive(Clone, Debug, PartialEq)]
pub struct Channel<R: Real = f64> {
    choi: MultiLegMatrix<R>,
}

/// Deviations of a Choi matrix from the channel conditions.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ChannelDefects {
    pub hermiticity: f64,
    /// `max(0, -λ_min)`.
    pub psd: f64,
    pub trace: f64,
    /// Max-abs deviation of `tr_out J` from `1/d_in`.
    pub trace_preservation: f64,
}

impl ChannelDefects {
    pub fn worst(&self) -> f64 {
        self.hermiticity
            .max(self.psd)
            .max(self.trace)
            .max(self.trace_preservation)
    }
}

pub(crate) fn channel_defects<R: Real>(choi: &MultiLegMatrix<R>) -> ChannelDefects {
    let in_dim = choi.leg_dim(IN).unwrap_or(1);
    let hermiticity = choi.hermiticity_defect().as_f64();
    let eig = crate::linalg::herm_eig_matrix(choi.hermitian_part().entries());
    let min = eig.values.last().copied().unwrap_or(R::zero()).as_f64();
    let trace = (choi.trace().re.as_f64() - 1.0).abs();
    let reduced = choi.partial_trace(&[OUT]).expect("channel has an output leg");
    let target = MultiLegMatrix::<R>::maximally_mixed(vec![LegSpec::new(IN, in_dim)]).unwrap();
    let tp = reduced.max_abs_diff(&target).unwrap().as_f64();
    ChannelDefects {
        hermiticity,
        psd: (-min).max(0.0),
        trace,
        trace_preservation: tp,
    }
}

impl<R: Real> Channel<R> {
    /// Validates a Choi matrix with legs `(out, in)` in that order
    /// (labels are replaced).
    pub fn from_choi(choi: MultiLegMatrix<R>) -> Result<Self> {
        let ch = Self::from_choi_unchecked(choi)?;
        let d = ch.defects();
        if d.worst() > 1e-9_f64.max(R::tol(1e-9).as_f64()) {
            return Err(Error::InvalidChannel(format!("{d:?}")));
        }
        Ok(ch)
    }

    pub(crate) fn from_choi_unchecked(choi: MultiLegMatrix<R>) -> Result<Self> {
        if choi.legs().len() != 2 {
            return Err(Error::InvalidChannel(format!(
                "a channel Choi needs exactly two legs, got {}",
                choi.legs().len()
            )));
        }
        let (a, b) = (choi.legs()[0].label.clone(), choi.legs()[1].label.clone());
        let choi = choi.relabel(&[(&a, "__o"), (&b, "__i")])?;
        let choi = choi.relabel(&[("__o", OUT), ("__i", IN)])?;
        Ok(Self { choi })
    }

    pub(crate) fn from_entries_unchecked(entries: DMatrix<C<R>>, out_dim: usize, in_dim: usize) -> Self {
        Self {
            choi: MultiLegMatrix::new(
                entries,
                vec![LegSpec::new(OUT, out_dim), LegSpec::new(IN, in_dim)],
            )
            .expect("dimensions checked by caller"),
        }
    }

    pub fn identity(dim: usize) -> Self {
        Self {
            choi: max_entangled(dim, OUT, IN).unwrap(),
        }
    }

    /// `ρ ↦ U ρ U†` for a square (or isometric, `d_out × d_in`) matrix.
    pub fn from_unitary(u: &DMatrix<C<R>>) -> Self {
        Self::from_kraus(std::slice::from_ref(u)).expect("single operator is consistent")
    }

    /// `ρ ↦ Σ_k K_k ρ K_k†`; trace preservation is not checked here.
    pub fn from_kraus(ops: &[DMatrix<C<R>>]) -> Result<Self> {
        let first = ops
            .first()
            .ok_or_else(|| Error::InvalidChannel("no Kraus operators".into()))?;
        let (dout, din) = first.shape();
        if ops.iter().any(|k| k.shape() != (dout, din)) {
            return Err(Error::InvalidChannel("Kraus operators differ in shape".into()));
        }
        let n = dout * din;
        let w = c(R::one() / R::from_usize(din).unwrap());
        let mut entries = DMatrix::from_element(n, n, C::new(R::zero(), R::zero()));
        for k in ops {
            let v = DMatrix::from_fn(n, 1, |r, _| k[(r / din, r % din)]);
            entries += &v * v.adjoint() * w;
        }
        Ok(Self::from_entries_unchecked(entries, dout, din))
    }

    /// `ρ ↦ Σ_i ⟨i|ρ|i⟩ |i⟩⟨i|`.
    pub fn completely_dephasing(dim: usize) -> Self {
        let ops: Vec<_> = (0..dim)
            .map(|i| {
                DMatrix::from_fn(dim, dim, |r, s| {
                    if r == i && s == i {
                        c(R::one())
                    } else {
                        c(R::zero())
                    }
                })
            })
            .collect();
        Self::from_kraus(&ops).unwrap()
    }

    /// `ρ ↦ tr(ρ) I/d_out`.
    pub fn maximally_mixing(out_dim: usize, in_dim: usize) -> Self {
        let m = MultiLegMatrix::maximally_mixed(vec![
            LegSpec::new(OUT, out_dim),
            LegSpec::new(IN, in_dim),
        ])
        .unwrap();
        Self { choi: m }
    }

    /// `ρ ↦ tr(ρ) σ`.
    pub fn replacement(state: &MultiLegMatrix<R>, in_dim: usize) -> Result<Self> {
        if state.legs().len() != 1 {
            return Err(Error::InvalidState("replacement state must have one leg".into()));
        }
        let label = state.legs()[0].label.clone();
        let s = state.relabel(&[(&label, OUT)])?;
        let mixed = MultiLegMatrix::maximally_mixed(vec![LegSpec::new(IN, in_dim)])?;
        Self::from_choi_unchecked(s.tensor(&mixed)?)
    }

    pub fn in_dim(&self) -> usize {
        self.choi.legs()[1].dim
    }

    pub fn out_dim(&self) -> usize {
        self.choi.legs()[0].dim
    }

    /// Choi with legs `(out, in)`.
    pub fn choi(&self) -> &MultiLegMatrix<R> {
        &self.choi
    }

    /// Choi with the two legs renamed.
    pub fn choi_labelled(&self, out_label: &str, in_label: &str) -> MultiLegMatrix<R> {
        self.choi
            .relabel(&[(OUT, "__o"), (IN, "__i")])
            .and_then(|m| m.relabel(&[("__o", out_label), ("__i", in_label)]))
            .expect("distinct labels")
    }

    pub fn defects(&self) -> ChannelDefects {
        channel_defects(&self.choi)
    }

    /// `after ∘ self`.
    pub fn then(&self, after: &Channel<R>) -> Result<Self> {
        if self.out_dim() != after.in_dim() {
            return Err(Error::DimensionMismatch(format!(
                "cannot compose a channel with output dimension {} into one with input dimension {}",
                self.out_dim(),
                after.in_dim()
            )));
        }
        let first = self.choi_labelled("mid", "in");
        let second = after.choi_labelled("out", "mid");
        let linked = first.link(&second)?.permute(&["out", "in"])?;
        Ok(Self { choi: linked })
    }

    /// `self ⊗ other` on fused legs (`self` most significant).
    pub fn parallel(&self, other: &Channel<R>) -> Result<Self> {
        let a = self.choi_labelled("ao", "ai");
        let b = other.choi_labelled("bo", "bi");
        let m = a
            .tensor(&b)?
            .permute(&["ao", "bo", "ai", "bi"])?
            .merge_legs(&["ao", "bo"], OUT)?
            .merge_legs(&["ai", "bi"], IN)?;
        Ok(Self { choi: m })
    }

    /// Applies the channel to a single-leg state.
    pub fn apply(&self, state: &MultiLegMatrix<R>) -> Result<MultiLegMatrix<R>> {
        if state.legs().len() != 1 || state.dim() != self.in_dim() {
            return Err(Error::DimensionMismatch(format!(
                "channel expects a single leg of dimension {}",
                self.in_dim()
            )));
        }
        let label = state.legs()[0].label.clone();
        let s = state.relabel(&[(&label, IN)])?;
        s.link(&self.choi)?.relabel(&[(OUT, &label)])
    }

    /// Largest entrywise deviation between the two Choi matrices.
    pub fn distance(&self, other: &Channel<R>) -> Result<R> {
        self.choi.max_abs_diff(&other.choi)
    }
}
