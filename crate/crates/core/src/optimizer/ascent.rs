use nalgebra::DMatrix;

use crate::comb::{primed, Channel, ChannelRef, ControlComb, ProcessTensor, SlotStructure};
use crate::error::Result;
use crate::linalg::{herm_eig_matrix, MultiLegMatrix};
use crate::quantifiers::plogp;
use crate::scalar::{c, Real, C};

use super::project::cptp_project;
use super::Objective;

/// Eigenvalue floor inside logarithms of gradients.
const LOG_FLOOR: f64 = 1e-14;
const MAX_HALVINGS: usize = 40;

/// Objective restricted to one channel, all others fixed.
pub(crate) trait LocalObjective<R: Real> {
    /// Labels `(out, in)` of the channel's legs.
    fn labels(&self) -> (&str, &str);
    fn value(&self, j: &MultiLegMatrix<R>) -> Result<R>;
    /// Hermitian `K` with `df = Re tr(K dJ)`, on the legs of `j`.
    fn gradient(&self, j: &MultiLegMatrix<R>) -> Result<DMatrix<C<R>>>;
}

/// Objective of a whole control comb.
pub(crate) trait CombObjective<R: Real>: Sync {
    fn value(&self, z: &ControlComb<R>) -> Result<R>;
    fn local<'a>(&'a self, z: &ControlComb<R>, r: ChannelRef) -> Result<Box<dyn LocalObjective<R> + 'a>>;
}

/// Scalar function of a linked process and its Euclidean gradient.
#[derive(Clone, Debug)]
pub(crate) struct Surrogate {
    objective: Objective,
    singles: Vec<String>,
    pairs: Vec<[String; 2]>,
}

fn log2_floored<R: Real>(v: R) -> R {
    let floor = R::tol(LOG_FLOOR);
    if v > floor {
        v.log2()
    } else {
        floor.log2()
    }
}

/// `sign · S(P_A)` and, optionally, its gradient `−sign · (log₂ P_A + 1/ln 2) ⊗ 1`.
pub(crate) fn entropy_term<R: Real>(
    p: &MultiLegMatrix<R>,
    keep: &[&str],
    sign: R,
    grad: Option<&mut DMatrix<C<R>>>,
) -> Result<R> {
    let local = if keep.len() == p.legs().len() {
        p.clone()
    } else {
        p.marginal(keep)?
    };
    let eig = herm_eig_matrix(local.hermitian_part().entries());
    let s = -plogp(&eig.values);
    if let Some(g) = grad {
        let inv_ln2 = R::one() / R::lit(std::f64::consts::LN_2);
        let log = MultiLegMatrix::new(eig.map_values(|v| log2_floored(v) + inv_ln2), local.legs().to_vec())?;
        let rest: Vec<_> = p
            .legs()
            .iter()
            .filter(|l| !keep.contains(&l.label.as_str()))
            .cloned()
            .collect();
        let full = log
            .tensor(&MultiLegMatrix::identity(rest)?)?
            .permute(&p.labels())?;
        *g -= full.entries() * c(sign);
    }
    Ok(sign * s)
}

impl Surrogate {
    /// Surrogate on the primed legs of a process with slot structure `slots`.
    pub(crate) fn new(objective: Objective, slots: &SlotStructure) -> Self {
        let singles = slots.choi_labels().iter().map(|l| primed(l)).collect();
        let pairs = slots
            .channel_pairs()
            .into_iter()
            .map(|(a, b)| [primed(&a.label), primed(&b.label)])
            .collect();
        Self {
            objective,
            singles,
            pairs,
        }
    }

    fn eval<R: Real>(&self, p: &MultiLegMatrix<R>, mut grad: Option<&mut DMatrix<C<R>>>) -> Result<R> {
        let all: Vec<&str> = p.labels();
        let one = R::one();
        let mut total = R::zero();
        let (use_singles, use_pairs, use_full) = match self.objective {
            Objective::TotalInfo => (Some(one), None, Some(-one)),
            Objective::MarkovInfo => (Some(one), Some(-one), None),
            Objective::NonMarkovianity => (None, Some(one), Some(-one)),
            Objective::LambdaMaxProxy => {
                let eig = herm_eig_matrix(p.hermitian_part().entries());
                if let Some(g) = grad {
                    let v = eig.vectors.column(0);
                    *g += v * v.adjoint();
                }
                return Ok(eig.values[0]);
            }
        };
        if let Some(sign) = use_singles {
            for l in &self.singles {
                total += entropy_term(p, &[l.as_str()], sign, grad.as_deref_mut())?;
            }
        }
        if let Some(sign) = use_pairs {
            for [a, b] in &self.pairs {
                total += entropy_term(p, &[a.as_str(), b.as_str()], sign, grad.as_deref_mut())?;
            }
        }
        if let Some(sign) = use_full {
            total += entropy_term(p, &all, sign, grad)?;
        }
        Ok(total)
    }

    pub(crate) fn value<R: Real>(&self, p: &MultiLegMatrix<R>) -> Result<R> {
        self.eval(p, None)
    }

    /// Hermitian gradient on the legs of `p`, in `p`'s leg order.
    pub(crate) fn gradient<R: Real>(&self, p: &MultiLegMatrix<R>) -> Result<DMatrix<C<R>>> {
        let n = p.dim();
        let mut g = DMatrix::from_element(n, n, C::new(R::zero(), R::zero()));
        self.eval(p, Some(&mut g))?;
        Ok(g)
    }
}

/// Maps a gradient `G` with respect to `P = env ⋆ J` back to `J`.
pub(crate) fn pullback<R: Real>(
    env: &MultiLegMatrix<R>,
    p: &MultiLegMatrix<R>,
    g: &DMatrix<C<R>>,
    labels: (&str, &str),
) -> Result<DMatrix<C<R>>> {
    let gt = MultiLegMatrix::new(g.transpose(), p.legs().to_vec())?;
    let l = gt.link(env)?.permute(&[labels.0, labels.1])?;
    let ratio = R::from_usize(l.dim()).unwrap() / R::from_usize(p.dim()).unwrap();
    let k = l.entries().transpose() * c(ratio);
    Ok((&k + k.adjoint()) * c(R::lit(0.5)))
}

struct QuantifierLocal<'a, R: Real> {
    surrogate: &'a Surrogate,
    env: MultiLegMatrix<R>,
    labels: (String, String),
}

impl<R: Real> LocalObjective<R> for QuantifierLocal<'_, R> {
    fn labels(&self) -> (&str, &str) {
        (&self.labels.0, &self.labels.1)
    }

    fn value(&self, j: &MultiLegMatrix<R>) -> Result<R> {
        self.surrogate.value(&self.env.link(j)?)
    }

    fn gradient(&self, j: &MultiLegMatrix<R>) -> Result<DMatrix<C<R>>> {
        let p = self.env.link(j)?;
        let g = self.surrogate.gradient(&p)?;
        pullback(&self.env, &p, &g, self.labels())
    }
}

/// `I`, `M`, `N` or `λ_max` of `⟦t | z⟧` as a function of the comb.
pub(crate) struct QuantifierObjective<'a, R: Real> {
    t: &'a ProcessTensor<R>,
    surrogate: Surrogate,
}

impl<'a, R: Real> QuantifierObjective<'a, R> {
    pub(crate) fn new(t: &'a ProcessTensor<R>, objective: Objective, mask: &[usize]) -> Self {
        let surrogate = Surrogate::new(objective, &t.slots().without(mask));
        Self { t, surrogate }
    }
}

impl<R: Real> CombObjective<R> for QuantifierObjective<'_, R> {
    fn value(&self, z: &ControlComb<R>) -> Result<R> {
        self.surrogate.value(&z.contract(self.t, None)?)
    }

    fn local<'a>(&'a self, z: &ControlComb<R>, r: ChannelRef) -> Result<Box<dyn LocalObjective<R> + 'a>> {
        Ok(Box::new(QuantifierLocal {
            surrogate: &self.surrogate,
            env: z.contract(self.t, Some(r))?,
            labels: ControlComb::<R>::channel_labels(self.t.slots(), r),
        }))
    }
}

/// Projected gradient ascent on one channel with backtracking; a step is
/// taken only if it strictly increases the objective.
pub(crate) fn ascend_channel<R: Real>(
    local: &dyn LocalObjective<R>,
    start: MultiLegMatrix<R>,
    iters: usize,
) -> Result<(MultiLegMatrix<R>, R)> {
    let (o, i) = local.labels();
    let in_dim = start.legs()[1].dim;
    let mut j = start;
    let mut f = local.value(&j)?;
    if !f.is_finite() {
        return Ok((j, f));
    }
    let mut eta = R::lit(0.5);
    for _ in 0..iters {
        let k = local.gradient(&j)?;
        let norm = k.norm();
        if norm.partial_cmp(&R::tol(1e-14)) != Some(std::cmp::Ordering::Greater) {
            break;
        }
        let dir = k * c(R::one() / norm);
        let mut gain = None;
        for _ in 0..MAX_HALVINGS {
            let trial = MultiLegMatrix::new(j.entries() + &dir * c(eta), j.legs().to_vec())?;
            let cand = cptp_project(&trial, in_dim)?.channel.choi_labelled(o, i);
            let fc = local.value(&cand)?;
            if fc > f {
                gain = Some(fc - f);
                j = cand;
                f = fc;
                break;
            }
            eta *= R::lit(0.5);
        }
        match gain {
            Some(g) if g > R::tol(1e-13) * (R::one() + f.abs()) => {
                eta = (eta * R::lit(2.0)).min(R::lit(2.0));
            }
            _ => break,
        }
    }
    Ok((j, f))
}

/// One see-saw update of channel `r`.
pub(crate) fn improve_channel<R: Real>(
    objective: &dyn CombObjective<R>,
    z: &ControlComb<R>,
    r: ChannelRef,
    iters: usize,
) -> Result<(Channel<R>, R)> {
    let local = objective.local(z, r)?;
    let (o, i) = local.labels();
    let start = z.channel(r).choi_labelled(o, i);
    let (j, f) = ascend_channel(local.as_ref(), start, iters)?;
    Ok((Channel::from_choi_unchecked(j)?, f))
}

/// Outcome of coordinate ascent from one starting comb.
#[derive(Clone, Debug)]
pub(crate) struct Ascent<R: Real> {
    pub comb: ControlComb<R>,
    pub value: R,
    pub trace: Vec<f64>,
    pub converged: bool,
}

/// Sweeps over all channels until the relative change drops below `rel_tol`.
pub(crate) fn ascend_comb<R: Real>(
    objective: &dyn CombObjective<R>,
    mut comb: ControlComb<R>,
    max_sweeps: usize,
    inner_iters: usize,
    rel_tol: f64,
) -> Result<Ascent<R>> {
    let mut f = objective.value(&comb)?;
    let mut trace = vec![f.as_f64()];
    let mut converged = !f.is_finite();
    let mut sweeps = 0;
    while !converged && sweeps < max_sweeps {
        sweeps += 1;
        for r in comb.channel_refs() {
            let (ch, _) = improve_channel(objective, &comb, r, inner_iters)?;
            comb.set_channel(r, ch)?;
        }
        let g = objective.value(&comb)?;
        trace.push(g.as_f64());
        converged = !g.is_finite() || (g - f).abs() <= R::tol(rel_tol) * R::one().max(f.abs());
        f = g;
    }
    Ok(Ascent {
        comb,
        value: f,
        trace,
        converged,
    })
}
