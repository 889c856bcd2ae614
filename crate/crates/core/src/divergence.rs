//! Reachable comb divergence: the largest relative entropy between two
//! processes pushed through the same independent-instrument comb followed
//! by full coarse-graining.

use std::sync::atomic::{AtomicUsize, Ordering};

use nalgebra::DMatrix;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::comb::{ChannelRef, ControlComb, ProcessTensor, SlotStructure};
use crate::error::{Error, Result};
use crate::linalg::{herm_eig_matrix, max_entangled, MultiLegMatrix};
use crate::optimizer::{
    ascend_comb, estimate_monotone, pullback, Ascent, CombObjective, LocalObjective, Objective, OptimizerConfig,
};
use crate::quantifiers::{rel_entropy, total_info, RelEntropy};
use crate::random::random_unitary_comb;
use crate::scalar::{c, Real, C};

const LOG_FLOOR: f64 = 1e-14;

#[derive(Clone, Debug)]
pub struct DivergenceResult<R: Real = f64> {
    /// Lower bound on the reachable divergence, in bits.
    pub value: RelEntropy<f64>,
    /// Comb attaining `value`; it acts on the reference-augmented processes
    /// when a reference was requested.
    pub witness: ControlComb<R>,
    pub samples_evaluated: usize,
}

/// `S(⟦t|z⟧ ‖ ⟦r|z⟧)` for a comb whose output has no intermediate times.
pub fn comb_divergence<R: Real>(
    t: &ProcessTensor<R>,
    r: &ProcessTensor<R>,
    z: &ControlComb<R>,
) -> Result<RelEntropy<R>> {
    rel_entropy(z.link(t)?.choi(), z.link(r)?.choi())
}

/// Process with a maximally entangled pair between `out_i` and `in_f` and
/// trivial intermediate legs, used to attach a reference system.
pub fn reference_process<R: Real>(n_slots: usize, dim: usize) -> Result<ProcessTensor<R>> {
    let slots = SlotStructure::with_dims(dim, &vec![(1, 1); n_slots], dim);
    let (out_i, in_f) = (slots.out_leg(0).label.clone(), slots.in_leg(n_slots + 1).label.clone());
    let mut choi = max_entangled::<R>(dim, &in_f, &out_i)?;
    for k in 1..=n_slots {
        let legs = vec![slots.in_leg(k).clone(), slots.out_leg(k).clone()];
        choi = choi.tensor(&MultiLegMatrix::identity(legs)?)?;
    }
    ProcessTensor::from_parts(choi, slots)
}

/// `t ⊗ A` with `A` from [`reference_process`]; `dim = 1` returns `t`.
pub fn with_reference<R: Real>(t: &ProcessTensor<R>, dim: usize) -> Result<ProcessTensor<R>> {
    if dim <= 1 {
        return Ok(t.clone());
    }
    t.compose_parallel(&reference_process(t.n_slots(), dim)?)
}

fn log_floored<R: Real>(v: R) -> R {
    v.max(R::tol(LOG_FLOOR)).ln()
}

/// Gradients of `S(P‖Q)` (bits) with respect to `P` and `Q`.
fn divergence_gradients<R: Real>(
    p: &MultiLegMatrix<R>,
    q: &MultiLegMatrix<R>,
) -> (DMatrix<C<R>>, DMatrix<C<R>>) {
    let ln2 = R::lit(std::f64::consts::LN_2);
    let ep = herm_eig_matrix(p.hermitian_part().entries());
    let eq = herm_eig_matrix(q.hermitian_part().entries());
    let n = p.dim();
    let log_p = ep.map_values(log_floored);
    let log_q = eq.map_values(log_floored);
    let gp = (log_p - log_q + DMatrix::identity(n, n)) * c(R::one() / ln2);
    // Fréchet derivative of log at Q applied to P, in Q's eigenbasis.
    let pt = eq.vectors.adjoint() * p.entries() * &eq.vectors;
    let qs: Vec<R> = eq.values.iter().map(|&v| v.max(R::tol(LOG_FLOOR))).collect();
    let gamma = DMatrix::from_fn(n, n, |i, j| {
        let (a, b) = (qs[i], qs[j]);
        let d = a - b;
        if d.abs() > R::tol(1e-10) * a.max(b) {
            c((a.ln() - b.ln()) / d)
        } else {
            c(R::lit(2.0) / (a + b))
        }
    });
    let dlog = &eq.vectors * pt.component_mul(&gamma) * eq.vectors.adjoint();
    let gq = dlog * c(-R::one() / ln2);
    (gp, gq)
}

struct DivergenceLocal<R: Real> {
    env_t: MultiLegMatrix<R>,
    env_r: MultiLegMatrix<R>,
    labels: (String, String),
}

impl<R: Real> DivergenceLocal<R> {
    fn outputs(&self, j: &MultiLegMatrix<R>) -> Result<(MultiLegMatrix<R>, MultiLegMatrix<R>)> {
        let p = self.env_t.link(j)?;
        let q = self.env_r.link(j)?.permute(&p.labels())?;
        Ok((p, q))
    }
}

fn divergence_value<R: Real>(p: &MultiLegMatrix<R>, q: &MultiLegMatrix<R>) -> Result<R> {
    Ok(match rel_entropy(p, q)? {
        RelEntropy::Finite(v) => v,
        RelEntropy::Infinite => R::lit(f64::INFINITY),
    })
}

impl<R: Real> LocalObjective<R> for DivergenceLocal<R> {
    fn labels(&self) -> (&str, &str) {
        (&self.labels.0, &self.labels.1)
    }

    fn value(&self, j: &MultiLegMatrix<R>) -> Result<R> {
        let (p, q) = self.outputs(j)?;
        divergence_value(&p, &q)
    }

    fn gradient(&self, j: &MultiLegMatrix<R>) -> Result<DMatrix<C<R>>> {
        let (p, q) = self.outputs(j)?;
        let (gp, gq) = divergence_gradients(&p, &q);
        let labels = self.labels();
        let kp = pullback(&self.env_t, &p, &gp, labels)?;
        let kq = pullback(&self.env_r, &q, &gq, labels)?;
        Ok(kp + kq)
    }
}

struct DivergenceObjective<'a, R: Real> {
    t: &'a ProcessTensor<R>,
    r: &'a ProcessTensor<R>,
    evaluations: AtomicUsize,
}

impl<R: Real> CombObjective<R> for DivergenceObjective<'_, R> {
    fn value(&self, z: &ControlComb<R>) -> Result<R> {
        self.evaluations.fetch_add(1, Ordering::Relaxed);
        let p = z.contract(self.t, None)?;
        let q = z.contract(self.r, None)?;
        divergence_value(&p, &q)
    }

    fn local<'b>(&'b self, z: &ControlComb<R>, r: ChannelRef) -> Result<Box<dyn LocalObjective<R> + 'b>> {
        self.evaluations.fetch_add(1, Ordering::Relaxed);
        Ok(Box::new(DivergenceLocal {
            env_t: z.contract(self.t, Some(r))?,
            env_r: z.contract(self.r, Some(r))?,
            labels: ControlComb::<R>::channel_labels(self.t.slots(), r),
        }))
    }
}

/// Lower bound on the reachable divergence of `t` from `r`.
pub fn reachable_divergence<R: Real>(
    t: &ProcessTensor<R>,
    r: &ProcessTensor<R>,
    cfg: &OptimizerConfig,
) -> Result<DivergenceResult<R>> {
    reachable_divergence_seeded(t, r, cfg, 1, &[])
}

/// [`reachable_divergence`] with a reference system of dimension
/// `reference_dim` carried from `t_i` to `t_f` next to both processes, and
/// extra starting combs. Seeds may be given for the plain processes; they
/// are extended to the reference automatically.
pub fn reachable_divergence_seeded<R: Real>(
    t: &ProcessTensor<R>,
    r: &ProcessTensor<R>,
    cfg: &OptimizerConfig,
    reference_dim: usize,
    seeds: &[ControlComb<R>],
) -> Result<DivergenceResult<R>> {
    if t.slots().choi_legs() != r.slots().choi_legs() {
        return Err(Error::DimensionMismatch("processes have different slot structures".into()));
    }
    cfg.validate(t.n_slots())?;
    let ta = with_reference(t, reference_dim)?;
    let ra = with_reference(r, reference_dim)?;
    let slots = ta.slots();
    let n = slots.n_slots();
    let reference = if reference_dim > 1 {
        Some(ControlComb::trivial(reference_process::<R>(n, reference_dim)?.slots()).with_full_mask()?)
    } else {
        None
    };
    let mut starts = Vec::new();
    for z in seeds {
        let z = z.clone().with_full_mask()?;
        starts.push(match &reference {
            Some(a) => z.parallel(a)?,
            None => z,
        });
    }
    for k in 0..cfg.restarts {
        let z = if k == 0 {
            ControlComb::trivial(slots)
        } else {
            let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
            rng.set_stream(k as u64);
            random_unitary_comb(slots, &[], &mut rng)
        };
        starts.push(z.with_full_mask()?);
    }
    if starts.is_empty() {
        return Err(Error::Config("no starting combs: restarts is 0 and no seeds were given".into()));
    }
    let objective = DivergenceObjective {
        t: &ta,
        r: &ra,
        evaluations: AtomicUsize::new(0),
    };
    let runs: Vec<Ascent<R>> = starts
        .into_par_iter()
        .map(|z| ascend_comb(&objective, z, cfg.max_sweeps, cfg.inner_iters, cfg.rel_tol))
        .collect::<Result<_>>()?;
    let mut best = 0;
    for (k, a) in runs.iter().enumerate() {
        if a.value > runs[best].value {
            best = k;
        }
    }
    let witness = runs.into_iter().nth(best).expect("at least one start").comb;
    let value = match comb_divergence(&ta, &ra, &witness)? {
        RelEntropy::Finite(v) => RelEntropy::Finite(v.as_f64()),
        RelEntropy::Infinite => RelEntropy::Infinite,
    };
    Ok(DivergenceResult {
        value,
        witness,
        samples_evaluated: objective.evaluations.into_inner(),
    })
}

/// Both sides of `S(⟦t|y⟧ ‖ ⟦t|y⟧^marg) ≤ S(⟦t|y⟧ ‖ ⟦t^marg|y⟧)` for one comb.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct WitnessCheck {
    /// `I(⟦t|y⟧)`.
    pub linked_info: f64,
    /// `S(⟦t|y⟧ ‖ ⟦t^marg|y⟧)`, `+∞` on a support violation.
    pub divergence: f64,
    pub holds: bool,
}

pub fn witness_check<R: Real>(t: &ProcessTensor<R>, y: &ControlComb<R>) -> Result<WitnessCheck> {
    let linked = y.link(t)?;
    let linked_info = total_info(&linked)?.as_f64();
    let marg = t.full_marginal();
    let divergence = rel_entropy(linked.choi(), y.link(&marg)?.choi())?.to_f64();
    Ok(WitnessCheck {
        linked_info,
        divergence,
        holds: divergence >= linked_info - 1e-9,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct HierarchyReport {
    pub total_info: f64,
    pub markov_info: f64,
    pub reachable_divergence: f64,
    /// `|Ī − M̄|` between the found values.
    pub total_markov_gap: f64,
    /// `D^reach − Ī` between the found values.
    pub divergence_gap: f64,
    pub witnesses: Vec<WitnessCheck>,
    pub holds: bool,
}

/// Found values of `Ī`, `M̄` and the reachable divergence from the full
/// marginal, all with every intermediate time coarse-grained, and the
/// per-witness inequality for each witness found on the way.
pub fn hierarchy_check<R: Real>(t: &ProcessTensor<R>, cfg: &OptimizerConfig) -> Result<HierarchyReport> {
    let cfg = cfg.clone().with_resolution(Vec::new());
    let i = estimate_monotone(t, &cfg.clone().with_objective(Objective::TotalInfo))?;
    let m = estimate_monotone(t, &cfg.clone().with_objective(Objective::MarkovInfo))?;
    let marg = t.full_marginal();
    let seeds = [i.best_comb.clone(), m.best_comb.clone()];
    let d = reachable_divergence_seeded(t, &marg, &cfg, 1, &seeds)?;
    let witnesses = [&i.best_comb, &m.best_comb, &d.witness]
        .into_iter()
        .map(|y| witness_check(t, y))
        .collect::<Result<Vec<_>>>()?;
    let reach = d.value.to_f64();
    let total_markov_gap = (i.best_value - m.best_value).abs();
    let holds = total_markov_gap <= 1e-6 && reach >= i.best_value - 1e-8 && witnesses.iter().all(|w| w.holds);
    Ok(HierarchyReport {
        total_info: i.best_value,
        markov_info: m.best_value,
        reachable_divergence: reach,
        total_markov_gap,
        divergence_gap: reach - i.best_value,
        witnesses,
        holds,
    })
}
