//! See-saw estimation of the control-optimized quantifiers.
//!
//! Every channel of an independent-instrument comb is updated in turn by
//! projected gradient ascent on the chosen objective, with all other
//! channels fixed. Several starting combs are run in parallel and the best
//! result is re-evaluated through the public link and quantifier routines
//! before it is reported.

mod ascent;
mod project;
mod pulses;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::comb::{Channel, ChannelRef, ControlComb, ProcessTensor};
use crate::error::{Error, Result};
use crate::gates::Pulse;
use crate::linalg::herm_eig_matrix;
use crate::quantifiers::{markov_info, non_markovianity, total_info, QuantifierReport};
use crate::random::random_unitary_comb;
use crate::scalar::Real;

pub(crate) use ascent::{ascend_comb, pullback, Ascent, CombObjective, LocalObjective};
pub use project::{cptp_project, Projection};
pub use pulses::{dd_sequence, xzxz};

use ascent::{improve_channel, QuantifierObjective};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Objective {
    TotalInfo,
    MarkovInfo,
    NonMarkovianity,
    /// Largest eigenvalue of the linked Choi matrix.
    LambdaMaxProxy,
}

impl std::str::FromStr for Objective {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "total_info" | "I" => Ok(Self::TotalInfo),
            "markov_info" | "M" => Ok(Self::MarkovInfo),
            "non_markovianity" | "N" => Ok(Self::NonMarkovianity),
            "lambda_max_proxy" | "lambda_max" => Ok(Self::LambdaMaxProxy),
            other => Err(Error::Config(format!("unknown objective `{other}`"))),
        }
    }
}

/// How the coarse-graining mask is reached.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Schedule {
    /// Optimize with the target mask from the first sweep.
    #[default]
    Direct,
    /// Start unmasked and close one further time (in time order) per stage,
    /// warm-starting every stage from the previous one.
    Staged,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OptimizerConfig {
    pub restarts: usize,
    pub max_sweeps: usize,
    pub inner_iters: usize,
    pub rel_tol: f64,
    pub seed: u64,
    pub objective: Objective,
    /// Intermediate time indices (`1..=n`) kept open; everything else is
    /// coarse-grained. Empty means full coarse-graining.
    pub target_resolution: Vec<usize>,
    pub schedule: Schedule,
}

impl Default for OptimizerConfig {
    fn default() -> Self {
        Self {
            restarts: 16,
            max_sweeps: 200,
            inner_iters: 50,
            rel_tol: 1e-7,
            seed: 0,
            objective: Objective::TotalInfo,
            target_resolution: Vec::new(),
            schedule: Schedule::Direct,
        }
    }
}

impl OptimizerConfig {
    pub fn with_objective(mut self, objective: Objective) -> Self {
        self.objective = objective;
        self
    }

    pub fn with_restarts(mut self, restarts: usize) -> Self {
        self.restarts = restarts;
        self
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn with_resolution(mut self, keep: Vec<usize>) -> Self {
        self.target_resolution = keep;
        self
    }

    pub fn validate(&self, n_slots: usize) -> Result<()> {
        if self.rel_tol.is_nan() || self.rel_tol <= 0.0 {
            return Err(Error::Config("rel_tol must be positive".into()));
        }
        if let Some(k) = self.target_resolution.iter().find(|&&k| k == 0 || k > n_slots) {
            return Err(Error::UnknownTime(format!("intermediate index {k}")));
        }
        Ok(())
    }

    /// Times closed by coarse-graining, `n̂ ∖ m̂`.
    pub fn mask(&self, n_slots: usize) -> Vec<usize> {
        (1..=n_slots)
            .filter(|k| !self.target_resolution.contains(k))
            .collect()
    }
}

#[derive(Clone, Debug)]
pub struct OptimResult<R: Real = f64> {
    /// Objective of `⟦t | best_comb⟧`, re-evaluated independently.
    pub best_value: f64,
    pub best_comb: ControlComb<R>,
    /// Objective after each sweep of the winning start (initial value first).
    pub trace: Vec<f64>,
    pub converged: bool,
    /// Index of the winning start (warm starts come first).
    pub best_start: usize,
    /// Final value of every start.
    pub start_values: Vec<f64>,
    /// `I`, `M`, `N` of the witness.
    pub report: QuantifierReport,
}

fn qubit_slots(t: &crate::comb::SlotStructure) -> bool {
    t.choi_legs().iter().all(|l| l.dim == 2)
}

/// Starting combs: warm starts, then the trivial comb, an `X,Z,X,Z` sequence
/// on qubit slots and random unitary pre-processing for the rest.
fn starting_combs<R: Real>(
    t: &ProcessTensor<R>,
    cfg: &OptimizerConfig,
    mask: &[usize],
    seeds: &[ControlComb<R>],
) -> Result<Vec<ControlComb<R>>> {
    let slots = t.slots();
    let n = slots.n_slots();
    let mut starts = Vec::with_capacity(seeds.len() + cfg.restarts);
    for z in seeds {
        z.check_chaining(slots)?;
        starts.push(z.clone().with_mask(mask.iter().copied())?);
    }
    for r in 0..cfg.restarts {
        let z = match r {
            0 => ControlComb::trivial(slots),
            1 if qubit_slots(slots) && n > 0 => dd_sequence(n, &xzxz(n))?,
            _ => {
                let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
                rng.set_stream(r as u64);
                random_unitary_comb(slots, &[], &mut rng)
            }
        };
        starts.push(z.with_mask(mask.iter().copied())?);
    }
    Ok(starts)
}

fn run_start<R: Real>(
    t: &ProcessTensor<R>,
    cfg: &OptimizerConfig,
    mask: &[usize],
    start: ControlComb<R>,
) -> Result<Ascent<R>> {
    let stages: Vec<Vec<usize>> = match cfg.schedule {
        Schedule::Direct => vec![mask.to_vec()],
        Schedule::Staged => (0..=mask.len()).map(|j| mask[..j].to_vec()).collect(),
    };
    let mut comb = start;
    let mut trace = Vec::new();
    let mut last = None;
    for stage in stages {
        comb = comb.with_mask(stage.iter().copied())?;
        let objective = QuantifierObjective::new(t, cfg.objective, &stage);
        let a = ascend_comb(&objective, comb, cfg.max_sweeps, cfg.inner_iters, cfg.rel_tol)?;
        trace.extend(a.trace.iter().copied());
        comb = a.comb.clone();
        last = Some(a);
    }
    let a = last.expect("at least one stage");
    Ok(Ascent { trace, ..a })
}

/// Forward value of the objective on `⟦t | z⟧`.
pub fn evaluate<R: Real>(t: &ProcessTensor<R>, z: &ControlComb<R>, objective: Objective) -> Result<f64> {
    let p = z.link(t)?;
    Ok(match objective {
        Objective::TotalInfo => total_info(&p)?.as_f64(),
        Objective::MarkovInfo => markov_info(&p)?.as_f64(),
        Objective::NonMarkovianity => non_markovianity(&p)?.as_f64(),
        Objective::LambdaMaxProxy => herm_eig_matrix(p.choi().hermitian_part().entries()).values[0].as_f64(),
    })
}

/// Lower bound on the control-optimized quantifier at `cfg.target_resolution`.
pub fn estimate_monotone<R: Real>(t: &ProcessTensor<R>, cfg: &OptimizerConfig) -> Result<OptimResult<R>> {
    estimate_monotone_seeded(t, cfg, &[])
}

/// [`estimate_monotone`] with additional warm-start combs. Their masks are
/// replaced by the target mask.
pub fn estimate_monotone_seeded<R: Real>(
    t: &ProcessTensor<R>,
    cfg: &OptimizerConfig,
    seeds: &[ControlComb<R>],
) -> Result<OptimResult<R>> {
    let n = t.n_slots();
    cfg.validate(n)?;
    let mask = cfg.mask(n);
    let starts = starting_combs(t, cfg, &mask, seeds)?;
    if starts.is_empty() {
        return Err(Error::Config("no starting combs: restarts is 0 and no seeds were given".into()));
    }
    let runs: Vec<Ascent<R>> = starts
        .into_par_iter()
        .map(|z| run_start(t, cfg, &mask, z))
        .collect::<Result<_>>()?;
    let start_values: Vec<f64> = runs.iter().map(|a| a.value.as_f64()).collect();
    let mut best = 0;
    for (k, v) in start_values.iter().enumerate() {
        if *v > start_values[best] {
            best = k;
        }
    }
    let win = runs.into_iter().nth(best).expect("at least one start");
    let best_value = evaluate(t, &win.comb, cfg.objective)?;
    let report = QuantifierReport::of(&win.comb.link(t)?)?;
    Ok(OptimResult {
        best_value,
        best_comb: win.comb,
        trace: win.trace,
        converged: win.converged,
        best_start: best,
        start_values,
        report,
    })
}

/// Improves channel `r` of `comb` with every other channel held fixed.
pub fn see_saw_inner<R: Real>(
    t: &ProcessTensor<R>,
    comb: &ControlComb<R>,
    r: ChannelRef,
    cfg: &OptimizerConfig,
) -> Result<Channel<R>> {
    let mask: Vec<usize> = comb.mask().iter().copied().collect();
    let objective = QuantifierObjective::new(t, cfg.objective, &mask);
    improve_channel(&objective, comb, r, cfg.inner_iters).map(|(ch, _)| ch)
}

/// Comb that applies `outer` first and then `inner` to the resulting process.
pub fn warm_start_compose<R: Real>(outer: &ControlComb<R>, inner: &ControlComb<R>) -> Result<ControlComb<R>> {
    outer.then(inner)
}

/// Found values of `Ī`, `M̄`, `N̄` at one resolution and the gap
/// `Ī − (M̄ + N̄)`; a positive gap means the `M̄` or `N̄` runs fell short.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SubadditivityDiagnostic {
    pub total_info: f64,
    pub markov_info: f64,
    pub non_markovianity: f64,
    pub gap: f64,
    pub shortfall: bool,
}

pub fn subadditivity_diagnostic<R: Real>(
    t: &ProcessTensor<R>,
    cfg: &OptimizerConfig,
) -> Result<SubadditivityDiagnostic> {
    let run = |o| estimate_monotone(t, &cfg.clone().with_objective(o)).map(|r| r.best_value);
    let i = run(Objective::TotalInfo)?;
    let m = run(Objective::MarkovInfo)?;
    let n = run(Objective::NonMarkovianity)?;
    let gap = i - (m + n);
    Ok(SubadditivityDiagnostic {
        total_info: i,
        markov_info: m,
        non_markovianity: n,
        gap,
        shortfall: gap > 1e-6,
    })
}

/// Pattern of Pauli pulses from a string such as `"X,Z,X,Z"`.
pub fn parse_pattern(pattern: &str) -> Result<Vec<Pulse>> {
    pattern
        .split(|c: char| c == ',' || c.is_whitespace())
        .filter(|s| !s.is_empty())
        .map(|s| s.parse().map_err(Error::Config))
        .collect()
}
