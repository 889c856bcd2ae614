//! Entropies and the temporal-correlation quantifiers `I`, `M`, `N` (in bits).

use serde::{Deserialize, Serialize};

use crate::comb::ProcessTensor;
use crate::error::{Error, Result};
use crate::linalg::{HermEig, MultiLegMatrix};
use crate::scalar::Real;

/// Eigenvalues at or below this are treated as zero.
pub const EPS_EIG: f64 = 1e-12;

/// Weight of `x` on the kernel of `y` above which `S(x‖y)` is infinite.
pub const KERNEL_WEIGHT: f64 = 1e-10;

/// Quantum relative entropy, which may be infinite.
#[derive(Clone, Copy, Debug, PartialEq, PartialOrd)]
pub enum RelEntropy<R: Real = f64> {
    Finite(R),
    Infinite,
}

impl<R: Real> RelEntropy<R> {
    pub fn is_infinite(&self) -> bool {
        matches!(self, Self::Infinite)
    }

    pub fn finite(self) -> Option<R> {
        match self {
            Self::Finite(v) => Some(v),
            Self::Infinite => None,
        }
    }

    /// `f64` view with `+∞` for the infinite case.
    pub fn to_f64(self) -> f64 {
        match self {
            Self::Finite(v) => v.as_f64(),
            Self::Infinite => f64::INFINITY,
        }
    }
}

fn state_eig<R: Real>(m: &MultiLegMatrix<R>) -> Result<HermEig<R>> {
    let eig = m.herm_eig()?;
    let tol = R::tol(1e-8);
    let trace = m.trace();
    if (trace.re - R::one()).abs() > tol || trace.im.abs() > tol {
        return Err(Error::InvalidState(format!(
            "trace is {} + {}i",
            trace.re.as_f64(),
            trace.im.as_f64()
        )));
    }
    if let Some(&min) = eig.values.last() {
        if min < -tol {
            return Err(Error::InvalidState(format!(
                "minimum eigenvalue {:.3e}",
                min.as_f64()
            )));
        }
    }
    Ok(eig)
}

pub(crate) fn plogp<R: Real>(values: &[R]) -> R {
    let cut = R::tol(EPS_EIG);
    values
        .iter()
        .filter(|&&v| v > cut)
        .fold(R::zero(), |acc, &v| acc + v * v.log2())
}

/// `-tr ρ log₂ ρ`.
pub fn vn_entropy<R: Real>(m: &MultiLegMatrix<R>) -> Result<R> {
    let eig = state_eig(m)?;
    Ok(-plogp(&eig.values))
}

/// `S(x‖y) = tr x log₂ x − tr x log₂ y`, evaluated in the two eigenbases.
pub fn rel_entropy<R: Real>(x: &MultiLegMatrix<R>, y: &MultiLegMatrix<R>) -> Result<RelEntropy<R>> {
    let mut xl: Vec<&str> = x.labels();
    let mut yl: Vec<&str> = y.labels();
    xl.sort_unstable();
    yl.sort_unstable();
    if xl != yl {
        return Err(Error::DimensionMismatch(format!(
            "relative entropy between different legs {:?} and {:?}",
            x.labels(),
            y.labels()
        )));
    }
    let y = y.permute(&x.labels())?;
    if x.legs() != y.legs() {
        return Err(Error::DimensionMismatch("leg dimensions differ".into()));
    }
    let ex = state_eig(x)?;
    let ey = state_eig(&y)?;
    Ok(rel_entropy_eig(&ex, &ey))
}

pub(crate) fn rel_entropy_eig<R: Real>(ex: &HermEig<R>, ey: &HermEig<R>) -> RelEntropy<R> {
    let cut = R::tol(EPS_EIG);
    let n = ex.values.len();
    // overlap[(i, j)] = |⟨x_i|y_j⟩|²
    let ov = ex.vectors.adjoint() * &ey.vectors;
    let mut cross = R::zero();
    let mut kernel = R::zero();
    for j in 0..n {
        let mut w = R::zero();
        for i in 0..n {
            let lam = ex.values[i];
            if lam > cut {
                w += lam * ov[(i, j)].norm_sqr();
            }
        }
        let mu = ey.values[j];
        if mu > cut {
            cross += w * mu.log2();
        } else {
            kernel += w;
        }
    }
    if kernel > R::tol(KERNEL_WEIGHT) {
        return RelEntropy::Infinite;
    }
    RelEntropy::Finite(plogp(&ex.values) - cross)
}

fn finite_or_inf<R: Real>(s: RelEntropy<R>) -> R {
    match s {
        RelEntropy::Finite(v) => v,
        RelEntropy::Infinite => R::lit(f64::INFINITY),
    }
}

/// `I(T) = S(T ‖ T^marg)`.
pub fn total_info<R: Real>(t: &ProcessTensor<R>) -> Result<R> {
    rel_entropy(t.choi(), t.full_marginal().choi()).map(finite_or_inf)
}

/// `M(T) = S(T^Mkv ‖ T^marg)`.
pub fn markov_info<R: Real>(t: &ProcessTensor<R>) -> Result<R> {
    rel_entropy(t.markov_marginal().choi(), t.full_marginal().choi()).map(finite_or_inf)
}

/// `N(T) = S(T ‖ T^Mkv)`.
pub fn non_markovianity<R: Real>(t: &ProcessTensor<R>) -> Result<R> {
    rel_entropy(t.choi(), t.markov_marginal().choi()).map(finite_or_inf)
}

/// `I`, `M` and `N` of one process.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct QuantifierReport {
    pub total_info: f64,
    pub markov_info: f64,
    pub non_markovianity: f64,
    /// `|I − (M + N)|`.
    pub identity_defect: f64,
}

impl QuantifierReport {
    pub fn of<R: Real>(t: &ProcessTensor<R>) -> Result<Self> {
        let i = total_info(t)?.as_f64();
        let m = markov_info(t)?.as_f64();
        let n = non_markovianity(t)?.as_f64();
        Ok(Self {
            total_info: i,
            markov_info: m,
            non_markovianity: n,
            identity_defect: (i - (m + n)).abs(),
        })
    }
}
