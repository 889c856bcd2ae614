//! Dense complex matrices over labelled tensor-product spaces.
//!
//! A [`MultiLegMatrix`] is a square matrix acting on `H_1 ⊗ H_2 ⊗ … ⊗ H_k`
//! where each factor ("leg") carries a label and a dimension. Composite
//! indices are row-major with the first leg most significant, so for legs
//! `(a, b)` the flat index of `|i⟩_a|j⟩_b` is `i * dim(b) + j`.

use std::collections::HashSet;

use nalgebra::{ComplexField, DMatrix, SymmetricEigen};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::{c, Real, C};

/// One tensor factor of a multi-leg space.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct LegSpec {
    pub label: String,
    pub dim: usize,
}

impl LegSpec {
    pub fn new(label: impl Into<String>, dim: usize) -> Self {
        Self {
            label: label.into(),
            dim,
        }
    }
}

/// Square complex matrix on an ordered list of labelled legs.
#[derive(Clone, Debug, PartialEq)]
pub struct MultiLegMatrix<R: Real = f64> {
    entries: DMatrix<C<R>>,
    legs: Vec<LegSpec>,
}

/// Eigendecomposition of a Hermitian matrix, eigenvalues sorted descending.
#[derive(Clone, Debug)]
pub struct HermEig<R: Real = f64> {
    pub values: Vec<R>,
    /// Column `k` is the eigenvector of `values[k]`.
    pub vectors: DMatrix<C<R>>,
}

impl<R: Real> HermEig<R> {
    /// Rebuilds `V f(Λ) V†`.
    pub fn map_values(&self, f: impl Fn(R) -> R) -> DMatrix<C<R>> {
        let n = self.values.len();
        let mut scaled = self.vectors.clone();
        for (k, &v) in self.values.iter().enumerate() {
            let s = f(v);
            for i in 0..n {
                scaled[(i, k)] *= s;
            }
        }
        scaled * self.vectors.adjoint()
    }
}

pub(crate) fn check_legs(legs: &[LegSpec]) -> Result<usize> {
    let mut seen = HashSet::new();
    let mut total = 1usize;
    for leg in legs {
        if leg.dim == 0 {
            return Err(Error::DimensionMismatch(format!(
                "leg `{}` has dimension 0",
                leg.label
            )));
        }
        if !seen.insert(leg.label.as_str()) {
            return Err(Error::DuplicateLabel(leg.label.clone()));
        }
        total *= leg.dim;
    }
    Ok(total)
}

/// Offsets into the full composite index for every combination of digits
/// on the selected leg positions (in the order given).
fn offsets(legs: &[LegSpec], positions: &[usize]) -> Vec<usize> {
    let mut strides = vec![1usize; legs.len()];
    for k in (0..legs.len().saturating_sub(1)).rev() {
        strides[k] = strides[k + 1] * legs[k + 1].dim;
    }
    let mut out = vec![0usize];
    for &p in positions {
        let d = legs[p].dim;
        let s = strides[p];
        let mut next = Vec::with_capacity(out.len() * d);
        for &base in &out {
            for i in 0..d {
                next.push(base + i * s);
            }
        }
        out = next;
    }
    out
}

impl<R: Real> MultiLegMatrix<R> {
    pub fn new(entries: DMatrix<C<R>>, legs: Vec<LegSpec>) -> Result<Self> {
        let total = check_legs(&legs)?;
        if entries.nrows() != total || entries.ncols() != total {
            return Err(Error::DimensionMismatch(format!(
                "matrix is {}x{} but legs span dimension {}",
                entries.nrows(),
                entries.ncols(),
                total
            )));
        }
        Ok(Self { entries, legs })
    }

    pub fn from_fn(legs: Vec<LegSpec>, f: impl FnMut(usize, usize) -> C<R>) -> Result<Self> {
        let total = check_legs(&legs)?;
        Ok(Self {
            entries: DMatrix::from_fn(total, total, f),
            legs,
        })
    }

    /// A 1×1 matrix with no legs.
    pub fn scalar(value: C<R>) -> Self {
        Self {
            entries: DMatrix::from_element(1, 1, value),
            legs: Vec::new(),
        }
    }

    pub fn identity(legs: Vec<LegSpec>) -> Result<Self> {
        let total = check_legs(&legs)?;
        Ok(Self {
            entries: DMatrix::identity(total, total),
            legs,
        })
    }

    /// `I / D` on the given legs.
    pub fn maximally_mixed(legs: Vec<LegSpec>) -> Result<Self> {
        let mut m = Self::identity(legs)?;
        let d = R::from_usize(m.dim()).unwrap();
        m.entries /= c(d);
        Ok(m)
    }

    /// Projector onto `|ψ⟩` (not normalized by this call).
    pub fn pure(state: &[C<R>], legs: Vec<LegSpec>) -> Result<Self> {
        let total = check_legs(&legs)?;
        if state.len() != total {
            return Err(Error::DimensionMismatch(format!(
                "state vector has length {} but legs span dimension {}",
                state.len(),
                total
            )));
        }
        Self::from_fn(legs, |i, j| state[i] * state[j].conj())
    }

    pub fn entries(&self) -> &DMatrix<C<R>> {
        &self.entries
    }

    pub fn into_entries(self) -> DMatrix<C<R>> {
        self.entries
    }

    pub fn legs(&self) -> &[LegSpec] {
        &self.legs
    }

    pub fn labels(&self) -> Vec<&str> {
        self.legs.iter().map(|l| l.label.as_str()).collect()
    }

    pub fn dim(&self) -> usize {
        self.entries.nrows()
    }

    pub fn leg_position(&self, label: &str) -> Option<usize> {
        self.legs.iter().position(|l| l.label == label)
    }

    pub fn leg_dim(&self, label: &str) -> Option<usize> {
        self.leg_position(label).map(|p| self.legs[p].dim)
    }

    fn positions(&self, labels: &[&str]) -> Result<Vec<usize>> {
        let mut seen = HashSet::new();
        labels
            .iter()
            .map(|l| {
                if !seen.insert(*l) {
                    return Err(Error::DuplicateLabel((*l).to_string()));
                }
                self.leg_position(l)
                    .ok_or_else(|| Error::UnknownLabel((*l).to_string()))
            })
            .collect()
    }

    pub fn trace(&self) -> C<R> {
        self.entries.trace()
    }

    pub fn scaled(&self, factor: R) -> Self {
        Self {
            entries: &self.entries * c(factor),
            legs: self.legs.clone(),
        }
    }

    pub fn map_entries(&self, f: impl Fn(&DMatrix<C<R>>) -> DMatrix<C<R>>) -> Result<Self> {
        Self::new(f(&self.entries), self.legs.clone())
    }

    fn same_legs(&self, other: &Self) -> Result<()> {
        if self.legs != other.legs {
            return Err(Error::DimensionMismatch(format!(
                "leg lists differ: {:?} vs {:?}",
                self.labels(),
                other.labels()
            )));
        }
        Ok(())
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        self.same_legs(other)?;
        Ok(Self {
            entries: &self.entries + &other.entries,
            legs: self.legs.clone(),
        })
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        self.same_legs(other)?;
        Ok(Self {
            entries: &self.entries - &other.entries,
            legs: self.legs.clone(),
        })
    }

    /// Largest entrywise modulus of `self - other`; legs must agree exactly.
    pub fn max_abs_diff(&self, other: &Self) -> Result<R> {
        self.same_legs(other)?;
        Ok(self
            .entries
            .iter()
            .zip(other.entries.iter())
            .map(|(a, b)| (*a - *b).modulus())
            .fold(R::zero(), |m, x| if x > m { x } else { m }))
    }

    pub fn max_abs(&self) -> R {
        self.entries
            .iter()
            .map(|a| a.modulus())
            .fold(R::zero(), |m, x| if x > m { x } else { m })
    }

    pub fn frobenius_norm(&self) -> R {
        self.entries.norm()
    }

    /// Renames legs; unspecified legs keep their labels.
    pub fn relabel(&self, renames: &[(&str, &str)]) -> Result<Self> {
        let mut legs = self.legs.clone();
        for (from, to) in renames {
            let p = self
                .leg_position(from)
                .ok_or_else(|| Error::UnknownLabel((*from).to_string()))?;
            legs[p].label = (*to).to_string();
        }
        check_legs(&legs)?;
        Ok(Self {
            entries: self.entries.clone(),
            legs,
        })
    }

    /// Reorders the legs; `order` must name every leg exactly once.
    pub fn permute(&self, order: &[&str]) -> Result<Self> {
        if order.len() != self.legs.len() {
            return Err(Error::DimensionMismatch(format!(
                "permutation names {} legs but matrix has {}",
                order.len(),
                self.legs.len()
            )));
        }
        let pos = self.positions(order)?;
        if pos.iter().enumerate().all(|(i, &p)| i == p) {
            return Ok(self.clone());
        }
        let map = offsets(&self.legs, &pos);
        let n = self.dim();
        let entries = DMatrix::from_fn(n, n, |i, j| self.entries[(map[i], map[j])]);
        let legs = pos.iter().map(|&p| self.legs[p].clone()).collect();
        Ok(Self { entries, legs })
    }

    /// Fuses consecutive legs into one leg of product dimension.
    pub fn merge_legs(&self, group: &[&str], label: &str) -> Result<Self> {
        let pos = self.positions(group)?;
        if pos.is_empty() || pos.windows(2).any(|w| w[1] != w[0] + 1) {
            return Err(Error::DimensionMismatch(format!(
                "legs {group:?} are not consecutive"
            )));
        }
        let dim = pos.iter().map(|&p| self.legs[p].dim).product();
        let mut legs = self.legs[..pos[0]].to_vec();
        legs.push(LegSpec::new(label, dim));
        legs.extend_from_slice(&self.legs[pos[pos.len() - 1] + 1..]);
        check_legs(&legs)?;
        Ok(Self {
            entries: self.entries.clone(),
            legs,
        })
    }

    /// Splits one leg into consecutive factors whose dimensions multiply to it.
    pub fn split_leg(&self, label: &str, parts: Vec<LegSpec>) -> Result<Self> {
        let p = self
            .leg_position(label)
            .ok_or_else(|| Error::UnknownLabel(label.to_string()))?;
        let dim: usize = parts.iter().map(|l| l.dim).product();
        if dim != self.legs[p].dim {
            return Err(Error::DimensionMismatch(format!(
                "cannot split leg `{label}` of dimension {} into factors of product {dim}",
                self.legs[p].dim
            )));
        }
        let mut legs = self.legs[..p].to_vec();
        legs.extend(parts);
        legs.extend_from_slice(&self.legs[p + 1..]);
        check_legs(&legs)?;
        Ok(Self {
            entries: self.entries.clone(),
            legs,
        })
    }

    /// Kronecker product; legs of `self` come first.
    pub fn tensor(&self, other: &Self) -> Result<Self> {
        let mut legs = self.legs.clone();
        legs.extend(other.legs.iter().cloned());
        check_legs(&legs)?;
        Ok(Self {
            entries: self.entries.kronecker(&other.entries),
            legs,
        })
    }

    /// Traces out the listed legs; remaining legs keep their relative order.
    pub fn partial_trace(&self, over: &[&str]) -> Result<Self> {
        let traced = self.positions(over)?;
        let kept: Vec<usize> = (0..self.legs.len())
            .filter(|p| !traced.contains(p))
            .collect();
        let off_k = offsets(&self.legs, &kept);
        let off_t = offsets(&self.legs, &traced);
        let n = off_k.len();
        let entries = DMatrix::from_fn(n, n, |i, j| {
            let (bi, bj) = (off_k[i], off_k[j]);
            off_t
                .iter()
                .fold(C::<R>::new(R::zero(), R::zero()), |acc, &t| {
                    acc + self.entries[(bi + t, bj + t)]
                })
        });
        let legs = kept.iter().map(|&p| self.legs[p].clone()).collect();
        Ok(Self { entries, legs })
    }

    /// The reduced matrix on `keep`, with legs in the order given.
    pub fn marginal(&self, keep: &[&str]) -> Result<Self> {
        let kept = self.positions(keep)?;
        let traced: Vec<&str> = self
            .legs
            .iter()
            .enumerate()
            .filter(|(p, _)| !kept.contains(p))
            .map(|(_, l)| l.label.as_str())
            .collect();
        self.partial_trace(&traced)?.permute(keep)
    }

    /// Transposes the listed legs only.
    pub fn partial_transpose(&self, over: &[&str]) -> Result<Self> {
        let tp = self.positions(over)?;
        let other: Vec<usize> = (0..self.legs.len()).filter(|p| !tp.contains(p)).collect();
        let off_o = offsets(&self.legs, &other);
        let off_s = offsets(&self.legs, &tp);
        let n = self.dim();
        let mut entries = DMatrix::zeros(n, n);
        for &o1 in &off_o {
            for &o2 in &off_o {
                for &s1 in &off_s {
                    for &s2 in &off_s {
                        entries[(o1 + s1, o2 + s2)] = self.entries[(o1 + s2, o2 + s1)];
                    }
                }
            }
        }
        Ok(Self {
            entries,
            legs: self.legs.clone(),
        })
    }

    pub fn adjoint(&self) -> Self {
        Self {
            entries: self.entries.adjoint(),
            legs: self.legs.clone(),
        }
    }

    /// `‖m − m†‖_F`.
    pub fn hermiticity_defect(&self) -> R {
        (&self.entries - self.entries.adjoint()).norm()
    }

    /// Acceptance tolerance `1e-9 · max(1, ‖m‖_F)`.
    pub fn hermiticity_tolerance(&self) -> R {
        let f = self.frobenius_norm();
        R::tol(1e-9) * if f > R::one() { f } else { R::one() }
    }

    /// `(m + m†)/2`.
    pub fn hermitian_part(&self) -> Self {
        Self {
            entries: (&self.entries + self.entries.adjoint()) * c(R::lit(0.5)),
            legs: self.legs.clone(),
        }
    }

    /// Eigendecomposition after symmetrization; rejects matrices whose
    /// anti-Hermitian part exceeds [`Self::hermiticity_tolerance`].
    pub fn herm_eig(&self) -> Result<HermEig<R>> {
        let defect = self.hermiticity_defect();
        let tolerance = self.hermiticity_tolerance();
        if defect > tolerance {
            return Err(Error::NotHermitian {
                defect: defect.as_f64(),
                tolerance: tolerance.as_f64(),
            });
        }
        Ok(herm_eig_matrix(&self.hermitian_part().entries))
    }

    /// Link product `Π_S d_s · tr_S[(self^{T_S} ⊗ 1)(1 ⊗ other)]` over the
    /// labels `S` present in both operands.
    ///
    /// The result carries the unshared legs of `self` followed by the
    /// unshared legs of `other`. With unit-trace Choi matrices the prefactor
    /// makes the result unit-trace again.
    pub fn link(&self, other: &Self) -> Result<Self> {
        let shared: Vec<&str> = self
            .legs
            .iter()
            .map(|l| l.label.as_str())
            .filter(|l| other.leg_position(l).is_some())
            .collect();
        let s_self = self.positions(&shared)?;
        let s_other = other.positions(&shared)?;
        for (&a, &b) in s_self.iter().zip(&s_other) {
            if self.legs[a].dim != other.legs[b].dim {
                return Err(Error::DimensionMismatch(format!(
                    "shared leg `{}` has dimension {} vs {}",
                    self.legs[a].label, self.legs[a].dim, other.legs[b].dim
                )));
            }
        }
        let x_pos: Vec<usize> = (0..self.legs.len())
            .filter(|p| !s_self.contains(p))
            .collect();
        let a_pos: Vec<usize> = (0..other.legs.len())
            .filter(|p| !s_other.contains(p))
            .collect();
        let mut legs: Vec<LegSpec> = x_pos.iter().map(|&p| self.legs[p].clone()).collect();
        legs.extend(a_pos.iter().map(|&p| other.legs[p].clone()));
        check_legs(&legs)?;

        let off_x = offsets(&self.legs, &x_pos);
        let off_ts = offsets(&self.legs, &s_self);
        let off_zs = offsets(&other.legs, &s_other);
        let off_a = offsets(&other.legs, &a_pos);
        let factor: usize = s_self.iter().map(|&p| self.legs[p].dim).product();
        let factor = c(R::from_usize(factor).unwrap());

        let t = self.entries.as_slice();
        let z = other.entries.as_slice();
        let (nt, nz) = (self.dim(), other.dim());
        let (nx, na, ns) = (off_x.len(), off_a.len(), off_ts.len());
        let n = nx * na;
        let zero = C::<R>::new(R::zero(), R::zero());
        let mut out = DMatrix::from_element(n, n, zero);
        // column-major storage: entry (i, j) lives at j * nrows + i
        for y in 0..nx {
            for ap in 0..na {
                let col = y * na + ap;
                for x in 0..nx {
                    for a in 0..na {
                        let mut acc = zero;
                        for s in 0..ns {
                            // T[(x, s'), (y, s)] Z[(s', a), (s, a')]
                            let tcol = (off_x[y] + off_ts[s]) * nt;
                            let zcol = (off_zs[s] + off_a[ap]) * nz;
                            for sp in 0..ns {
                                acc += t[tcol + off_x[x] + off_ts[sp]]
                                    * z[zcol + off_zs[sp] + off_a[a]];
                            }
                        }
                        out[(x * na + a, col)] = acc * factor;
                    }
                }
            }
        }
        Ok(Self { entries: out, legs })
    }
}

/// Hermitian eigendecomposition of a raw matrix assumed Hermitian.
pub(crate) fn herm_eig_matrix<R: Real>(m: &DMatrix<C<R>>) -> HermEig<R> {
    let eig = SymmetricEigen::new(m.clone());
    let mut order: Vec<usize> = (0..eig.eigenvalues.len()).collect();
    order.sort_by(|&a, &b| {
        let (x, y) = (eig.eigenvalues[a].as_f64(), eig.eigenvalues[b].as_f64());
        y.total_cmp(&x).then(a.cmp(&b))
    });
    let values = order.iter().map(|&k| eig.eigenvalues[k]).collect();
    let n = m.nrows();
    let vectors = DMatrix::from_fn(n, n, |i, k| eig.eigenvectors[(i, order[k])]);
    HermEig { values, vectors }
}

/// Unit-trace projector onto `dim^{-1/2} Σ_i |i⟩_a|i⟩_b`.
pub fn max_entangled<R: Real>(dim: usize, leg_a: &str, leg_b: &str) -> Result<MultiLegMatrix<R>> {
    let legs = vec![LegSpec::new(leg_a, dim), LegSpec::new(leg_b, dim)];
    let w = c(R::one() / R::from_usize(dim.max(1)).unwrap());
    MultiLegMatrix::from_fn(legs, |i, j| {
        if i % (dim + 1) == 0 && j % (dim + 1) == 0 {
            w
        } else {
            C::new(R::zero(), R::zero())
        }
    })
}
