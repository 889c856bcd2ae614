use nalgebra::DMatrix;

use crate::comb::Channel;
use crate::error::{Error, Result};
use crate::linalg::{herm_eig_matrix, MultiLegMatrix};
use crate::scalar::{c, Real, C};

/// Result of [`cptp_project`].
#[derive(Clone, Debug)]
pub struct Projection<R: Real = f64> {
    pub channel: Channel<R>,
    pub iterations: usize,
    /// Whether the alternating projections met the tolerance before the cap.
    pub converged: bool,
    /// Feasibility defect of the last PSD iterate before the final repair.
    pub defect: f64,
}

const MAX_ITERATIONS: usize = 5000;

fn partial_trace_out<R: Real>(x: &DMatrix<C<R>>, dout: usize, din: usize) -> DMatrix<C<R>> {
    DMatrix::from_fn(din, din, |i, j| {
        (0..dout).fold(C::new(R::zero(), R::zero()), |acc, a| acc + x[(a * din + i, a * din + j)])
    })
}

/// Orthogonal projection onto `{J : tr_out J = 1/d_in}`.
fn project_affine<R: Real>(x: &DMatrix<C<R>>, dout: usize, din: usize) -> DMatrix<C<R>> {
    let mut excess = partial_trace_out(x, dout, din);
    let target = c(R::one() / R::from_usize(din).unwrap());
    for i in 0..din {
        excess[(i, i)] -= target;
    }
    let w = c(R::one() / R::from_usize(dout).unwrap());
    let mut y = x.clone();
    for a in 0..dout {
        for i in 0..din {
            for j in 0..din {
                y[(a * din + i, a * din + j)] -= excess[(i, j)] * w;
            }
        }
    }
    y
}

fn project_psd<R: Real>(x: &DMatrix<C<R>>) -> DMatrix<C<R>> {
    herm_eig_matrix(x).map_values(|v| if v > R::zero() { v } else { R::zero() })
}

fn hermitize<R: Real>(x: &DMatrix<C<R>>) -> DMatrix<C<R>> {
    (x + x.adjoint()) * c(R::lit(0.5))
}

fn max_abs<R: Real>(x: &DMatrix<C<R>>) -> R {
    x.iter().fold(R::zero(), |m, z| {
        let a = nalgebra::ComplexField::modulus(*z);
        if a > m {
            a
        } else {
            m
        }
    })
}

fn min_eigenvalue<R: Real>(x: &DMatrix<C<R>>) -> R {
    herm_eig_matrix(x).values.last().copied().unwrap_or(R::zero())
}

/// Nearest channel Choi (Frobenius norm) to the Hermitian part of `m`.
///
/// `m` carries legs `(out, in)`. Dykstra's alternating projections between
/// the PSD cone and the trace-preserving affine set are run to a defect of
/// `1e-12`; the iterate is then made exactly feasible by an affine
/// projection followed by the smallest admixture of the maximally mixing
/// channel that restores positivity.
pub fn cptp_project<R: Real>(m: &MultiLegMatrix<R>, in_dim: usize) -> Result<Projection<R>> {
    let n = m.dim();
    if in_dim == 0 || !n.is_multiple_of(in_dim) || m.legs().len() != 2 || m.legs()[1].dim != in_dim {
        return Err(Error::InvalidChannel(format!(
            "expected legs (out, in) with input dimension {in_dim}"
        )));
    }
    let dout = n / in_dim;
    let tol = R::tol(1e-12);
    let start = hermitize(m.entries());

    let direct = project_affine(&start, dout, in_dim);
    if min_eigenvalue(&direct) >= R::zero() {
        let channel = Channel::from_entries_unchecked(direct, dout, in_dim);
        return Ok(Projection {
            channel,
            iterations: 0,
            converged: true,
            defect: 0.0,
        });
    }

    let zero = DMatrix::from_element(n, n, C::new(R::zero(), R::zero()));
    let (mut x, mut p, mut q) = (start, zero.clone(), zero);
    let mut iterations = 0;
    let mut defect = R::lit(f64::INFINITY);
    while iterations < MAX_ITERATIONS {
        iterations += 1;
        let y = project_affine(&(&x + &p), dout, in_dim);
        p = &x + &p - &y;
        let next = project_psd(&(&y + &q));
        q = &y + &q - &next;
        let step = max_abs(&(&next - &x));
        x = next;
        defect = max_abs(&(&x - &project_affine(&x, dout, in_dim)));
        if defect <= tol && step <= tol {
            break;
        }
    }
    let converged = defect <= tol;

    let mut j = project_affine(&x, dout, in_dim);
    let lam = min_eigenvalue(&j);
    if lam < R::zero() {
        let floor = R::one() / R::from_usize(n).unwrap();
        let s = -lam / (-lam + floor);
        let mixed = DMatrix::<C<R>>::identity(n, n) * c(floor);
        j = j * c(R::one() - s) + mixed * c(s);
    }
    Ok(Projection {
        channel: Channel::from_entries_unchecked(hermitize(&j), dout, in_dim),
        iterations,
        converged,
        defect: defect.as_f64(),
    })
}
