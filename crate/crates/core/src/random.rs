//! Random states, unitaries, channels and combs.
//!
//! All draws are made in `f64` and then converted, so a seed produces the
//! same objects (up to rounding) in every precision.

use nalgebra::DMatrix;
use rand::Rng;
use rand_distr::StandardNormal;

use crate::comb::{Channel, ControlComb, SlotStructure};
use crate::linalg::{LegSpec, MultiLegMatrix};
use crate::scalar::{Real, C};

fn ginibre<R: Real, G: Rng + ?Sized>(rows: usize, cols: usize, rng: &mut G) -> DMatrix<C<R>> {
    DMatrix::from_fn(rows, cols, |_, _| {
        let re: f64 = rng.sample(StandardNormal);
        let im: f64 = rng.sample(StandardNormal);
        C::new(R::lit(re), R::lit(im))
    })
}

/// Haar-distributed unitary from the QR decomposition of a Ginibre matrix.
pub fn haar_unitary<R: Real, G: Rng + ?Sized>(dim: usize, rng: &mut G) -> DMatrix<C<R>> {
    let qr = ginibre::<R, G>(dim, dim, rng).qr();
    let (mut q, r) = qr.unpack();
    for k in 0..dim {
        let d = r[(k, k)];
        let m = nalgebra::ComplexField::modulus(d);
        if m > R::zero() {
            let phase = d / C::new(m, R::zero());
            for i in 0..dim {
                q[(i, k)] *= phase;
            }
        }
    }
    q
}

/// `rows × cols` isometry (`rows ≥ cols`) made of Haar unitary columns.
pub fn haar_isometry<R: Real, G: Rng + ?Sized>(rows: usize, cols: usize, rng: &mut G) -> DMatrix<C<R>> {
    haar_unitary::<R, G>(rows, rng).columns(0, cols).into_owned()
}

/// Random full-rank mixed state `G G† / tr(G G†)`.
pub fn random_state<R: Real, G: Rng + ?Sized>(leg: LegSpec, rng: &mut G) -> MultiLegMatrix<R> {
    let g = ginibre::<R, G>(leg.dim, leg.dim, rng);
    let m = &g * g.adjoint();
    let tr = m.trace();
    MultiLegMatrix::new(m / tr, vec![leg]).expect("square matrix")
}

/// Random channel from a Haar isometry into `out ⊗ anc` with `anc = in_dim²`.
pub fn random_channel<R: Real, G: Rng + ?Sized>(out_dim: usize, in_dim: usize, rng: &mut G) -> Channel<R> {
    let anc = in_dim * in_dim;
    let v = haar_isometry::<R, G>(out_dim * anc, in_dim, rng);
    let kraus: Vec<DMatrix<C<R>>> = (0..anc)
        .map(|a| DMatrix::from_fn(out_dim, in_dim, |i, j| v[(i * anc + a, j)]))
        .collect();
    Channel::from_kraus(&kraus).expect("consistent Kraus shapes")
}

pub fn random_unitary_channel<R: Real, G: Rng + ?Sized>(dim: usize, rng: &mut G) -> Channel<R> {
    Channel::from_unitary(&haar_unitary(dim, rng))
}

/// Comb of random dimension-preserving channels for `slots`.
pub fn random_comb<R: Real, G: Rng + ?Sized>(
    slots: &SlotStructure,
    mask: &[usize],
    rng: &mut G,
) -> ControlComb<R> {
    let n = slots.n_slots();
    let mut pre = Vec::with_capacity(n + 1);
    let mut post = Vec::with_capacity(n + 1);
    for k in 0..=n {
        pre.push(random_channel(slots.out_dim(k), slots.out_dim(k), rng));
        post.push(random_channel(slots.in_dim(k + 1), slots.in_dim(k + 1), rng));
    }
    ControlComb::new(pre, post, mask.iter().copied()).expect("matching dimensions")
}

/// Comb whose pre-channels are random unitaries and post-channels identities.
pub fn random_unitary_comb<R: Real, G: Rng + ?Sized>(
    slots: &SlotStructure,
    mask: &[usize],
    rng: &mut G,
) -> ControlComb<R> {
    let n = slots.n_slots();
    let pre = (0..=n)
        .map(|k| random_unitary_channel(slots.out_dim(k), rng))
        .collect();
    let post = (0..=n).map(|k| Channel::identity(slots.in_dim(k + 1))).collect();
    ControlComb::new(pre, post, mask.iter().copied()).expect("matching dimensions")
}
