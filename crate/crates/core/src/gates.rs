//! Small library of unitaries on registers of qudits.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::scalar::{Real, C};

/// Single-qubit Pauli pulse.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Pulse {
    I,
    X,
    Y,
    Z,
}

impl Pulse {
    pub fn matrix<R: Real>(self) -> DMatrix<C<R>> {
        let (o, z, i) = (
            C::new(R::one(), R::zero()),
            C::new(R::zero(), R::zero()),
            C::new(R::zero(), R::one()),
        );
        let e = match self {
            Self::I => [o, z, z, o],
            Self::X => [z, o, o, z],
            Self::Y => [z, -i, i, z],
            Self::Z => [o, z, z, -o],
        };
        DMatrix::from_row_slice(2, 2, &e)
    }
}

impl std::str::FromStr for Pulse {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_uppercase().as_str() {
            "I" => Ok(Self::I),
            "X" => Ok(Self::X),
            "Y" => Ok(Self::Y),
            "Z" => Ok(Self::Z),
            other => Err(format!("unknown pulse `{other}`")),
        }
    }
}

/// `exp(-i θ Y / 2)`.
pub fn ry<R: Real>(theta: f64) -> DMatrix<C<R>> {
    let (s, c) = (theta / 2.0).sin_cos();
    let (s, c) = (R::lit(s), R::lit(c));
    let zero = R::zero();
    DMatrix::from_row_slice(
        2,
        2,
        &[C::new(c, zero), C::new(-s, zero), C::new(s, zero), C::new(c, zero)],
    )
}

/// Digits of `index` in the mixed radix `dims` (first most significant).
pub fn digits(mut index: usize, dims: &[usize]) -> Vec<usize> {
    let mut out = vec![0; dims.len()];
    for (k, &d) in dims.iter().enumerate().rev() {
        out[k] = index % d;
        index /= d;
    }
    out
}

pub fn undigits(digits: &[usize], dims: &[usize]) -> usize {
    digits.iter().zip(dims).fold(0, |acc, (&x, &d)| acc * d + x)
}

/// Permutation unitary `|x⟩ ↦ |f(x)⟩` on a register with the given dims.
pub fn basis_map<R: Real>(dims: &[usize], f: impl Fn(&[usize]) -> Vec<usize>) -> DMatrix<C<R>> {
    let n: usize = dims.iter().product();
    let mut u = DMatrix::from_element(n, n, C::new(R::zero(), R::zero()));
    for col in 0..n {
        let row = undigits(&f(&digits(col, dims)), dims);
        u[(row, col)] = C::new(R::one(), R::zero());
    }
    u
}

/// Exchanges subsystems `a` and `b` of a register (equal dims).
pub fn swap<R: Real>(dims: &[usize], a: usize, b: usize) -> DMatrix<C<R>> {
    basis_map(dims, |x| {
        let mut y = x.to_vec();
        y.swap(a, b);
        y
    })
}

/// Exchanges `a` and `b` when the control digit is nonzero.
pub fn controlled_swap<R: Real>(dims: &[usize], control: usize, a: usize, b: usize) -> DMatrix<C<R>> {
    basis_map(dims, |x| {
        let mut y = x.to_vec();
        if x[control] != 0 {
            y.swap(a, b);
        }
        y
    })
}

/// `|c, t⟩ ↦ |c, t + c mod d⟩`.
pub fn controlled_shift<R: Real>(dims: &[usize], control: usize, target: usize) -> DMatrix<C<R>> {
    basis_map(dims, |x| {
        let mut y = x.to_vec();
        y[target] = (x[target] + x[control]) % dims[target];
        y
    })
}

/// `U` acting on subsystem `k` of a register, identity elsewhere.
pub fn on_subsystem<R: Real>(dims: &[usize], k: usize, u: &DMatrix<C<R>>) -> DMatrix<C<R>> {
    let left: usize = dims[..k].iter().product();
    let right: usize = dims[k + 1..].iter().product();
    DMatrix::<C<R>>::identity(left, left)
        .kronecker(u)
        .kronecker(&DMatrix::identity(right, right))
}

/// Diagonal unitary with entries `exp(-i φ(x))`.
pub fn diagonal_phase<R: Real>(dims: &[usize], phi: impl Fn(&[usize]) -> f64) -> DMatrix<C<R>> {
    let n: usize = dims.iter().product();
    let mut u = DMatrix::from_element(n, n, C::new(R::zero(), R::zero()));
    for k in 0..n {
        let (s, c) = (-phi(&digits(k, dims))).sin_cos();
        u[(k, k)] = C::new(R::lit(c), R::lit(s));
    }
    u
}

#[cfg(test)]
mod tests {
    use super::*;

    fn close(a: &DMatrix<C<f64>>, b: &DMatrix<C<f64>>) -> bool {
        (a - b).iter().all(|z| z.norm() < 1e-14)
    }

    #[test]
    fn pauli_algebra() {
        let (x, y, z) = (
            Pulse::X.matrix::<f64>(),
            Pulse::Y.matrix::<f64>(),
            Pulse::Z.matrix::<f64>(),
        );
        let i = C::new(0.0, 1.0);
        assert!(close(&(&x * &y), &(&z * i)));
        assert!(close(&(&x * &x), &DMatrix::identity(2, 2)));
    }

    #[test]
    fn swap_of_qubits() {
        let s = swap::<f64>(&[2, 2], 0, 1);
        // |01⟩ ↦ |10⟩
        assert_eq!(s[(2, 1)], C::new(1.0, 0.0));
        assert!(close(&(&s * &s), &DMatrix::identity(4, 4)));
    }

    #[test]
    fn controlled_swap_acts_only_on_set_control() {
        let u = controlled_swap::<f64>(&[2, 2, 2], 0, 1, 2);
        assert_eq!(u[(0b001, 0b001)], C::new(1.0, 0.0));
        assert_eq!(u[(0b110, 0b101)], C::new(1.0, 0.0));
    }

    #[test]
    fn digits_round_trip() {
        let dims = [2, 3, 4];
        for k in 0..24 {
            assert_eq!(undigits(&digits(k, &dims), &dims), k);
        }
    }
}
