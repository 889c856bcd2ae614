//! Scalar abstraction shared by every numerical routine in the crate.

use nalgebra::RealField;
use num_complex::Complex;
use num_traits::{FromPrimitive, ToPrimitive};

/// Real scalar backing the complex matrices (`f64` or `f32`).
///
/// Tolerances throughout the crate are written as `f64` literals and pass
/// through [`Real::tol`], which floors them at a few thousand machine
/// epsilons so the same code paths stay meaningful in single precision.
pub trait Real:
    RealField + Copy + FromPrimitive + ToPrimitive + Send + Sync + std::fmt::Debug + 'static
{
    /// Converts an `f64` literal.
    fn lit(x: f64) -> Self {
        Self::from_f64(x).expect("literal representable in scalar type")
    }

    /// A tolerance of `x`, floored at `1e3` machine epsilons.
    fn tol(x: f64) -> Self {
        let floor = Self::default_epsilon() * Self::lit(1e3);
        let t = Self::lit(x);
        if t > floor {
            t
        } else {
            floor
        }
    }

    fn as_f64(self) -> f64 {
        self.to_f64().unwrap_or(f64::NAN)
    }
}

impl Real for f32 {}
impl Real for f64 {}

/// Complex number over the crate scalar.
pub type C<R> = Complex<R>;

pub(crate) fn c<R: Real>(re: R) -> C<R> {
    Complex::new(re, R::zero())
}
