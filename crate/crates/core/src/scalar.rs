//! Scalar abstraction shared by every numeric routine in the crate.
//!
//! Geometry, quadrature and operators are written once against [`Real`] and
//! instantiated for `f64` (the default used by the CLI and the experiments)
//! and `f32` (handy for memory-bound kernel matrices).

use std::fmt::{Debug, Display, LowerExp};
use std::iter::Sum;

use num_complex::Complex;
use num_traits::{Float, FloatConst, FromPrimitive, ToPrimitive};
use serde::de::DeserializeOwned;
use serde::Serialize;

/// Real floating point scalar: `f32` or `f64`.
pub trait Real:
    Float
    + FloatConst
    + FromPrimitive
    + ToPrimitive
    + Debug
    + Display
    + LowerExp
    + Default
    + Sum
    + Send
    + Sync
    + Serialize
    + DeserializeOwned
    + 'static
{
    /// Converts an `f64` literal. Panics only if the value is not representable,
    /// which cannot happen for finite literals and the float types we implement.
    #[inline]
    fn lit(x: f64) -> Self {
        Self::from_f64(x).expect("literal representable in scalar type")
    }

    #[inline]
    fn from_usize_lossy(n: usize) -> Self {
        Self::from_usize(n).expect("usize representable in scalar type")
    }

    #[inline]
    fn to_f64_lossy(self) -> f64 {
        self.to_f64().unwrap_or(f64::NAN)
    }
}

impl Real for f32 {}
impl Real for f64 {}

/// Complex number over the crate scalar.
pub type C<T> = Complex<T>;

/// Hermitian inner product `<z, w> = sum z_j conj(w_j)`.
#[inline]
pub fn hermitian_dot<T: Real>(z: &[C<T>], w: &[C<T>]) -> C<T> {
    debug_assert_eq!(z.len(), w.len());
    z.iter()
        .zip(w)
        .fold(C::new(T::zero(), T::zero()), |acc, (a, b)| acc + a * b.conj())
}

/// Euclidean norm of a complex vector.
#[inline]
pub fn cnorm<T: Real>(z: &[C<T>]) -> T {
    z.iter().map(|c| c.norm_sqr()).sum::<T>().sqrt()
}

/// Euclidean distance between two complex vectors.
#[inline]
pub fn cdist<T: Real>(z: &[C<T>], w: &[C<T>]) -> T {
    z.iter()
        .zip(w)
        .map(|(a, b)| (a - b).norm_sqr())
        .sum::<T>()
        .sqrt()
}

/// Sum in index order. Used wherever a reduction must not depend on the
/// number of worker threads.
#[inline]
pub fn ordered_sum<T: Real>(values: &[T]) -> T {
    let mut acc = T::zero();
    for &v in values {
        acc = acc + v;
    }
    acc
}
