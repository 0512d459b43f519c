//! Floating-point scalar abstraction shared by every numerical routine.

use std::fmt::{Debug, Display};
use std::iter::Sum;

use num_traits::{Float, FromPrimitive, ToPrimitive};

/// Real scalar the algorithms are generic over. Implemented for `f32` and `f64`.
pub trait Scalar:
    Float + FromPrimitive + ToPrimitive + Sum + Debug + Display + Default + Send + Sync + 'static
{
    /// Converts an `f64` constant into `Self`.
    #[inline]
    fn of(x: f64) -> Self {
        Self::from_f64(x).expect("f64 constant representable in scalar type")
    }

    #[inline]
    fn as_f64(self) -> f64 {
        self.to_f64().expect("scalar convertible to f64")
    }

    /// A relative tolerance, floored at a small multiple of machine epsilon so that
    /// tolerances tuned for `f64` stay meaningful in `f32`.
    #[inline]
    fn rel_tol(rel: f64) -> Self {
        let floor = Self::epsilon() * Self::of(64.0);
        Self::of(rel).max(floor)
    }

    #[inline]
    fn pi() -> Self {
        Self::of(std::f64::consts::PI)
    }
}

impl Scalar for f32 {}
impl Scalar for f64 {}

#[inline]
pub fn dot<T: Scalar>(u: &[T], v: &[T]) -> T {
    debug_assert_eq!(u.len(), v.len());
    u.iter().zip(v).fold(T::zero(), |acc, (&a, &b)| acc + a * b)
}

#[inline]
pub fn norm_sq<T: Scalar>(v: &[T]) -> T {
    dot(v, v)
}

#[inline]
pub fn norm<T: Scalar>(v: &[T]) -> T {
    norm_sq(v).sqrt()
}

/// Returns `v / ‖v‖`, or `None` when `v` is the zero vector.
pub fn normalized<T: Scalar>(v: &[T]) -> Option<Vec<T>> {
    let n = norm(v);
    if n > T::zero() && n.is_finite() {
        Some(v.iter().map(|&x| x / n).collect())
    } else {
        None
    }
}
