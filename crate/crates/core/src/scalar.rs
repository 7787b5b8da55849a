//! Scalar abstraction shared by the generic layers of the crate.

use std::fmt::{Debug, Display};
use std::iter::Sum;

use num_traits::{Float, FloatConst, FromPrimitive, ToPrimitive};

/// Floating point scalar: `f32` or `f64`.
pub trait Real:
    Float + FloatConst + FromPrimitive + ToPrimitive + Sum + Debug + Display + Default + Send + Sync + 'static
{
    /// Converts an `f64` literal into `Self`.
    #[inline]
    fn lit(x: f64) -> Self {
        Self::from_f64(x).expect("f64 literal representable in scalar type")
    }

    #[inline]
    fn from_usize_lossy(k: usize) -> Self {
        Self::from_usize(k).expect("usize representable in scalar type")
    }

    #[inline]
    fn to_f64_lossy(self) -> f64 {
        self.to_f64().unwrap_or(f64::NAN)
    }
}

impl Real for f32 {}
impl Real for f64 {}

/// `true` when `x / step` is within a relative tolerance of an integer; returns that integer.
pub fn integer_ratio<T: Real>(x: T, step: T) -> Option<usize> {
    if step <= T::zero() || x < T::zero() {
        return None;
    }
    let r = x / step;
    let k = r.round();
    let tol = T::lit(1e-6).max(T::epsilon() * T::lit(64.0)) * k.max(T::one());
    if (r - k).abs() <= tol {
        k.to_usize()
    } else {
        None
    }
}
