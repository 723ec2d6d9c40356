//! Scalar abstraction for the core math.
//!
//! Everything numeric in this crate is written against [`Real`] so the same
//! solver code runs on `f32` and `f64`. Concrete aliases live at the crate
//! root; `f64` is what the CLI and the test suites use.

use core::fmt::{Debug, Display};
use core::iter::Sum;
use num_traits::{Float, FromPrimitive, ToPrimitive};

/// Floating-point scalar usable by every module in this crate.
pub trait Real: Float + FromPrimitive + ToPrimitive + Sum + Debug + Display + 'static {}

impl<T> Real for T where T: Float + FromPrimitive + ToPrimitive + Sum + Debug + Display + 'static {}

/// Lifts an `f64` literal into the working scalar type.
#[inline]
pub fn real<T: Real>(x: f64) -> T {
    T::from_f64(x).expect("f64 literal must be representable in the scalar type")
}

/// `x` as `f64`, for reporting and serialization.
#[inline]
pub fn to_f64<T: Real>(x: T) -> f64 {
    x.to_f64().expect("scalar must convert to f64")
}
