//! Scalar abstraction shared by every numeric routine in the crate.
//!
//! Floating point (`f32`, `f64`), exact rationals (`Rational64`) and plain
//! integers (`i64`, for classical token-counting nets) all satisfy [`Scalar`].
//! Routines that divide (LU factorization) are only meaningful for field types;
//! nothing stops an `i64` caller from trying, but the results are truncated.

use std::fmt::{Debug, Display};

use num_rational::Ratio;
use num_traits::{FromPrimitive, Num, Signed, ToPrimitive};

pub trait Scalar:
    Copy
    + Num
    + Signed
    + PartialOrd
    + FromPrimitive
    + ToPrimitive
    + Debug
    + Display
    + Send
    + Sync
    + 'static
{
    /// Relative rounding unit of the representation; zero for exact types.
    fn unit_roundoff() -> f64;

    fn from_f64_lossy(value: f64) -> Self {
        Self::from_f64(value).unwrap_or_else(Self::zero)
    }

    fn to_f64_lossy(self) -> f64 {
        self.to_f64().unwrap_or(f64::NAN)
    }

    fn is_exact() -> bool {
        Self::unit_roundoff() == 0.0
    }
}

impl Scalar for f64 {
    fn unit_roundoff() -> f64 {
        f64::EPSILON
    }
}

impl Scalar for f32 {
    fn unit_roundoff() -> f64 {
        f32::EPSILON as f64
    }
}

impl Scalar for i64 {
    fn unit_roundoff() -> f64 {
        0.0
    }
}

impl Scalar for Ratio<i64> {
    fn unit_roundoff() -> f64 {
        0.0
    }
}

/// `‖v‖_∞` evaluated in `f64`.
pub fn max_abs<T: Scalar>(values: &[T]) -> f64 {
    values
        .iter()
        .map(|v| v.abs().to_f64_lossy())
        .fold(0.0, f64::max)
}
