//! Scalar abstraction shared by the analytic modules.

use std::fmt::{Debug, Display};
use std::iter::Sum;

use num_traits::{Float, FromPrimitive, ToPrimitive};

/// Real scalar the analytic path is generic over (`f32` and `f64`).
pub trait Real:
    Float + FromPrimitive + ToPrimitive + Sum + Debug + Display + Send + Sync + 'static
{
    /// Converts an `f64` literal, panicking only if the type cannot represent finite values.
    fn lit(x: f64) -> Self {
        Self::from_f64(x).expect("finite literal is representable")
    }

    fn from_count(n: usize) -> Self {
        Self::from_usize(n).expect("count is representable")
    }
}

impl Real for f32 {}
impl Real for f64 {}

/// Returns true when `x` lies in the closed unit interval.
pub(crate) fn is_probability<T: Real>(x: T) -> bool {
    x >= T::zero() && x <= T::one()
}
