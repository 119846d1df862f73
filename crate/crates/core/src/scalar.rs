//! Scalar abstraction: the whole engine is generic over the floating-point
//! type via `num-traits`, so problems can run in `f32` or `f64`.

use std::fmt::{Debug, Display};
use std::ops::AddAssign;

use num_traits::{Float, FromPrimitive, ToPrimitive};

/// Floating-point scalar used for feature values, costs, distances,
/// probabilities and random keys.
pub trait Scalar:
    Float + FromPrimitive + ToPrimitive + AddAssign + Debug + Display + Send + Sync + 'static
{
    /// Converts from `f64`, panicking only on non-finite inputs that the
    /// target type cannot represent.
    fn from_f64_lossy(v: f64) -> Self {
        Self::from_f64(v).expect("f64 value representable in scalar type")
    }

    /// Converts to `f64` for reporting and serialization.
    fn to_f64_lossy(self) -> f64 {
        self.to_f64().expect("scalar value representable as f64")
    }
}

impl<T> Scalar for T where
    T: Float + FromPrimitive + ToPrimitive + AddAssign + Debug + Display + Send + Sync + 'static
{
}

#[cfg(test)]
mod tests {
    use super::*;

    fn midpoint<S: Scalar>(a: S, b: S) -> S {
        (a + b) / S::from_f64_lossy(2.0)
    }

    #[test]
    fn works_for_both_float_widths() {
        assert_eq!(midpoint(1.0f64, 3.0f64), 2.0);
        assert_eq!(midpoint(1.0f32, 3.0f32), 2.0);
    }
}
