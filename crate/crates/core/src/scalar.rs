//! Scalar abstraction: all numeric code in this crate is generic over the
//! floating-point type.

use std::fmt::{Debug, Display};
use std::iter::Sum;

use num_traits::{Float, NumAssign};

/// Floating-point scalar usable throughout the crate: `f32` or `f64`.
pub trait Scalar:
    Float + NumAssign + Sum + Debug + Display + Send + Sync + 'static
{
}

impl<T> Scalar for T where T: Float + NumAssign + Sum + Debug + Display + Send + Sync + 'static {}

/// Convert an `f64` constant into the working scalar type.
///
/// Panics only if the value is not representable at all, which cannot happen
/// for the finite constants this crate feeds it.
#[inline]
pub fn cast<S: Scalar>(x: f64) -> S {
    S::from(x).expect("finite f64 constant must convert to the scalar type")
}

/// Convert a count into the working scalar type.
#[inline]
pub fn cast_usize<S: Scalar>(n: usize) -> S {
    S::from(n).expect("usize must convert to the scalar type")
}

/// Widen the working scalar back to `f64` (metrics and reports are `f64`).
#[inline]
pub fn to_f64<S: Scalar>(x: S) -> f64 {
    num_traits::cast(x).expect("scalar must convert to f64")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cast_round_trips_small_constants() {
        assert_eq!(cast::<f64>(0.25), 0.25);
        assert_eq!(cast::<f32>(0.25), 0.25f32);
        assert_eq!(cast_usize::<f64>(7), 7.0);
    }
}
