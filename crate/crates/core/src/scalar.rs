//! Scalar abstraction shared by every numeric routine in the crate.

use std::fmt::{Debug, Display};
use std::iter::Sum;

use num_traits::{Float, FloatConst, FromPrimitive, ToPrimitive};

/// Floating point scalar: `f32` or `f64`.
pub trait Scalar:
    Float
    + FloatConst
    + FromPrimitive
    + ToPrimitive
    + Default
    + Debug
    + Display
    + Sum
    + Send
    + Sync
    + 'static
{
    /// Converts an `f64` literal into the scalar type.
    #[inline]
    fn lit(v: f64) -> Self {
        Self::from_f64(v).expect("f64 literal representable in scalar type")
    }

    #[inline]
    fn from_usize_lossy(v: usize) -> Self {
        Self::from_usize(v).expect("usize representable in scalar type")
    }

    #[inline]
    fn as_f64(self) -> f64 {
        self.to_f64().unwrap_or(f64::NAN)
    }
}

impl<T> Scalar for T where
    T: Float
        + FloatConst
        + FromPrimitive
        + ToPrimitive
        + Default
        + Debug
        + Display
        + Sum
        + Send
        + Sync
        + 'static
{
}

/// Logistic sigmoid evaluated without overflow for large `|z|`.
#[inline]
pub fn sigmoid<T: Scalar>(z: T) -> T {
    if z >= T::zero() {
        T::one() / (T::one() + (-z).exp())
    } else {
        let e = z.exp();
        e / (T::one() + e)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sigmoid_is_symmetric_and_saturates() {
        for z in [0.0, 0.3, 2.0, 17.0, 800.0] {
            let s: f64 = sigmoid(z) + sigmoid(-z);
            assert!((s - 1.0).abs() < 1e-15, "z={z}");
        }
        assert_eq!(sigmoid(0.0f64), 0.5);
        assert!(sigmoid(30.0f64) > 1.0 - 1e-13);
        assert!(sigmoid(-800.0f64) >= 0.0);
        assert!(sigmoid(-800.0f32).is_finite());
    }
}
