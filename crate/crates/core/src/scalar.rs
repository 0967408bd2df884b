//! Scalar abstractions shared by the game-theory and shaping code.
//!
//! Payoff arithmetic works over any signed ordered number, so fixtures can be
//! checked with exact rationals while simulations run on `f64`. The learner and
//! classifier need transcendental functions and use [`Real`] instead.

use std::fmt::Debug;

use num_traits::{Float, FromPrimitive, Num, Signed, ToPrimitive};

/// Ordered signed number usable as a payoff or reward.
pub trait Scalar:
    Num + Signed + PartialOrd + Clone + Debug + FromPrimitive + ToPrimitive + Send + Sync + 'static
{
    /// Lossy conversion used when reporting; rationals round to the nearest `f64`.
    fn to_f64_lossy(&self) -> f64 {
        self.to_f64().unwrap_or(f64::NAN)
    }

    fn from_f64_lossy(v: f64) -> Self {
        Self::from_f64(v).expect("value representable in scalar type")
    }
}

impl<T> Scalar for T where
    T: Num + Signed + PartialOrd + Clone + Debug + FromPrimitive + ToPrimitive + Send + Sync + 'static
{
}

/// Floating point scalar: f32 or f64.
pub trait Real: Scalar + Float + Copy + Default + std::iter::Sum {}

impl Real for f32 {}
impl Real for f64 {}

/// `Real::from` for literals.
#[inline]
pub(crate) fn lit<T: Real>(v: f64) -> T {
    <T as num_traits::NumCast>::from(v).expect("f64 literal fits")
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_rational::Rational64;

    #[test]
    fn rationals_are_scalars() {
        fn half<T: Scalar>() -> T {
            T::one() / (T::one() + T::one())
        }
        assert_eq!(half::<Rational64>(), Rational64::new(1, 2));
        assert_eq!(half::<f64>(), 0.5);
        assert_eq!(Rational64::new(3, 4).to_f64_lossy(), 0.75);
    }
}
