//! Scalar abstraction for the LP relaxation: IEEE floats with a tolerance, or
//! exact rationals with none.

use std::fmt::Debug;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{FromPrimitive, Num, Signed, ToPrimitive, Zero};

pub trait Scalar: Clone + Debug + PartialOrd + Num + Signed + 'static {
    /// Values with magnitude at or below this are treated as zero.
    fn tolerance() -> Self;
    fn from_int(v: i64) -> Self;
    fn to_f64(&self) -> f64;
    fn is_exact() -> bool;

    fn is_pos(&self) -> bool {
        *self > Self::tolerance()
    }

    fn is_neg(&self) -> bool {
        *self < -Self::tolerance()
    }

    fn is_near_zero(&self) -> bool {
        !self.is_pos() && !self.is_neg()
    }

    fn floor_i64(&self) -> i64;
    fn ceil_i64(&self) -> i64;
}

impl Scalar for f64 {
    fn tolerance() -> Self {
        1e-9
    }

    fn from_int(v: i64) -> Self {
        v as f64
    }

    fn to_f64(&self) -> f64 {
        *self
    }

    fn is_exact() -> bool {
        false
    }

    fn floor_i64(&self) -> i64 {
        self.floor() as i64
    }

    fn ceil_i64(&self) -> i64 {
        self.ceil() as i64
    }
}

impl Scalar for f32 {
    fn tolerance() -> Self {
        1e-5
    }

    fn from_int(v: i64) -> Self {
        v as f32
    }

    fn to_f64(&self) -> f64 {
        *self as f64
    }

    fn is_exact() -> bool {
        false
    }

    fn floor_i64(&self) -> i64 {
        self.floor() as i64
    }

    fn ceil_i64(&self) -> i64 {
        self.ceil() as i64
    }
}

impl Scalar for BigRational {
    fn tolerance() -> Self {
        BigRational::zero()
    }

    fn from_int(v: i64) -> Self {
        BigRational::from_integer(BigInt::from(v))
    }

    fn to_f64(&self) -> f64 {
        ToPrimitive::to_f64(self).unwrap_or(f64::NAN)
    }

    fn is_exact() -> bool {
        true
    }

    fn floor_i64(&self) -> i64 {
        self.floor().to_integer().to_i64().unwrap_or(i64::MIN)
    }

    fn ceil_i64(&self) -> i64 {
        self.ceil().to_integer().to_i64().unwrap_or(i64::MAX)
    }
}

/// Converts an `f64` literal into any float-like scalar.
pub(crate) fn lit<T: FromPrimitive>(v: f64) -> T {
    T::from_f64(v).expect("literal representable")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rational_rounding() {
        let half = BigRational::new(BigInt::from(-3), BigInt::from(2));
        assert_eq!(half.floor_i64(), -2);
        assert_eq!(half.ceil_i64(), -1);
        assert!(BigRational::from_int(0).is_near_zero());
        assert!(half.is_neg());
        assert!(1e-12f64.is_near_zero());
    }
}
