//! Numeric modes for probabilities.
//!
//! Every distribution is parameterised by a [`Scalar`]. Two modes exist:
//! exact rationals ([`Rational`], always in lowest terms with a positive
//! denominator) and IEEE doubles. Mixing modes is a type error, so a
//! computation never silently switches from one to the other.

use std::fmt;
use std::ops::{Add, Div, Mul, Neg, Sub};

use num_bigint::{BigInt, BigUint};
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};

/// Arbitrary-precision rational number.
pub type Rational = BigRational;

/// Which numeric path produced a value.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Mode {
    Rational,
    Float,
}

impl Mode {
    pub fn as_str(self) -> &'static str {
        match self {
            Mode::Rational => "rational",
            Mode::Float => "float",
        }
    }
}

impl fmt::Display for Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

pub trait Scalar:
    Clone
    + fmt::Debug
    + PartialEq
    + PartialOrd
    + Send
    + Sync
    + 'static
    + Add<Output = Self>
    + Sub<Output = Self>
    + Mul<Output = Self>
    + Div<Output = Self>
    + Neg<Output = Self>
{
    const MODE: Mode;

    fn zero() -> Self;
    fn one() -> Self;
    fn from_u64(n: u64) -> Self;
    fn from_i64(n: i64) -> Self;
    fn from_biguint(n: &BigUint) -> Self;
    fn to_f64(&self) -> f64;
    fn powu(&self, exp: u64) -> Self;

    /// `num / den`. Panics if `den == 0`.
    fn from_ratio(num: i64, den: i64) -> Self {
        assert!(den != 0, "zero denominator");
        Self::from_i64(num) / Self::from_i64(den)
    }

    fn is_zero(&self) -> bool {
        *self == Self::zero()
    }

    fn is_negative(&self) -> bool {
        *self < Self::zero()
    }

    /// Tolerance used when checking that probabilities sum to one.
    fn normalization_tolerance() -> f64 {
        match Self::MODE {
            Mode::Rational => 0.0,
            Mode::Float => 1e-9,
        }
    }

    /// Exact equality for rationals, `|a - b| <= tol` for floats.
    fn close_to(&self, other: &Self, tol: f64) -> bool {
        match Self::MODE {
            Mode::Rational => self == other,
            Mode::Float => (self.to_f64() - other.to_f64()).abs() <= tol,
        }
    }

    fn sum<I: IntoIterator<Item = Self>>(iter: I) -> Self {
        iter.into_iter().fold(Self::zero(), |acc, x| acc + x)
    }
}

impl Scalar for Rational {
    const MODE: Mode = Mode::Rational;

    fn zero() -> Self {
        Zero::zero()
    }

    fn one() -> Self {
        One::one()
    }

    fn from_u64(n: u64) -> Self {
        BigRational::from_integer(BigInt::from(n))
    }

    fn from_i64(n: i64) -> Self {
        BigRational::from_integer(BigInt::from(n))
    }

    fn from_biguint(n: &BigUint) -> Self {
        BigRational::from_integer(BigInt::from(n.clone()))
    }

    fn to_f64(&self) -> f64 {
        ToPrimitive::to_f64(self).unwrap_or(f64::NAN)
    }

    fn powu(&self, exp: u64) -> Self {
        num_traits::pow::Pow::pow(self, exp)
    }

    fn is_zero(&self) -> bool {
        Zero::is_zero(self)
    }

    fn is_negative(&self) -> bool {
        Signed::is_negative(self)
    }
}

impl Scalar for f64 {
    const MODE: Mode = Mode::Float;

    fn zero() -> Self {
        0.0
    }

    fn one() -> Self {
        1.0
    }

    fn from_u64(n: u64) -> Self {
        n as f64
    }

    fn from_i64(n: i64) -> Self {
        n as f64
    }

    fn from_biguint(n: &BigUint) -> Self {
        ToPrimitive::to_f64(n).unwrap_or(f64::INFINITY)
    }

    fn to_f64(&self) -> f64 {
        *self
    }

    fn powu(&self, exp: u64) -> Self {
        match i32::try_from(exp) {
            Ok(e) => self.powi(e),
            Err(_) => self.powf(exp as f64),
        }
    }
}

/// Shorthand for an exact rational `num / den`.
pub fn ratio(num: i64, den: i64) -> Rational {
    Rational::from_ratio(num, den)
}

/// Renders a rational as `"num/den"`, or `"num"` when integral.
pub fn format_rational(r: &Rational) -> String {
    if r.is_integer() {
        r.numer().to_string()
    } else {
        format!("{}/{}", r.numer(), r.denom())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rationals_are_reduced() {
        let r = ratio(6, -8);
        assert_eq!(r.numer(), &BigInt::from(-3));
        assert_eq!(r.denom(), &BigInt::from(4));
        assert_eq!(format_rational(&r), "-3/4");
        assert_eq!(format_rational(&ratio(8, 4)), "2");
    }

    #[test]
    fn powers() {
        assert_eq!(ratio(2, 3).powu(3), ratio(8, 27));
        assert_eq!(ratio(1, 1).powu(0), ratio(1, 1));
        assert_eq!(ratio(5, 7).powu(0), ratio(1, 1));
        assert_eq!(0.5f64.powu(2), 0.25);
    }

    #[test]
    fn closeness_depends_on_mode() {
        assert!(!ratio(1, 3).close_to(&ratio(1, 3000000), 1.0));
        assert!(0.1f64.close_to(&0.1000000001, 1e-9));
        assert!(!0.1f64.close_to(&0.2, 1e-9));
    }

    #[test]
    #[should_panic]
    fn zero_denominator_panics() {
        let _ = ratio(1, 0);
    }
}
