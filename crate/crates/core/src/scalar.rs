//! Scalar kinds.
//!
//! Tensor data comes in exactly two flavours: exact rationals (used for the
//! algebraic identities, where equality must be decided without roundoff)
//! and binary floats (used for data extracted numerically from immersions).
//! A tensor is generic over one [`Scalar`], so the two kinds never mix.

use std::fmt;
use std::ops::{Add, Div, Mul, Neg, Sub};
use std::str::FromStr;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One as _, Signed as _, ToPrimitive, Zero as _};
use thiserror::Error;

/// Arbitrary precision rational number.
pub type Rational = BigRational;

/// Default tolerance for float comparisons.
pub const DEFAULT_TOLERANCE: f64 = 1e-9;

/// Field arithmetic shared by scalars and jets.
pub trait Num:
    Clone
    + fmt::Debug
    + PartialEq
    + Add<Output = Self>
    + Sub<Output = Self>
    + Mul<Output = Self>
    + Div<Output = Self>
    + Neg<Output = Self>
{
    fn zero() -> Self;
    fn one() -> Self;
    fn from_i64(v: i64) -> Self;
    /// Absolute size of the leading value. Used for pivot selection only.
    fn magnitude(&self) -> f64;
    fn is_zero(&self) -> bool;
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ScalarKind {
    Exact,
    Float,
}

/// Coefficient type of tensor data.
pub trait Scalar: Num + Send + Sync + 'static {
    const KIND: ScalarKind;

    /// Exact zero test for rationals; `|x| <= tol` for floats.
    fn near_zero(&self, tol: f64) -> bool;
    fn to_f64(&self) -> f64;
    fn from_rational(r: &Rational) -> Self;
    /// Exact rational value; `None` for non-finite floats.
    fn to_rational(&self) -> Option<Rational>;

    fn near(&self, other: &Self, tol: f64) -> bool {
        (self.clone() - other.clone()).near_zero(tol)
    }
}

impl Num for f64 {
    fn zero() -> Self {
        0.0
    }
    fn one() -> Self {
        1.0
    }
    fn from_i64(v: i64) -> Self {
        v as f64
    }
    fn magnitude(&self) -> f64 {
        self.abs()
    }
    fn is_zero(&self) -> bool {
        *self == 0.0
    }
}

impl Scalar for f64 {
    const KIND: ScalarKind = ScalarKind::Float;

    fn near_zero(&self, tol: f64) -> bool {
        self.abs() <= tol
    }
    fn to_f64(&self) -> f64 {
        *self
    }
    fn from_rational(r: &Rational) -> Self {
        num_traits::ToPrimitive::to_f64(r).unwrap_or(f64::NAN)
    }
    fn to_rational(&self) -> Option<Rational> {
        Rational::from_float(*self)
    }
}

impl Num for Rational {
    fn zero() -> Self {
        num_traits::Zero::zero()
    }
    fn one() -> Self {
        num_traits::One::one()
    }
    fn from_i64(v: i64) -> Self {
        Rational::from_integer(BigInt::from(v))
    }
    fn magnitude(&self) -> f64 {
        num_traits::ToPrimitive::to_f64(&self.abs()).unwrap_or(f64::INFINITY)
    }
    fn is_zero(&self) -> bool {
        num_traits::Zero::is_zero(self)
    }
}

impl Scalar for Rational {
    const KIND: ScalarKind = ScalarKind::Exact;

    fn near_zero(&self, _tol: f64) -> bool {
        num_traits::Zero::is_zero(self)
    }
    fn to_f64(&self) -> f64 {
        ToPrimitive::to_f64(self).unwrap_or(f64::NAN)
    }
    fn from_rational(r: &Rational) -> Self {
        r.clone()
    }
    fn to_rational(&self) -> Option<Rational> {
        Some(self.clone())
    }
}

/// Build `num/den` as a rational. Panics on a zero denominator.
pub fn ratio(num: i64, den: i64) -> Rational {
    Rational::new(BigInt::from(num), BigInt::from(den))
}

pub fn int(v: i64) -> Rational {
    Rational::from_integer(BigInt::from(v))
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum RationalParseError {
    #[error("empty rational literal")]
    Empty,
    #[error("invalid rational literal `{0}`")]
    Invalid(String),
    #[error("zero denominator in `{0}`")]
    ZeroDenominator(String),
}

/// Parse `"p/q"`, `"-p/q"` or an integer string.
pub fn parse_rational(text: &str) -> Result<Rational, RationalParseError> {
    let s = text.trim();
    if s.is_empty() {
        return Err(RationalParseError::Empty);
    }
    let (num, den) = match s.split_once('/') {
        Some((n, d)) => (n.trim(), Some(d.trim())),
        None => (s, None),
    };
    let parse_int = |part: &str, allow_sign: bool| -> Result<BigInt, RationalParseError> {
        let digits = if allow_sign {
            part.strip_prefix('-').or_else(|| part.strip_prefix('+')).unwrap_or(part)
        } else {
            part
        };
        if digits.is_empty() || !digits.bytes().all(|b| b.is_ascii_digit()) {
            return Err(RationalParseError::Invalid(text.to_string()));
        }
        BigInt::from_str(part).map_err(|_| RationalParseError::Invalid(text.to_string()))
    };
    let n = parse_int(num, true)?;
    match den {
        None => Ok(Rational::from_integer(n)),
        Some(d) => {
            let d = parse_int(d, false)?;
            if d.is_zero() {
                return Err(RationalParseError::ZeroDenominator(text.to_string()));
            }
            Ok(Rational::new(n, d))
        }
    }
}

/// Canonical text form: `p` for integers, `p/q` otherwise.
pub fn format_rational(r: &Rational) -> String {
    if r.denom().is_one() {
        r.numer().to_string()
    } else {
        format!("{}/{}", r.numer(), r.denom())
    }
}

/// Largest decimal exponent accepted by [`parse_decimal`].
pub const MAX_DECIMAL_EXPONENT: u32 = 1000;

/// Exact value of a decimal literal such as `1.25` or `3e-2`.
pub fn parse_decimal(text: &str) -> Option<Rational> {
    let (mantissa, exponent) = match text.find(['e', 'E']) {
        Some(i) => (&text[..i], text[i + 1..].parse::<i32>().ok()?),
        None => (text, 0),
    };
    let (int_part, frac_part) = mantissa.split_once('.').unwrap_or((mantissa, ""));
    if int_part.is_empty() && frac_part.is_empty() {
        return None;
    }
    if !int_part.bytes().chain(frac_part.bytes()).all(|b| b.is_ascii_digit()) {
        return None;
    }
    let digits = format!("{int_part}{frac_part}");
    let mut value = Rational::from_integer(BigInt::from_str(if digits.is_empty() { "0" } else { &digits }).ok()?);
    let scale = exponent.checked_sub(i32::try_from(frac_part.len()).ok()?)?;
    if scale.unsigned_abs() > MAX_DECIMAL_EXPONENT {
        return None;
    }
    let ten = BigInt::from(10);
    if scale >= 0 {
        value *= Rational::from_integer(num_traits::pow(ten, scale as usize));
    } else {
        value /= Rational::from_integer(num_traits::pow(ten, (-scale) as usize));
    }
    Some(value)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_fractions_and_integers() {
        assert_eq!(parse_rational("3/6").unwrap(), ratio(1, 2));
        assert_eq!(parse_rational("-7").unwrap(), int(-7));
        assert_eq!(parse_rational(" -2/4 ").unwrap(), ratio(-1, 2));
        assert!(matches!(parse_rational("1/0"), Err(RationalParseError::ZeroDenominator(_))));
        assert!(parse_rational("1/-2").is_err());
        assert!(parse_rational("abc").is_err());
        assert!(parse_rational("").is_err());
        assert!(parse_rational("--1").is_err());
    }

    #[test]
    fn formats_canonically() {
        assert_eq!(format_rational(&ratio(4, 2)), "2");
        assert_eq!(format_rational(&ratio(-3, 9)), "-1/3");
    }

    #[test]
    fn decimal_literals_are_exact() {
        assert_eq!(parse_decimal("0.5").unwrap(), ratio(1, 2));
        assert_eq!(parse_decimal("1.25e1").unwrap(), ratio(25, 2));
        assert_eq!(parse_decimal("3e-2").unwrap(), ratio(3, 100));
        assert_eq!(parse_decimal(".5").unwrap(), ratio(1, 2));
        assert!(parse_decimal("1.2.3").is_none());
        assert!(parse_decimal("e5").is_none());
        assert!(parse_decimal("3e200000000").is_none());
        assert!(parse_decimal("1e-2147483648").is_none());
    }

    #[test]
    fn near_zero_is_exact_for_rationals() {
        assert!(!ratio(1, 1_000_000_000_000).near_zero(1e-3));
        assert!(1e-12_f64.near_zero(1e-9));
    }
}
