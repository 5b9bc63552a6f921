//! Scalars that are either exact rationals or `f64`.

use std::cmp::Ordering;
use std::fmt;
use std::str::FromStr;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, ToPrimitive, Zero};

/// A real number carried either exactly or as a double.
#[derive(Clone, Debug, PartialEq)]
pub enum Real {
    Exact(BigRational),
    Float(f64),
}

/// A point of a one-dimensional phase space.
///
/// Circle points are kept in `[0, 1)`; interval points are validated by the
/// map that consumes them.
pub type Point = Real;

impl Real {
    pub fn ratio(num: i64, den: i64) -> Self {
        Real::Exact(BigRational::new(BigInt::from(num), BigInt::from(den)))
    }

    pub fn int(v: i64) -> Self {
        Real::Exact(BigRational::from_integer(BigInt::from(v)))
    }

    pub fn is_exact(&self) -> bool {
        matches!(self, Real::Exact(_))
    }

    pub fn to_f64(&self) -> f64 {
        match self {
            Real::Exact(q) => rational_to_f64(q),
            Real::Float(v) => *v,
        }
    }

    pub fn as_exact(&self) -> Option<&BigRational> {
        match self {
            Real::Exact(q) => Some(q),
            Real::Float(_) => None,
        }
    }

    /// Total order used for sorting; exact values compare exactly with each
    /// other, mixed pairs fall back to `f64`.
    pub fn cmp_total(&self, other: &Real) -> Ordering {
        match (self, other) {
            (Real::Exact(a), Real::Exact(b)) => a.cmp(b),
            _ => self.to_f64().total_cmp(&other.to_f64()),
        }
    }
}

impl From<f64> for Real {
    fn from(v: f64) -> Self {
        Real::Float(v)
    }
}

impl From<BigRational> for Real {
    fn from(q: BigRational) -> Self {
        Real::Exact(q)
    }
}

impl fmt::Display for Real {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Real::Exact(q) => write!(f, "{q}"),
            Real::Float(v) => write!(f, "{v}"),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, thiserror::Error)]
#[error("cannot parse `{0}` as a number")]
pub struct ParseRealError(pub String);

impl FromStr for Real {
    type Err = ParseRealError;

    /// Accepts `p/q` and plain decimals (parsed exactly). Anything else that
    /// `f64` understands (exponents, `inf`) is kept as a float.
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let s = s.trim();
        if let Some(q) = parse_exact(s) {
            return Ok(Real::Exact(q));
        }
        s.parse::<f64>()
            .ok()
            .filter(|v| v.is_finite())
            .map(Real::Float)
            .ok_or_else(|| ParseRealError(s.to_string()))
    }
}

fn parse_exact(s: &str) -> Option<BigRational> {
    if let Some((n, d)) = s.split_once('/') {
        let n = parse_decimal(n.trim())?;
        let d = parse_decimal(d.trim())?;
        if d.is_zero() {
            return None;
        }
        return Some(n / d);
    }
    parse_decimal(s)
}

fn parse_decimal(s: &str) -> Option<BigRational> {
    let (neg, body) = match s.strip_prefix('-') {
        Some(rest) => (true, rest),
        None => (false, s.strip_prefix('+').unwrap_or(s)),
    };
    if body.is_empty() {
        return None;
    }
    let (int_part, frac_part) = body.split_once('.').unwrap_or((body, ""));
    if int_part.is_empty() && frac_part.is_empty() {
        return None;
    }
    if !int_part.chars().chain(frac_part.chars()).all(|c| c.is_ascii_digit()) {
        return None;
    }
    let digits = format!("{int_part}{frac_part}");
    let num: BigInt = if digits.is_empty() { BigInt::zero() } else { digits.parse().ok()? };
    let den = num_traits::pow(BigInt::from(10), frac_part.len());
    let q = BigRational::new(num, den);
    Some(if neg { -q } else { q })
}

pub(crate) fn rational_to_f64(q: &BigRational) -> f64 {
    if let Some(v) = q.to_f64() {
        if v.is_finite() {
            return v;
        }
    }
    // Fall back for huge numerators/denominators.
    let n = q.numer().to_f64().unwrap_or(f64::NAN);
    let d = q.denom().to_f64().unwrap_or(f64::NAN);
    n / d
}

/// Reduce an exact value into `[0, 1)`.
pub(crate) fn frac_exact(q: &BigRational) -> BigRational {
    q - q.floor()
}

pub(crate) fn frac_f64(x: f64) -> f64 {
    let r = x - x.floor();
    if r >= 1.0 {
        0.0
    } else {
        r
    }
}

pub(crate) fn one() -> BigRational {
    BigRational::one()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn decimals_parse_exactly() {
        assert_eq!("1.6".parse::<Real>().unwrap(), Real::ratio(8, 5));
        assert_eq!("3/2".parse::<Real>().unwrap(), Real::ratio(3, 2));
        assert_eq!("-.25".parse::<Real>().unwrap(), Real::ratio(-1, 4));
        assert_eq!("2".parse::<Real>().unwrap(), Real::int(2));
    }

    #[test]
    fn exponents_fall_back_to_float() {
        assert_eq!("1e-3".parse::<Real>().unwrap(), Real::Float(1e-3));
        assert!("abc".parse::<Real>().is_err());
        assert!("1/0".parse::<Real>().is_err());
    }

    #[test]
    fn frac_wraps_negative_values() {
        assert_eq!(frac_f64(-0.25), 0.75);
        assert_eq!(frac_exact(&BigRational::new((-1).into(), 4.into())), BigRational::new(3.into(), 4.into()));
    }
}
