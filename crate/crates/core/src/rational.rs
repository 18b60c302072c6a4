//! Exact rational scalars.
//!
//! [`NonNegRational`] is the value type for every distance and every function
//! value. Signed [`Rational`]s only appear as affine coefficients of
//! piecewise functions.

use std::fmt;
use std::str::FromStr;

use num::bigint::BigInt;
use num::rational::BigRational;
use num::{Signed, Zero};
use serde::{Deserialize, Deserializer, Serialize, Serializer};
use thiserror::Error;

/// Signed exact rational (always kept in lowest terms by `num`).
pub type Rational = BigRational;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ParseRationalError {
    #[error("empty rational literal")]
    Empty,
    #[error("invalid rational literal {0:?}")]
    Invalid(String),
    #[error("zero denominator in {0:?}")]
    ZeroDenominator(String),
    #[error("negative value {0:?} where a nonnegative rational is required")]
    Negative(String),
}

/// Parses `"p/q"` or an integer literal into a signed rational.
pub fn parse_rational(s: &str) -> Result<Rational, ParseRationalError> {
    let t = s.trim();
    if t.is_empty() {
        return Err(ParseRationalError::Empty);
    }
    let int = |part: &str| -> Result<BigInt, ParseRationalError> {
        let p = part.trim();
        let digits = p.strip_prefix(['-', '+']).unwrap_or(p);
        if digits.is_empty() || !digits.bytes().all(|b| b.is_ascii_digit()) {
            return Err(ParseRationalError::Invalid(s.to_string()));
        }
        p.parse::<BigInt>()
            .map_err(|_| ParseRationalError::Invalid(s.to_string()))
    };
    match t.split_once('/') {
        None => Ok(Rational::from_integer(int(t)?)),
        Some((num, den)) => {
            let num = int(num)?;
            let den = int(den)?;
            if den.is_zero() {
                return Err(ParseRationalError::ZeroDenominator(s.to_string()));
            }
            Ok(Rational::new(num, den))
        }
    }
}

/// Canonical text form: `"p/q"` in lowest terms, or `"p"` when integral.
pub fn format_rational(r: &Rational) -> String {
    if r.is_integer() {
        r.numer().to_string()
    } else {
        format!("{}/{}", r.numer(), r.denom())
    }
}

/// An exact nonnegative rational number.
///
/// Ordering is the usual numeric order; [`NonNegRational::join`] is `max`,
/// which makes the type the carrier of the monoid `(R+, max)` with identity 0.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct NonNegRational(Rational);

impl NonNegRational {
    pub fn zero() -> Self {
        Self(Rational::zero())
    }

    pub fn from_integer(n: u64) -> Self {
        Self(Rational::from_integer(BigInt::from(n)))
    }

    /// `num / den`; `None` when `den == 0`.
    pub fn from_ratio(num: u64, den: u64) -> Option<Self> {
        (den != 0).then(|| Self(Rational::new(BigInt::from(num), BigInt::from(den))))
    }

    /// Wraps a signed rational, rejecting negatives.
    pub fn new(r: Rational) -> Option<Self> {
        (!r.is_negative()).then_some(Self(r))
    }

    pub fn as_rational(&self) -> &Rational {
        &self.0
    }

    pub fn into_rational(self) -> Rational {
        self.0
    }

    pub fn is_zero(&self) -> bool {
        self.0.is_zero()
    }

    pub fn is_positive(&self) -> bool {
        self.0.is_positive()
    }

    pub fn numer(&self) -> &BigInt {
        self.0.numer()
    }

    pub fn denom(&self) -> &BigInt {
        self.0.denom()
    }

    /// `max(self, other)`.
    pub fn join(&self, other: &Self) -> Self {
        if self >= other {
            self.clone()
        } else {
            other.clone()
        }
    }

    /// Integer value when the number is an integer fitting in `u64`.
    pub fn to_u64(&self) -> Option<u64> {
        if !self.0.is_integer() {
            return None;
        }
        u64::try_from(self.0.numer()).ok()
    }
}

impl std::ops::Add for &NonNegRational {
    type Output = NonNegRational;

    fn add(self, rhs: Self) -> NonNegRational {
        NonNegRational(&self.0 + &rhs.0)
    }
}

impl From<u64> for NonNegRational {
    fn from(n: u64) -> Self {
        Self::from_integer(n)
    }
}

impl FromStr for NonNegRational {
    type Err = ParseRationalError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let r = parse_rational(s)?;
        Self::new(r).ok_or_else(|| ParseRationalError::Negative(s.to_string()))
    }
}

impl fmt::Display for NonNegRational {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&format_rational(&self.0))
    }
}

impl fmt::Debug for NonNegRational {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(self, f)
    }
}

impl Serialize for NonNegRational {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.serialize_str(&self.to_string())
    }
}

impl<'de> Deserialize<'de> for NonNegRational {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let s = String::deserialize(deserializer)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// Serde adapter for signed rationals written as strings.
pub mod serde_rational {
    use super::{format_rational, parse_rational, Rational};
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(r: &Rational, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.serialize_str(&format_rational(r))
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(deserializer: D) -> Result<Rational, D::Error> {
        let s = String::deserialize(deserializer)?;
        parse_rational(&s).map_err(serde::de::Error::custom)
    }
}

/// Shorthand used throughout the tests: `q("3/2")`.
///
/// Panics on malformed or negative input.
pub fn q(s: &str) -> NonNegRational {
    s.parse()
        .unwrap_or_else(|e| panic!("bad rational literal {s:?}: {e}"))
}
