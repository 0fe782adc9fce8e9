//! Exact rational scalars and the small ring abstraction every evaluator is
//! written against.

use std::fmt;
use std::ops::{Add, Div, Mul, Neg, Sub};
use std::str::FromStr;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::WickError;

/// Commutative ring operations needed to expand determinants and permanents.
///
/// Implemented for exact rationals, symbolic sums and `f64` (the float path
/// used only for large permanents).
pub trait Ring: Clone + PartialEq + fmt::Debug + Send + Sync {
    fn zero() -> Self;
    fn one() -> Self;
    fn add(&self, other: &Self) -> Self;
    fn mul(&self, other: &Self) -> Self;
    fn neg(&self) -> Self;
    fn is_zero(&self) -> bool;

    fn sub(&self, other: &Self) -> Self {
        self.add(&other.neg())
    }

    /// Sum of many values. Symbolic sums override this to normalize once.
    fn sum_all(items: Vec<Self>) -> Self {
        items.iter().fold(Self::zero(), |acc, x| acc.add(x))
    }

    fn from_integer(k: i64) -> Self {
        let mut acc = Self::zero();
        let unit = if k < 0 { Self::one().neg() } else { Self::one() };
        for _ in 0..k.unsigned_abs() {
            acc = acc.add(&unit);
        }
        acc
    }
}

/// An exact rational number, always in lowest terms with a positive denominator.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Default)]
pub struct ExactScalar(BigRational);

impl ExactScalar {
    pub fn new(numer: impl Into<BigInt>, denom: impl Into<BigInt>) -> Self {
        let denom = denom.into();
        assert!(!denom.is_zero(), "zero denominator");
        ExactScalar(BigRational::new(numer.into(), denom))
    }

    pub fn integer(k: impl Into<BigInt>) -> Self {
        ExactScalar(BigRational::from_integer(k.into()))
    }

    pub fn from_rational(r: BigRational) -> Self {
        ExactScalar(r)
    }

    pub fn as_rational(&self) -> &BigRational {
        &self.0
    }

    pub fn numer(&self) -> &BigInt {
        self.0.numer()
    }

    pub fn denom(&self) -> &BigInt {
        self.0.denom()
    }

    pub fn is_integer(&self) -> bool {
        self.0.is_integer()
    }

    pub fn recip(&self) -> Option<Self> {
        if self.0.is_zero() {
            None
        } else {
            Some(ExactScalar(self.0.recip()))
        }
    }

    pub fn abs(&self) -> Self {
        ExactScalar(self.0.abs())
    }

    pub fn to_f64(&self) -> f64 {
        num_traits::ToPrimitive::to_f64(&self.0).unwrap_or(f64::NAN)
    }

    /// Canonical `p/q` form used in JSON output (denominator always written).
    pub fn to_fraction_string(&self) -> String {
        format!("{}/{}", self.0.numer(), self.0.denom())
    }
}

impl fmt::Display for ExactScalar {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.0.is_integer() {
            write!(f, "{}", self.0.numer())
        } else {
            write!(f, "{}/{}", self.0.numer(), self.0.denom())
        }
    }
}

impl fmt::Debug for ExactScalar {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(self, f)
    }
}

impl FromStr for ExactScalar {
    type Err = WickError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let bad = || WickError::ParseScalar(s.to_string());
        let t = s.trim();
        match t.split_once('/') {
            Some((p, q)) => {
                let p: BigInt = p.trim().parse().map_err(|_| bad())?;
                let q: BigInt = q.trim().parse().map_err(|_| bad())?;
                if q.is_zero() {
                    return Err(bad());
                }
                Ok(ExactScalar::new(p, q))
            }
            None => {
                let p: BigInt = t.parse().map_err(|_| bad())?;
                Ok(ExactScalar::integer(p))
            }
        }
    }
}

impl Serialize for ExactScalar {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.serialize_str(&self.to_fraction_string())
    }
}

impl<'de> Deserialize<'de> for ExactScalar {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let s = String::deserialize(deserializer)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

impl From<i64> for ExactScalar {
    fn from(k: i64) -> Self {
        ExactScalar::integer(k)
    }
}

macro_rules! forward_binop {
    ($tr:ident, $method:ident) => {
        impl $tr for ExactScalar {
            type Output = ExactScalar;
            fn $method(self, rhs: ExactScalar) -> ExactScalar {
                ExactScalar($tr::$method(self.0, rhs.0))
            }
        }
        impl<'a> $tr<&'a ExactScalar> for &'a ExactScalar {
            type Output = ExactScalar;
            fn $method(self, rhs: &'a ExactScalar) -> ExactScalar {
                ExactScalar($tr::$method(&self.0, &rhs.0))
            }
        }
    };
}

forward_binop!(Add, add);
forward_binop!(Sub, sub);
forward_binop!(Mul, mul);
forward_binop!(Div, div);

impl Neg for ExactScalar {
    type Output = ExactScalar;
    fn neg(self) -> ExactScalar {
        ExactScalar(-self.0)
    }
}

impl Neg for &ExactScalar {
    type Output = ExactScalar;
    fn neg(self) -> ExactScalar {
        ExactScalar(-&self.0)
    }
}

impl Ring for ExactScalar {
    fn zero() -> Self {
        ExactScalar(BigRational::zero())
    }
    fn one() -> Self {
        ExactScalar(BigRational::one())
    }
    fn add(&self, other: &Self) -> Self {
        self + other
    }
    fn mul(&self, other: &Self) -> Self {
        self * other
    }
    fn neg(&self) -> Self {
        -self
    }
    fn sub(&self, other: &Self) -> Self {
        self - other
    }
    fn is_zero(&self) -> bool {
        self.0.is_zero()
    }
    fn from_integer(k: i64) -> Self {
        ExactScalar::integer(k)
    }
}

impl Ring for f64 {
    fn zero() -> Self {
        0.0
    }
    fn one() -> Self {
        1.0
    }
    fn add(&self, other: &Self) -> Self {
        self + other
    }
    fn mul(&self, other: &Self) -> Self {
        self * other
    }
    fn neg(&self) -> Self {
        -self
    }
    fn sub(&self, other: &Self) -> Self {
        self - other
    }
    fn is_zero(&self) -> bool {
        *self == 0.0
    }
    fn from_integer(k: i64) -> Self {
        k as f64
    }
}
