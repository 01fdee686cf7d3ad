//! Exact rational probability arithmetic.
//!
//! Every probability in this crate is a [`Q`]: an arbitrary-precision
//! rational kept in lowest terms with a positive denominator. There is no
//! floating-point path anywhere in the analysis pipeline; verdicts that are
//! stated as exact equivalences are decided by exact comparisons.

use std::fmt;
use std::ops::{Add, AddAssign, Div, Mul, Neg, Sub, SubAssign};
use std::str::FromStr;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};
use serde::{Deserialize, Deserializer, Serialize, Serializer};

/// An exact rational number. Serialized as the string `"a/b"`.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Q(BigRational);

impl Q {
    pub fn zero() -> Q {
        Q(BigRational::zero())
    }

    pub fn one() -> Q {
        Q(BigRational::one())
    }

    pub fn new(numer: i64, denom: i64) -> Q {
        assert!(denom != 0, "zero denominator");
        Q(BigRational::new(BigInt::from(numer), BigInt::from(denom)))
    }

    pub fn from_int(n: i64) -> Q {
        Q(BigRational::from_integer(BigInt::from(n)))
    }

    pub fn is_zero(&self) -> bool {
        self.0.is_zero()
    }

    pub fn is_negative(&self) -> bool {
        self.0.is_negative()
    }

    pub fn is_positive(&self) -> bool {
        self.0.is_positive()
    }

    pub fn abs(&self) -> Q {
        Q(self.0.abs())
    }

    pub fn recip(&self) -> Q {
        assert!(!self.is_zero(), "reciprocal of zero");
        Q(self.0.recip())
    }

    /// Nearest f64, for sampling and display only; never used in verdicts.
    pub fn to_f64(&self) -> f64 {
        let n = self.0.numer();
        let d = self.0.denom();
        // good enough for desk-scale magnitudes
        str::parse::<f64>(&n.to_string()).unwrap_or(f64::NAN)
            / str::parse::<f64>(&d.to_string()).unwrap_or(f64::NAN)
    }
}

/// Failure to parse a probability string.
#[derive(Debug, Clone, thiserror::Error, PartialEq, Eq)]
#[error("cannot parse {0:?} as a rational (expected \"a/b\" or a finite decimal)")]
pub struct ParseRatioError(pub String);

impl FromStr for Q {
    type Err = ParseRatioError;

    /// Accepts `"a/b"` with integer parts, or a finite decimal such as
    /// `"0.25"`, `"-1.5"`, `"3"`. Both forms convert exactly.
    fn from_str(s: &str) -> Result<Q, ParseRatioError> {
        let s = s.trim();
        let err = || ParseRatioError(s.to_string());
        if let Some((n, d)) = s.split_once('/') {
            let n: BigInt = n.trim().parse().map_err(|_| err())?;
            let d: BigInt = d.trim().parse().map_err(|_| err())?;
            if d.is_zero() {
                return Err(err());
            }
            return Ok(Q(BigRational::new(n, d)));
        }
        if let Some((int, frac)) = s.split_once('.') {
            if frac.is_empty() || !frac.bytes().all(|b| b.is_ascii_digit()) {
                return Err(err());
            }
            let negative = int.trim_start().starts_with('-');
            let int: BigInt = if int == "-" || int.is_empty() {
                BigInt::zero()
            } else {
                int.parse().map_err(|_| err())?
            };
            let num: BigInt = frac.parse().map_err(|_| err())?;
            let den = BigInt::from(10u8).pow(frac.len() as u32);
            let frac_part = BigRational::new(num, den);
            let int_part = BigRational::from_integer(int);
            let val = if negative {
                int_part - frac_part
            } else {
                int_part + frac_part
            };
            return Ok(Q(val));
        }
        let n: BigInt = s.parse().map_err(|_| err())?;
        Ok(Q(BigRational::from_integer(n)))
    }
}

impl fmt::Display for Q {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}/{}", self.0.numer(), self.0.denom())
    }
}

impl fmt::Debug for Q {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{self}")
    }
}

impl Serialize for Q {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.serialize_str(&self.to_string())
    }
}

impl<'de> Deserialize<'de> for Q {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Q, D::Error> {
        let s = String::deserialize(deserializer)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

macro_rules! binop {
    ($trait:ident, $method:ident) => {
        impl $trait for Q {
            type Output = Q;
            fn $method(self, rhs: Q) -> Q {
                Q(self.0.$method(rhs.0))
            }
        }
        impl $trait<&Q> for &Q {
            type Output = Q;
            fn $method(self, rhs: &Q) -> Q {
                Q((&self.0).$method(&rhs.0))
            }
        }
        impl $trait<&Q> for Q {
            type Output = Q;
            fn $method(self, rhs: &Q) -> Q {
                Q(self.0.$method(&rhs.0))
            }
        }
        impl $trait<Q> for &Q {
            type Output = Q;
            fn $method(self, rhs: Q) -> Q {
                Q((&self.0).$method(rhs.0))
            }
        }
    };
}

binop!(Add, add);
binop!(Sub, sub);
binop!(Mul, mul);
binop!(Div, div);

impl Neg for Q {
    type Output = Q;
    fn neg(self) -> Q {
        Q(-self.0)
    }
}

impl Neg for &Q {
    type Output = Q;
    fn neg(self) -> Q {
        Q(-&self.0)
    }
}

impl AddAssign<&Q> for Q {
    fn add_assign(&mut self, rhs: &Q) {
        self.0 += &rhs.0;
    }
}

impl SubAssign<&Q> for Q {
    fn sub_assign(&mut self, rhs: &Q) {
        self.0 -= &rhs.0;
    }
}

impl std::iter::Sum for Q {
    fn sum<I: Iterator<Item = Q>>(iter: I) -> Q {
        iter.fold(Q::zero(), |a, b| a + b)
    }
}

impl<'a> std::iter::Sum<&'a Q> for Q {
    fn sum<I: Iterator<Item = &'a Q>>(iter: I) -> Q {
        iter.fold(Q::zero(), |a, b| a + b)
    }
}
