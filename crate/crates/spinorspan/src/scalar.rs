//! Exact rational scalars.
//!
//! Every coefficient in the engine is a [`Scalar`]: a reduced fraction of
//! machine integers with checked arithmetic. Overflow aborts loudly instead of
//! wrapping, so a result is either exact or absent.

use std::fmt;
use std::ops::{Add, AddAssign, Div, Mul, Neg, Sub};
use std::str::FromStr;

use num_rational::Ratio;
use num_traits::{CheckedAdd, CheckedDiv, CheckedMul, CheckedSub, One, Zero};
use serde::{Deserialize, Deserializer, Serialize, Serializer};

/// Exact rational number.
#[derive(Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Default)]
pub struct Scalar(Ratio<i64>);

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("cannot parse rational `{0}` (expected p or p/q)")]
pub struct ParseScalarError(pub String);

impl Scalar {
    pub const ZERO: Scalar = Scalar(Ratio::new_raw(0, 1));
    pub const ONE: Scalar = Scalar(Ratio::new_raw(1, 1));

    pub fn new(num: i64, den: i64) -> Scalar {
        assert!(den != 0, "zero denominator");
        Scalar(Ratio::new(num, den))
    }

    pub fn int(n: i64) -> Scalar {
        Scalar(Ratio::from_integer(n))
    }

    pub fn is_zero(&self) -> bool {
        self.0.is_zero()
    }

    pub fn is_one(&self) -> bool {
        self.0.is_one()
    }

    pub fn numer(&self) -> i64 {
        *self.0.numer()
    }

    pub fn denom(&self) -> i64 {
        *self.0.denom()
    }

    pub fn recip(&self) -> Scalar {
        assert!(!self.is_zero(), "inverse of zero");
        Scalar(self.0.recip())
    }

    /// `(-1)^k` as a scalar.
    pub fn sign(odd: bool) -> Scalar {
        if odd {
            -Scalar::ONE
        } else {
            Scalar::ONE
        }
    }

    pub fn factorial(n: usize) -> Scalar {
        (1..=n as i64).fold(Scalar::ONE, |acc, k| acc * Scalar::int(k))
    }
}

fn overflow(op: &str) -> ! {
    panic!("exact rational overflow in {op}; widen the scalar type")
}

impl Add for Scalar {
    type Output = Scalar;
    fn add(self, rhs: Scalar) -> Scalar {
        Scalar(
            self.0
                .checked_add(&rhs.0)
                .unwrap_or_else(|| overflow("add")),
        )
    }
}

impl AddAssign for Scalar {
    fn add_assign(&mut self, rhs: Scalar) {
        *self = *self + rhs;
    }
}

impl Sub for Scalar {
    type Output = Scalar;
    fn sub(self, rhs: Scalar) -> Scalar {
        Scalar(
            self.0
                .checked_sub(&rhs.0)
                .unwrap_or_else(|| overflow("sub")),
        )
    }
}

impl Mul for Scalar {
    type Output = Scalar;
    fn mul(self, rhs: Scalar) -> Scalar {
        Scalar(
            self.0
                .checked_mul(&rhs.0)
                .unwrap_or_else(|| overflow("mul")),
        )
    }
}

impl Div for Scalar {
    type Output = Scalar;
    fn div(self, rhs: Scalar) -> Scalar {
        assert!(!rhs.is_zero(), "division by zero");
        Scalar(
            self.0
                .checked_div(&rhs.0)
                .unwrap_or_else(|| overflow("div")),
        )
    }
}

impl Neg for Scalar {
    type Output = Scalar;
    fn neg(self) -> Scalar {
        Scalar(-self.0)
    }
}

impl From<i64> for Scalar {
    fn from(n: i64) -> Scalar {
        Scalar::int(n)
    }
}

impl fmt::Display for Scalar {
    /// Always `p/q`, also for integers, so reports never mix formats.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}/{}", self.0.numer(), self.0.denom())
    }
}

impl fmt::Debug for Scalar {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if *self.0.denom() == 1 {
            write!(f, "{}", self.0.numer())
        } else {
            write!(f, "{}/{}", self.0.numer(), self.0.denom())
        }
    }
}

impl FromStr for Scalar {
    type Err = ParseScalarError;

    fn from_str(s: &str) -> Result<Scalar, ParseScalarError> {
        let err = || ParseScalarError(s.to_string());
        let t = s.trim();
        match t.split_once('/') {
            Some((p, q)) => {
                let p: i64 = p.trim().parse().map_err(|_| err())?;
                let q: i64 = q.trim().parse().map_err(|_| err())?;
                if q == 0 {
                    return Err(err());
                }
                Ok(Scalar::new(p, q))
            }
            None => t.parse::<i64>().map(Scalar::int).map_err(|_| err()),
        }
    }
}

impl Serialize for Scalar {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&self.to_string())
    }
}

impl<'de> Deserialize<'de> for Scalar {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Scalar, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parse_and_print_round_trip() {
        let q: Scalar = "-6/4".parse().unwrap();
        assert_eq!(q.to_string(), "-3/2");
        assert_eq!("7".parse::<Scalar>().unwrap().to_string(), "7/1");
        assert!("1/0".parse::<Scalar>().is_err());
        assert!("x".parse::<Scalar>().is_err());
    }

    #[test]
    fn arithmetic_is_exact() {
        let a = Scalar::new(1, 3);
        let b = Scalar::new(1, 6);
        assert_eq!(a + b, Scalar::new(1, 2));
        assert_eq!(a * b, Scalar::new(1, 18));
        assert_eq!(a / b, Scalar::int(2));
        assert_eq!(Scalar::factorial(4), Scalar::int(24));
    }
}
