//! Exact rational loads and binomial coefficients.

use std::fmt;
use std::iter::Sum;
use std::ops::{Add, Mul, Sub};

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, ToPrimitive, Zero};
use serde::{Deserialize, Deserializer, Serialize, Serializer};

/// `C(n, k)`, zero when `k < 0` or `n < k`.
pub fn binomial(n: i64, k: i64) -> BigInt {
    if k < 0 || n < 0 || n < k {
        return BigInt::zero();
    }
    let k = k.min(n - k);
    let mut acc = BigInt::one();
    for i in 0..k {
        acc *= BigInt::from(n - i);
        acc /= BigInt::from(i + 1);
    }
    acc
}

/// Machine-size binomial for index arithmetic. Panics on overflow.
pub fn binomial_usize(n: usize, k: usize) -> usize {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    let mut acc: usize = 1;
    for i in 0..k {
        acc = acc
            .checked_mul(n - i)
            .expect("binomial overflow")
            / (i + 1);
    }
    acc
}

/// A normalized communication load in units of files.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct LoadValue(BigRational);

impl LoadValue {
    pub fn new(num: impl Into<BigInt>, den: impl Into<BigInt>) -> Self {
        LoadValue(BigRational::new(num.into(), den.into()))
    }

    pub fn zero() -> Self {
        LoadValue(BigRational::zero())
    }

    pub fn integer(v: i64) -> Self {
        LoadValue(BigRational::from_integer(BigInt::from(v)))
    }

    pub fn from_ratio(r: BigRational) -> Self {
        LoadValue(r)
    }

    pub fn as_ratio(&self) -> &BigRational {
        &self.0
    }

    pub fn numer(&self) -> &BigInt {
        self.0.numer()
    }

    pub fn denom(&self) -> &BigInt {
        self.0.denom()
    }

    pub fn to_f64(&self) -> f64 {
        self.0.to_f64().unwrap_or(f64::NAN)
    }

    pub fn is_zero(&self) -> bool {
        self.0.is_zero()
    }

    /// Parses `"a/b"` or `"a"`.
    pub fn parse(s: &str) -> Option<Self> {
        let s = s.trim();
        match s.split_once('/') {
            Some((a, b)) => {
                let a: BigInt = a.trim().parse().ok()?;
                let b: BigInt = b.trim().parse().ok()?;
                if b.is_zero() {
                    None
                } else {
                    Some(LoadValue::new(a, b))
                }
            }
            None => Some(LoadValue(BigRational::from_integer(s.parse().ok()?))),
        }
    }
}

impl fmt::Display for LoadValue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.0.denom().is_one() {
            write!(f, "{}", self.0.numer())
        } else {
            write!(f, "{}/{}", self.0.numer(), self.0.denom())
        }
    }
}

impl fmt::Debug for LoadValue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(self, f)
    }
}

impl Add for LoadValue {
    type Output = LoadValue;
    fn add(self, rhs: LoadValue) -> LoadValue {
        LoadValue(self.0 + rhs.0)
    }
}

impl<'a> Add<&'a LoadValue> for &'a LoadValue {
    type Output = LoadValue;
    fn add(self, rhs: &LoadValue) -> LoadValue {
        LoadValue(&self.0 + &rhs.0)
    }
}

impl Sub for LoadValue {
    type Output = LoadValue;
    fn sub(self, rhs: LoadValue) -> LoadValue {
        LoadValue(self.0 - rhs.0)
    }
}

impl<'a> Sub<&'a LoadValue> for &'a LoadValue {
    type Output = LoadValue;
    fn sub(self, rhs: &LoadValue) -> LoadValue {
        LoadValue(&self.0 - &rhs.0)
    }
}

impl Mul for LoadValue {
    type Output = LoadValue;
    fn mul(self, rhs: LoadValue) -> LoadValue {
        LoadValue(self.0 * rhs.0)
    }
}

impl Sum for LoadValue {
    fn sum<I: Iterator<Item = LoadValue>>(iter: I) -> LoadValue {
        iter.fold(LoadValue::zero(), |a, b| a + b)
    }
}

impl Serialize for LoadValue {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&self.to_string())
    }
}

impl<'de> Deserialize<'de> for LoadValue {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        LoadValue::parse(&s).ok_or_else(|| serde::de::Error::custom(format!("bad load value {s:?}")))
    }
}
