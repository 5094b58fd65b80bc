//! Exact rational scalars, closed intervals, finite unions of disjoint closed
//! intervals and certified brackets.
//!
//! Nothing in this module rounds. Every quantity is a [`Scalar`], an
//! arbitrary-precision rational kept in lowest terms.

use std::cmp::Ordering;
use std::fmt;
use std::iter::Sum;
use std::ops::{Add, Div, Mul, Neg, Sub};
use std::str::FromStr;

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use serde::de::Error as _;
use serde::{Deserialize, Deserializer, Serialize, Serializer};
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ExactError {
    #[error("interval endpoints out of order: [{lo}, {hi}]")]
    Inverted { lo: Scalar, hi: Scalar },
    #[error("bracket endpoints out of order: [{lo}, {hi}]")]
    InvertedBracket { lo: Scalar, hi: Scalar },
    #[error("cannot remove a middle of length {len} from an interval of length {available}")]
    InfeasibleRemoval { len: Scalar, available: Scalar },
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("invalid rational literal {0:?}: expected an integer or \"p/q\"")]
pub struct ParseScalarError(pub String);

/// Exact rational number in lowest terms with a positive denominator.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Default)]
pub struct Scalar(BigRational);

impl Scalar {
    /// Panics if `den` is zero, like [`BigRational::new`].
    pub fn new(num: impl Into<BigInt>, den: impl Into<BigInt>) -> Self {
        Scalar(BigRational::new(num.into(), den.into()))
    }

    pub fn from_integer(n: impl Into<BigInt>) -> Self {
        Scalar(BigRational::from_integer(n.into()))
    }

    pub fn zero() -> Self {
        Scalar(BigRational::zero())
    }

    pub fn one() -> Self {
        Scalar(BigRational::one())
    }

    pub fn is_zero(&self) -> bool {
        self.0.is_zero()
    }

    pub fn is_positive(&self) -> bool {
        self.0.is_positive()
    }

    pub fn is_negative(&self) -> bool {
        self.0.is_negative()
    }

    pub fn is_integer(&self) -> bool {
        self.0.is_integer()
    }

    pub fn numer(&self) -> &BigInt {
        self.0.numer()
    }

    pub fn denom(&self) -> &BigInt {
        self.0.denom()
    }

    pub fn abs(&self) -> Self {
        Scalar(self.0.abs())
    }

    pub fn signum(&self) -> i32 {
        match self.0.cmp(&BigRational::zero()) {
            Ordering::Less => -1,
            Ordering::Equal => 0,
            Ordering::Greater => 1,
        }
    }

    /// Panics on zero.
    pub fn recip(&self) -> Self {
        Scalar(self.0.recip())
    }

    pub fn pow(&self, exp: i32) -> Self {
        Scalar(num_traits::Pow::pow(&self.0, exp))
    }

    /// `2^exp` for any integer exponent.
    pub fn pow2(exp: i64) -> Self {
        let mag = BigInt::one() << exp.unsigned_abs();
        if exp >= 0 {
            Scalar::from_integer(mag)
        } else {
            Scalar(BigRational::new(BigInt::one(), mag))
        }
    }

    pub fn half(&self) -> Self {
        Scalar(&self.0 / BigInt::from(2))
    }

    pub fn floor(&self) -> BigInt {
        self.0.floor().to_integer()
    }

    pub fn midpoint(&self, other: &Scalar) -> Self {
        (self + other).half()
    }

    pub fn to_f64(&self) -> f64 {
        self.0.to_f64().unwrap_or(f64::NAN)
    }

    pub fn as_ratio(&self) -> &BigRational {
        &self.0
    }
}

impl From<BigRational> for Scalar {
    fn from(r: BigRational) -> Self {
        Scalar(r)
    }
}

impl From<i64> for Scalar {
    fn from(n: i64) -> Self {
        Scalar::from_integer(n)
    }
}

impl From<i32> for Scalar {
    fn from(n: i32) -> Self {
        Scalar::from_integer(n)
    }
}

impl From<u64> for Scalar {
    fn from(n: u64) -> Self {
        Scalar::from_integer(n)
    }
}

impl From<usize> for Scalar {
    fn from(n: usize) -> Self {
        Scalar::from_integer(n)
    }
}

impl fmt::Display for Scalar {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.0.is_integer() {
            write!(f, "{}", self.0.numer())
        } else {
            write!(f, "{}/{}", self.0.numer(), self.0.denom())
        }
    }
}

impl fmt::Debug for Scalar {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(self, f)
    }
}

fn parse_integer(s: &str) -> Option<BigInt> {
    let digits = s.strip_prefix(['-', '+']).unwrap_or(s);
    if digits.is_empty() || !digits.bytes().all(|b| b.is_ascii_digit()) {
        return None;
    }
    BigInt::from_str(s.strip_prefix('+').unwrap_or(s)).ok()
}

/// Accepts `"p"` or `"p/q"`. Decimal and exponent notation are rejected so
/// that no value enters the system through a rounding step.
impl FromStr for Scalar {
    type Err = ParseScalarError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let err = || ParseScalarError(s.to_string());
        let s = s.trim();
        match s.split_once('/') {
            None => parse_integer(s).map(Scalar::from_integer).ok_or_else(err),
            Some((n, d)) => {
                let n = parse_integer(n.trim()).ok_or_else(err)?;
                let d = parse_integer(d.trim()).ok_or_else(err)?;
                if d.is_zero() {
                    return Err(err());
                }
                Ok(Scalar::new(n, d))
            }
        }
    }
}

macro_rules! forward_binop {
    ($trait:ident, $method:ident) => {
        impl $trait<Scalar> for Scalar {
            type Output = Scalar;
            fn $method(self, rhs: Scalar) -> Scalar {
                Scalar(self.0.$method(rhs.0))
            }
        }
        impl<'a> $trait<&'a Scalar> for Scalar {
            type Output = Scalar;
            fn $method(self, rhs: &'a Scalar) -> Scalar {
                Scalar(self.0.$method(&rhs.0))
            }
        }
        impl<'a> $trait<Scalar> for &'a Scalar {
            type Output = Scalar;
            fn $method(self, rhs: Scalar) -> Scalar {
                Scalar((&self.0).$method(rhs.0))
            }
        }
        impl<'a, 'b> $trait<&'b Scalar> for &'a Scalar {
            type Output = Scalar;
            fn $method(self, rhs: &'b Scalar) -> Scalar {
                Scalar((&self.0).$method(&rhs.0))
            }
        }
    };
}

forward_binop!(Add, add);
forward_binop!(Sub, sub);
forward_binop!(Mul, mul);
forward_binop!(Div, div);

impl Neg for Scalar {
    type Output = Scalar;
    fn neg(self) -> Scalar {
        Scalar(-self.0)
    }
}

impl Neg for &Scalar {
    type Output = Scalar;
    fn neg(self) -> Scalar {
        Scalar(-&self.0)
    }
}

impl Sum for Scalar {
    fn sum<I: Iterator<Item = Scalar>>(iter: I) -> Scalar {
        iter.fold(Scalar::zero(), |acc, x| acc + x)
    }
}

impl<'a> Sum<&'a Scalar> for Scalar {
    fn sum<I: Iterator<Item = &'a Scalar>>(iter: I) -> Scalar {
        iter.fold(Scalar::zero(), |acc, x| acc + x)
    }
}

fn json_integer(n: &BigInt) -> serde_json::Number {
    // arbitrary_precision keeps every digit
    serde_json::Number::from_str(&n.to_string()).expect("integer literal is valid JSON")
}

fn big_from_json<E: serde::de::Error>(n: &serde_json::Number) -> Result<BigInt, E> {
    parse_integer(&n.to_string()).ok_or_else(|| E::custom(format!("expected an integer, got {n}")))
}

/// Serialized as a JSON pair `[numerator, denominator]` of exact integers.
impl Serialize for Scalar {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        (json_integer(self.numer()), json_integer(self.denom())).serialize(serializer)
    }
}

impl<'de> Deserialize<'de> for Scalar {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let (n, d) = <(serde_json::Number, serde_json::Number)>::deserialize(deserializer)?;
        let n = big_from_json::<D::Error>(&n)?;
        let d = big_from_json::<D::Error>(&d)?;
        if !d.is_positive() {
            return Err(D::Error::custom("denominator must be positive"));
        }
        if !n.gcd(&d).is_one() {
            return Err(D::Error::custom("rational must be in lowest terms"));
        }
        Ok(Scalar::new(n, d))
    }
}

/// Closed interval `[lo, hi]`; point intervals are allowed.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "(Scalar, Scalar)", into = "(Scalar, Scalar)")]
pub struct Interval {
    lo: Scalar,
    hi: Scalar,
}

impl TryFrom<(Scalar, Scalar)> for Interval {
    type Error = ExactError;
    fn try_from((lo, hi): (Scalar, Scalar)) -> Result<Self, Self::Error> {
        Interval::new(lo, hi)
    }
}

impl From<Interval> for (Scalar, Scalar) {
    fn from(iv: Interval) -> Self {
        (iv.lo, iv.hi)
    }
}

impl Interval {
    pub fn new(lo: Scalar, hi: Scalar) -> Result<Self, ExactError> {
        if lo > hi {
            return Err(ExactError::Inverted { lo, hi });
        }
        Ok(Interval { lo, hi })
    }

    pub fn point(x: Scalar) -> Self {
        Interval { lo: x.clone(), hi: x }
    }

    pub fn unit() -> Self {
        Interval { lo: Scalar::zero(), hi: Scalar::one() }
    }

    pub fn lo(&self) -> &Scalar {
        &self.lo
    }

    pub fn hi(&self) -> &Scalar {
        &self.hi
    }

    pub fn length(&self) -> Scalar {
        &self.hi - &self.lo
    }

    pub fn midpoint(&self) -> Scalar {
        self.lo.midpoint(&self.hi)
    }

    pub fn contains(&self, t: &Scalar) -> bool {
        &self.lo <= t && t <= &self.hi
    }

    pub fn contains_interval(&self, other: &Interval) -> bool {
        self.lo <= other.lo && other.hi <= self.hi
    }

    pub fn intersect(&self, other: &Interval) -> Option<Interval> {
        let lo = (&self.lo).max(&other.lo).clone();
        let hi = (&self.hi).min(&other.hi).clone();
        (lo <= hi).then_some(Interval { lo, hi })
    }
}

impl fmt::Display for Interval {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[{}, {}]", self.lo, self.hi)
    }
}

/// Deletes the centered open interval of length `len` from `iv` and returns
/// the two closed remainders.
pub fn remove_open_middle(iv: &Interval, len: &Scalar) -> Result<(Interval, Interval), ExactError> {
    let available = iv.length();
    if !len.is_positive() || len >= &available {
        return Err(ExactError::InfeasibleRemoval { len: len.clone(), available });
    }
    let side = (&available - len).half();
    let left = Interval { lo: iv.lo.clone(), hi: &iv.lo + &side };
    let right = Interval { lo: &iv.hi - &side, hi: iv.hi.clone() };
    Ok((left, right))
}

/// Finite union of closed intervals, sorted, with strictly positive gaps
/// between consecutive components. The empty set has no components.
#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(from = "Vec<Interval>", into = "Vec<Interval>")]
pub struct DisjointIntervalSet {
    components: Vec<Interval>,
}

impl From<Vec<Interval>> for DisjointIntervalSet {
    fn from(v: Vec<Interval>) -> Self {
        DisjointIntervalSet::from_intervals(v)
    }
}

impl From<DisjointIntervalSet> for Vec<Interval> {
    fn from(s: DisjointIntervalSet) -> Self {
        s.components
    }
}

impl DisjointIntervalSet {
    pub fn empty() -> Self {
        DisjointIntervalSet::default()
    }

    /// Sorts and merges overlapping or touching intervals.
    pub fn from_intervals(intervals: impl IntoIterator<Item = Interval>) -> Self {
        let mut items: Vec<Interval> = intervals.into_iter().collect();
        items.sort_by(|a, b| a.lo.cmp(&b.lo).then_with(|| a.hi.cmp(&b.hi)));
        let mut components: Vec<Interval> = Vec::with_capacity(items.len());
        for iv in items {
            match components.last_mut() {
                Some(last) if iv.lo <= last.hi => {
                    if iv.hi > last.hi {
                        last.hi = iv.hi;
                    }
                }
                _ => components.push(iv),
            }
        }
        DisjointIntervalSet { components }
    }

    /// Trusts the caller that `components` already satisfy the invariants.
    pub(crate) fn from_sorted_unchecked(components: Vec<Interval>) -> Self {
        debug_assert!(components.windows(2).all(|w| w[0].hi < w[1].lo));
        DisjointIntervalSet { components }
    }

    pub fn components(&self) -> &[Interval] {
        &self.components
    }

    pub fn len(&self) -> usize {
        self.components.len()
    }

    pub fn is_empty(&self) -> bool {
        self.components.is_empty()
    }

    pub fn measure(&self) -> Scalar {
        self.components.iter().map(Interval::length).sum()
    }

    pub fn contains(&self, t: &Scalar) -> bool {
        let idx = self.components.partition_point(|c| &c.hi < t);
        self.components.get(idx).is_some_and(|c| c.contains(t))
    }

    pub fn hull(&self) -> Option<Interval> {
        let first = self.components.first()?;
        let last = self.components.last()?;
        Some(Interval { lo: first.lo.clone(), hi: last.hi.clone() })
    }

    pub fn intersect(&self, window: &Interval) -> DisjointIntervalSet {
        let start = self.components.partition_point(|c| c.hi < window.lo);
        let components = self.components[start..]
            .iter()
            .take_while(|c| c.lo <= window.hi)
            .filter_map(|c| c.intersect(window))
            .collect();
        DisjointIntervalSet::from_sorted_unchecked(components)
    }

    /// Closures of the gaps between consecutive components, i.e. the
    /// complement within the hull up to finitely many endpoints.
    pub fn gaps(&self) -> DisjointIntervalSet {
        let components =
            self.components.windows(2).map(|w| Interval { lo: w[0].hi.clone(), hi: w[1].lo.clone() }).collect();
        DisjointIntervalSet { components }
    }

    pub fn is_subset_of(&self, other: &DisjointIntervalSet) -> bool {
        self.components.iter().all(|c| {
            let idx = other.components.partition_point(|o| o.hi < c.lo);
            other.components.get(idx).is_some_and(|o| o.contains_interval(c))
        })
    }
}

impl fmt::Display for DisjointIntervalSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.components.is_empty() {
            return write!(f, "{{}}");
        }
        let parts: Vec<String> = self.components.iter().map(ToString::to_string).collect();
        write!(f, "{}", parts.join(" ∪ "))
    }
}

/// Certified enclosure `[lo, hi]` of a real quantity.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "(Scalar, Scalar)", into = "(Scalar, Scalar)")]
pub struct Bracket {
    lo: Scalar,
    hi: Scalar,
}

impl TryFrom<(Scalar, Scalar)> for Bracket {
    type Error = ExactError;
    fn try_from((lo, hi): (Scalar, Scalar)) -> Result<Self, Self::Error> {
        Bracket::new(lo, hi)
    }
}

impl From<Bracket> for (Scalar, Scalar) {
    fn from(b: Bracket) -> Self {
        (b.lo, b.hi)
    }
}

impl Bracket {
    pub fn new(lo: Scalar, hi: Scalar) -> Result<Self, ExactError> {
        if lo > hi {
            return Err(ExactError::InvertedBracket { lo, hi });
        }
        Ok(Bracket { lo, hi })
    }

    pub fn exact(x: Scalar) -> Self {
        Bracket { lo: x.clone(), hi: x }
    }

    pub fn lo(&self) -> &Scalar {
        &self.lo
    }

    pub fn hi(&self) -> &Scalar {
        &self.hi
    }

    pub fn into_bounds(self) -> (Scalar, Scalar) {
        (self.lo, self.hi)
    }

    pub fn width(&self) -> Scalar {
        &self.hi - &self.lo
    }

    pub fn is_exact(&self) -> bool {
        self.lo == self.hi
    }

    pub fn exact_value(&self) -> Option<&Scalar> {
        self.is_exact().then_some(&self.lo)
    }

    pub fn contains(&self, x: &Scalar) -> bool {
        &self.lo <= x && x <= &self.hi
    }

    pub fn is_within(&self, outer: &Bracket) -> bool {
        outer.lo <= self.lo && self.hi <= outer.hi
    }

    pub fn midpoint(&self) -> Scalar {
        self.lo.midpoint(&self.hi)
    }

    pub fn scale(&self, k: &Scalar) -> Bracket {
        let a = &self.lo * k;
        let b = &self.hi * k;
        if a <= b {
            Bracket { lo: a, hi: b }
        } else {
            Bracket { lo: b, hi: a }
        }
    }

    pub fn shift(&self, k: &Scalar) -> Bracket {
        Bracket { lo: &self.lo + k, hi: &self.hi + k }
    }

    pub fn abs(&self) -> Bracket {
        if !self.lo.is_negative() {
            self.clone()
        } else if !self.hi.is_positive() {
            Bracket { lo: self.hi.abs(), hi: self.lo.abs() }
        } else {
            Bracket { lo: Scalar::zero(), hi: self.lo.abs().max(self.hi.clone()) }
        }
    }

    /// Enclosure of `max(x, y)` for `x ∈ self`, `y ∈ other`.
    pub fn max(&self, other: &Bracket) -> Bracket {
        Bracket { lo: (&self.lo).max(&other.lo).clone(), hi: (&self.hi).max(&other.hi).clone() }
    }

    /// Raises `lo` to at least `floor` (when `hi` allows it).
    pub fn clamp_below(self, floor: &Scalar) -> Bracket {
        if &self.lo >= floor {
            self
        } else {
            let lo = floor.clone().min(self.hi.clone());
            Bracket { lo, hi: self.hi }
        }
    }
}

impl fmt::Display for Bracket {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_exact() {
            write!(f, "{}", self.lo)
        } else {
            write!(f, "[{}, {}]", self.lo, self.hi)
        }
    }
}

impl Add for &Bracket {
    type Output = Bracket;
    fn add(self, rhs: &Bracket) -> Bracket {
        Bracket { lo: &self.lo + &rhs.lo, hi: &self.hi + &rhs.hi }
    }
}

impl Add for Bracket {
    type Output = Bracket;
    fn add(self, rhs: Bracket) -> Bracket {
        &self + &rhs
    }
}

impl Sub for &Bracket {
    type Output = Bracket;
    fn sub(self, rhs: &Bracket) -> Bracket {
        Bracket { lo: &self.lo - &rhs.hi, hi: &self.hi - &rhs.lo }
    }
}

impl Sub for Bracket {
    type Output = Bracket;
    fn sub(self, rhs: Bracket) -> Bracket {
        &self - &rhs
    }
}

impl Neg for Bracket {
    type Output = Bracket;
    fn neg(self) -> Bracket {
        Bracket { lo: -self.hi, hi: -self.lo }
    }
}

impl Neg for &Bracket {
    type Output = Bracket;
    fn neg(self) -> Bracket {
        Bracket { lo: -&self.hi, hi: -&self.lo }
    }
}
