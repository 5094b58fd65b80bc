//! Concrete Lipschitz functions with certified evaluation, and the
//! difference-quotient machinery behind strong norm attainment and maximal
//! derivative attainment.
//!
//! Three representations are supported:
//!
//! * [`PLFunction`]: piecewise-linear interpolation of exact breakpoints.
//! * [`CantorIntegralFunction`]: `f(t) = t - λ(C ∩ [0, t])` on `[0, 1]` for a
//!   fat Cantor set `C`. It is 1-Lipschitz, non-decreasing, and has slope 1 on
//!   every removed middle.
//! * [`TentSequenceFunction`]: the `c₀`-valued map whose first coordinate is
//!   `t ↦ max{min{t, 1}, 0}` and whose `n`-th coordinate is a row of
//!   `2^(n-2)` tents of height `2^(1-n)` over `[0, 1]`, truncated to `N`
//!   coordinates. The norm on the codomain is the sup norm.
//!
//! All quotients are returned as per-coordinate [`Bracket`]s. For the
//! piecewise-linear and tent functions the brackets are degenerate (exact).

use std::cmp::Ordering;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::cantor::FatCantorSet;
use crate::exactnum::{Bracket, Interval, Scalar};

/// Default number of coordinates kept for the tent sequence.
pub const DEFAULT_TENT_COORDS: usize = 12;

/// Number of dyadic scales tried by [`oscillation_witness`].
pub const DEFAULT_WITNESS_BUDGET: u32 = 48;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum LipError {
    #[error("{t} lies outside the domain {domain}")]
    Domain { t: Scalar, domain: Interval },
    #[error("difference quotient needs two distinct points, got {0} twice")]
    EqualPoints(Scalar),
    #[error("a piecewise-linear function needs at least two breakpoints")]
    TooFewBreakpoints,
    #[error("breakpoints must be strictly increasing (violated at index {0})")]
    UnsortedBreakpoints(usize),
    #[error("{breakpoints} breakpoints but {values} values")]
    LengthMismatch { breakpoints: usize, values: usize },
    #[error("the tent sequence needs at least one coordinate")]
    NoCoordinates,
    #[error("operation needs a real-valued function")]
    VectorCodomain,
    #[error("window {0} must have positive length")]
    DegenerateWindow(Interval),
    #[error("probe step {0} is zero or has the wrong sign")]
    BadStep(Scalar),
}

/// Piecewise-linear function through `(breakpoints[i], values[i])`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "PLDocument", into = "PLDocument")]
pub struct PLFunction {
    breakpoints: Vec<Scalar>,
    values: Vec<Scalar>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct PLDocument {
    breakpoints: Vec<Scalar>,
    values: Vec<Scalar>,
}

impl TryFrom<PLDocument> for PLFunction {
    type Error = LipError;
    fn try_from(doc: PLDocument) -> Result<Self, LipError> {
        PLFunction::new(doc.breakpoints, doc.values)
    }
}

impl From<PLFunction> for PLDocument {
    fn from(f: PLFunction) -> Self {
        PLDocument { breakpoints: f.breakpoints, values: f.values }
    }
}

impl PLFunction {
    pub fn new(breakpoints: Vec<Scalar>, values: Vec<Scalar>) -> Result<Self, LipError> {
        if breakpoints.len() != values.len() {
            return Err(LipError::LengthMismatch { breakpoints: breakpoints.len(), values: values.len() });
        }
        if breakpoints.len() < 2 {
            return Err(LipError::TooFewBreakpoints);
        }
        if let Some(i) = breakpoints.windows(2).position(|w| w[0] >= w[1]) {
            return Err(LipError::UnsortedBreakpoints(i + 1));
        }
        Ok(PLFunction { breakpoints, values })
    }

    /// `t ↦ t` on `[lo, hi]`.
    pub fn identity(domain: &Interval) -> Result<Self, LipError> {
        let ends = vec![domain.lo().clone(), domain.hi().clone()];
        PLFunction::new(ends.clone(), ends)
    }

    pub fn breakpoints(&self) -> &[Scalar] {
        &self.breakpoints
    }

    pub fn values(&self) -> &[Scalar] {
        &self.values
    }

    pub fn domain(&self) -> Interval {
        let lo = self.breakpoints[0].clone();
        let hi = self.breakpoints[self.breakpoints.len() - 1].clone();
        Interval::new(lo, hi).expect("breakpoints increase")
    }

    pub fn segment_count(&self) -> usize {
        self.breakpoints.len() - 1
    }

    pub fn slope(&self, segment: usize) -> Scalar {
        let (x0, x1) = (&self.breakpoints[segment], &self.breakpoints[segment + 1]);
        let (y0, y1) = (&self.values[segment], &self.values[segment + 1]);
        (y1 - y0) / (x1 - x0)
    }

    pub fn segment(&self, segment: usize) -> Interval {
        Interval::new(self.breakpoints[segment].clone(), self.breakpoints[segment + 1].clone())
            .expect("breakpoints increase")
    }

    pub fn slopes(&self) -> impl Iterator<Item = Scalar> + '_ {
        (0..self.segment_count()).map(|i| self.slope(i))
    }

    /// `max |slope|` over all segments.
    pub fn lip(&self) -> Scalar {
        self.slopes().map(|s| s.abs()).max().expect("at least one segment")
    }

    fn check_domain(&self, t: &Scalar) -> Result<(), LipError> {
        let domain = self.domain();
        if domain.contains(t) {
            Ok(())
        } else {
            Err(LipError::Domain { t: t.clone(), domain })
        }
    }

    /// Segment whose half-open span `[x_i, x_{i+1})` holds `t`; the last
    /// segment also owns the right endpoint.
    fn segment_of(&self, t: &Scalar) -> usize {
        let idx = self.breakpoints.partition_point(|x| x <= t);
        idx.saturating_sub(1).min(self.segment_count() - 1)
    }

    pub fn eval(&self, t: &Scalar) -> Result<Scalar, LipError> {
        self.check_domain(t)?;
        let i = self.segment_of(t);
        Ok(&self.values[i] + self.slope(i) * (t - &self.breakpoints[i]))
    }

    /// Evaluation with the function extended constantly beyond its domain.
    pub fn eval_extended(&self, t: &Scalar) -> Scalar {
        let domain = self.domain();
        if t < domain.lo() {
            self.values[0].clone()
        } else if t > domain.hi() {
            self.values[self.values.len() - 1].clone()
        } else {
            self.eval(t).expect("inside domain")
        }
    }

    /// Right derivative on `[first, last)`, left derivative at `last`.
    pub fn derivative(&self, t: &Scalar) -> Result<Scalar, LipError> {
        self.check_domain(t)?;
        Ok(self.slope(self.segment_of(t)))
    }

    /// The restriction to `window`, which must lie in the domain and have
    /// positive length.
    pub fn restrict(&self, window: &Interval) -> Result<PLFunction, LipError> {
        if !window.length().is_positive() {
            return Err(LipError::DegenerateWindow(window.clone()));
        }
        self.check_domain(window.lo())?;
        self.check_domain(window.hi())?;
        let mut xs = vec![window.lo().clone()];
        xs.extend(self.breakpoints.iter().filter(|x| window.lo() < *x && *x < window.hi()).cloned());
        xs.push(window.hi().clone());
        let ys = xs.iter().map(|x| self.eval(x)).collect::<Result<Vec<_>, _>>()?;
        PLFunction::new(xs, ys)
    }

    /// `Lip(f|_window)`.
    pub fn lip_on(&self, window: &Interval) -> Result<Scalar, LipError> {
        Ok(self.restrict(window)?.lip())
    }
}

/// `f(t) = t - λ(C ∩ [0, t])` on `[0, 1]`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct CantorIntegralFunction {
    cantor: FatCantorSet,
}

impl CantorIntegralFunction {
    pub fn new(cantor: FatCantorSet) -> Self {
        CantorIntegralFunction { cantor }
    }

    pub fn cantor(&self) -> &FatCantorSet {
        &self.cantor
    }

    pub fn domain(&self) -> Interval {
        Interval::unit()
    }

    pub fn eval(&self, t: &Scalar) -> Result<Bracket, LipError> {
        let domain = self.domain();
        if !domain.contains(t) {
            return Err(LipError::Domain { t: t.clone(), domain });
        }
        Ok(-self.cantor.limit_measure_below(t).shift(&-t))
    }

    /// `f(b) - f(a) = (b - a) - λ(C ∩ [a, b])` for `a <= b`.
    pub fn increment(&self, a: &Scalar, b: &Scalar) -> Result<Bracket, LipError> {
        let domain = self.domain();
        for t in [a, b] {
            if !domain.contains(t) {
                return Err(LipError::Domain { t: t.clone(), domain });
            }
        }
        let window = Interval::new(a.clone(), b.clone()).map_err(|_| LipError::EqualPoints(a.clone()))?;
        Ok((-self.cantor.limit_measure_in(&window)).shift(&window.length()))
    }

    /// An open interval of `[0, 1] \ C` on which `f` has slope exactly 1:
    /// the middle removed in the first step.
    pub fn slope_one_witness(&self) -> Interval {
        let half_gap = self.cantor.removed_length(1).expect("depth >= 1").half();
        let mid = Scalar::new(1, 2);
        Interval::new(&mid - &half_gap, &mid + &half_gap).expect("positive gap")
    }
}

/// The tent-sequence map truncated to `N` coordinates.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "TentDocument", into = "TentDocument")]
pub struct TentSequenceFunction {
    coords: usize,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct TentDocument {
    n: usize,
}

impl TryFrom<TentDocument> for TentSequenceFunction {
    type Error = LipError;
    fn try_from(doc: TentDocument) -> Result<Self, LipError> {
        TentSequenceFunction::new(doc.n)
    }
}

impl From<TentSequenceFunction> for TentDocument {
    fn from(f: TentSequenceFunction) -> Self {
        TentDocument { n: f.coords }
    }
}

impl Default for TentSequenceFunction {
    fn default() -> Self {
        TentSequenceFunction { coords: DEFAULT_TENT_COORDS }
    }
}

impl TentSequenceFunction {
    pub fn new(coords: usize) -> Result<Self, LipError> {
        if coords == 0 {
            return Err(LipError::NoCoordinates);
        }
        Ok(TentSequenceFunction { coords })
    }

    pub fn coords(&self) -> usize {
        self.coords
    }

    /// Coordinate `n` (1-based) at `t`.
    pub fn coordinate(&self, n: usize, t: &Scalar) -> Scalar {
        assert!((1..=self.coords).contains(&n), "coordinate {n} out of range");
        tent_coordinate(n, t)
    }

    pub fn eval(&self, t: &Scalar) -> Vec<Scalar> {
        (1..=self.coords).map(|n| tent_coordinate(n, t)).collect()
    }

    /// The pair `(1/2 + 2^-n, 1/2 - 2^-n)`.
    pub fn symmetric_pair(n: u32) -> (Scalar, Scalar) {
        let half = Scalar::new(1, 2);
        let off = Scalar::pow2(-(n as i64));
        (&half + &off, half - off)
    }
}

pub(crate) fn tent_coordinate(n: usize, t: &Scalar) -> Scalar {
    let zero = Scalar::zero();
    let one = Scalar::one();
    if n == 1 {
        return t.clone().max(zero).min(one);
    }
    if t <= &zero || t >= &one {
        return zero;
    }
    // tents of half-width 1/s centred at odd multiples of 1/s, s = 2^(n-1)
    let s = Scalar::pow2(n as i64 - 1);
    let u = t * &s;
    let m = u.floor();
    let centre = if m.bit(0) { Scalar::from_integer(m) } else { Scalar::from_integer(m + 1) };
    let height = s.recip();
    (height - (t - centre / &s).abs()).max(zero)
}

/// A Lipschitz function in one of the supported representations.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "data", rename_all = "snake_case")]
#[allow(clippy::large_enum_variant)]
pub enum LipFunction {
    PiecewiseLinear(PLFunction),
    CantorIntegral(CantorIntegralFunction),
    TentSequence(TentSequenceFunction),
}

impl From<PLFunction> for LipFunction {
    fn from(f: PLFunction) -> Self {
        LipFunction::PiecewiseLinear(f)
    }
}

impl From<CantorIntegralFunction> for LipFunction {
    fn from(f: CantorIntegralFunction) -> Self {
        LipFunction::CantorIntegral(f)
    }
}

impl From<TentSequenceFunction> for LipFunction {
    fn from(f: TentSequenceFunction) -> Self {
        LipFunction::TentSequence(f)
    }
}

/// Per-coordinate enclosure of a difference quotient.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Quotient {
    coords: Vec<Bracket>,
}

impl Quotient {
    pub fn coords(&self) -> &[Bracket] {
        &self.coords
    }

    pub fn coordinate(&self, n: usize) -> &Bracket {
        &self.coords[n - 1]
    }

    pub fn exact(&self) -> Option<Vec<Scalar>> {
        self.coords.iter().map(|b| b.exact_value().cloned()).collect()
    }

    /// Enclosure of the sup norm of the quotient vector.
    pub fn norm(&self) -> Bracket {
        self.coords.iter().map(Bracket::abs).reduce(|a, b| a.max(&b)).expect("at least one coordinate")
    }

    /// Certified lower bound on `‖self - other‖∞`.
    pub fn separation_lower_bound(&self, other: &Quotient) -> Scalar {
        self.coords.iter().zip(&other.coords).map(|(a, b)| (a - b).abs().lo().clone()).max().unwrap_or_default()
    }
}

/// Outcome of a strong norm attainment check.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Attainment {
    Attains,
    Fails,
    Inconclusive,
}

impl LipFunction {
    /// `None` means the whole real line.
    pub fn domain(&self) -> Option<Interval> {
        match self {
            LipFunction::PiecewiseLinear(f) => Some(f.domain()),
            LipFunction::CantorIntegral(f) => Some(f.domain()),
            LipFunction::TentSequence(_) => None,
        }
    }

    pub fn codomain_dim(&self) -> usize {
        match self {
            LipFunction::TentSequence(f) => f.coords,
            _ => 1,
        }
    }

    fn check_domain(&self, t: &Scalar) -> Result<(), LipError> {
        match self.domain() {
            Some(domain) if !domain.contains(t) => Err(LipError::Domain { t: t.clone(), domain }),
            _ => Ok(()),
        }
    }

    /// Certified value, one bracket per coordinate.
    pub fn eval(&self, t: &Scalar) -> Result<Vec<Bracket>, LipError> {
        match self {
            LipFunction::PiecewiseLinear(f) => Ok(vec![Bracket::exact(f.eval(t)?)]),
            LipFunction::CantorIntegral(f) => Ok(vec![f.eval(t)?]),
            LipFunction::TentSequence(f) => Ok(f.eval(t).into_iter().map(Bracket::exact).collect()),
        }
    }

    pub fn eval_scalar(&self, t: &Scalar) -> Result<Bracket, LipError> {
        if self.codomain_dim() != 1 {
            return Err(LipError::VectorCodomain);
        }
        Ok(self.eval(t)?.remove(0))
    }

    /// `Lip(f)` over the whole domain.
    pub fn lip_number(&self) -> Bracket {
        match self {
            LipFunction::PiecewiseLinear(f) => Bracket::exact(f.lip()),
            // slope 1 on every removed middle, slope in [0, 1] everywhere
            LipFunction::CantorIntegral(_) => Bracket::exact(Scalar::one()),
            // every coordinate has slopes in {-1, 0, 1} and the first has slope 1 on (0, 1)
            LipFunction::TentSequence(_) => Bracket::exact(Scalar::one()),
        }
    }

    /// `f(hi) - f(lo)` per coordinate, for `lo < hi`.
    fn increment(&self, lo: &Scalar, hi: &Scalar) -> Result<Vec<Bracket>, LipError> {
        match self {
            LipFunction::CantorIntegral(f) => Ok(vec![f.increment(lo, hi)?]),
            _ => {
                let a = self.eval(lo)?;
                let b = self.eval(hi)?;
                Ok(b.iter().zip(&a).map(|(b, a)| b - a).collect())
            }
        }
    }

    /// Encloses `(f(p) - f(q)) / (p - q)` per coordinate.
    pub fn difference_quotient(&self, p: &Scalar, q: &Scalar) -> Result<Quotient, LipError> {
        let (lo, hi) = match p.cmp(q) {
            Ordering::Equal => return Err(LipError::EqualPoints(p.clone())),
            Ordering::Less => (p, q),
            Ordering::Greater => (q, p),
        };
        let inv = (hi - lo).recip();
        let coords = self.increment(lo, hi)?.iter().map(|d| d.scale(&inv)).collect();
        Ok(Quotient { coords })
    }

    /// Decides whether `‖f(p) - f(q)‖ / |p - q|` reaches `Lip(f)` within `tol`.
    pub fn strong_attainment_check(&self, p: &Scalar, q: &Scalar, tol: &Scalar) -> Result<Attainment, LipError> {
        let norm = self.difference_quotient(p, q)?.norm();
        let lip = self.lip_number();
        Ok(if norm.lo() >= &(lip.hi() - tol) {
            Attainment::Attains
        } else if norm.hi() < &(lip.lo() - tol) {
            Attainment::Fails
        } else {
            Attainment::Inconclusive
        })
    }

    /// Quotients `(f(x + h) - f(x)) / (h e)` for each step `h` of the probe.
    pub fn derivative_probe(&self, probe: &QuotientProbe) -> Result<Vec<Quotient>, LipError> {
        self.check_domain(&probe.base)?;
        probe
            .steps
            .iter()
            .map(|h| {
                // (f(x+h) - f(x))/h times h/t = e
                let q = self.difference_quotient(&(&probe.base + h), &probe.base)?;
                Ok(match probe.direction {
                    Direction::Forward => q,
                    Direction::Backward => negate(q),
                })
            })
            .collect()
    }
}

fn negate(q: Quotient) -> Quotient {
    Quotient { coords: q.coords.into_iter().map(|b| -b).collect() }
}

/// Unit direction on the real line.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Direction {
    Forward,
    Backward,
}

impl Direction {
    pub fn sign(self) -> Scalar {
        match self {
            Direction::Forward => Scalar::one(),
            Direction::Backward => -Scalar::one(),
        }
    }
}

/// Difference-quotient probe at `base` along `direction`. Each step `h` is a
/// displacement: the probe point is `base + h` and the quotient approximates
/// `f'(base, direction)` with parameter `t = h · e`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct QuotientProbe {
    base: Scalar,
    direction: Direction,
    steps: Vec<Scalar>,
    one_sided: bool,
}

impl QuotientProbe {
    pub fn two_sided(base: Scalar, direction: Direction, steps: Vec<Scalar>) -> Result<Self, LipError> {
        if let Some(h) = steps.iter().find(|h| h.is_zero()) {
            return Err(LipError::BadStep(h.clone()));
        }
        Ok(QuotientProbe { base, direction, steps, one_sided: false })
    }

    /// Every step must point along `direction`.
    pub fn one_sided(base: Scalar, direction: Direction, steps: Vec<Scalar>) -> Result<Self, LipError> {
        let sign = direction.sign();
        if let Some(h) = steps.iter().find(|h| (*h * &sign).signum() <= 0) {
            return Err(LipError::BadStep(h.clone()));
        }
        Ok(QuotientProbe { base, direction, steps, one_sided: true })
    }

    /// Steps `±2^-m` along `direction` for `m` in `scales`.
    pub fn dyadic(base: Scalar, direction: Direction, scales: impl IntoIterator<Item = u32>) -> Self {
        let sign = direction.sign();
        let steps = scales.into_iter().map(|m| Scalar::pow2(-(m as i64)) * &sign).collect();
        QuotientProbe { base, direction, steps, one_sided: true }
    }

    pub fn base(&self) -> &Scalar {
        &self.base
    }

    pub fn direction(&self) -> Direction {
        self.direction
    }

    pub fn steps(&self) -> &[Scalar] {
        &self.steps
    }

    pub fn is_one_sided(&self) -> bool {
        self.one_sided
    }
}

/// The deterministic step grid `{±2^-m : first <= m < first + budget}` where
/// `2^-first` is the largest power of two strictly below `delta`.
pub fn dyadic_steps(delta: &Scalar, budget: u32) -> Vec<Scalar> {
    let mut first: i64 = 0;
    while Scalar::pow2(-first) >= *delta {
        first += 1;
    }
    while first > 0 && Scalar::pow2(-(first - 1)) < *delta {
        first -= 1;
    }
    (first..first + budget as i64)
        .flat_map(|m| {
            let h = Scalar::pow2(-m);
            [h.clone(), -h]
        })
        .collect()
}

/// Searches the dyadic step grid below `delta` for two steps whose quotient
/// vectors at `x` are certified to differ by at least `lower` in sup norm.
pub fn oscillation_witness(f: &LipFunction, x: &Scalar, delta: &Scalar, lower: &Scalar) -> Option<(Scalar, Scalar)> {
    oscillation_witness_with_budget(f, x, delta, lower, DEFAULT_WITNESS_BUDGET)
}

pub fn oscillation_witness_with_budget(
    f: &LipFunction,
    x: &Scalar,
    delta: &Scalar,
    lower: &Scalar,
    budget: u32,
) -> Option<(Scalar, Scalar)> {
    if !delta.is_positive() || f.check_domain(x).is_err() {
        return None;
    }
    let probed: Vec<(Scalar, Quotient)> = dyadic_steps(delta, budget)
        .into_iter()
        .filter_map(|h| {
            let q = f.difference_quotient(&(x + &h), x).ok()?;
            Some((h, q))
        })
        .collect();
    for (i, (h1, q1)) in probed.iter().enumerate() {
        for (h2, q2) in &probed[i + 1..] {
            if &q1.separation_lower_bound(q2) >= lower {
                return Some((h1.clone(), h2.clone()));
            }
        }
    }
    None
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cantor::{build, FatCantorParams};
    use proptest::prelude::*;

    fn q(s: &str) -> Scalar {
        s.parse().unwrap()
    }

    fn pl(points: &[(&str, &str)]) -> PLFunction {
        let (xs, ys) = points.iter().map(|(x, y)| (q(x), q(y))).unzip();
        PLFunction::new(xs, ys).unwrap()
    }

    fn abs_half() -> LipFunction {
        pl(&[("0", "1/2"), ("1/2", "0"), ("1", "1/2")]).into()
    }

    fn identity() -> LipFunction {
        PLFunction::identity(&Interval::unit()).unwrap().into()
    }

    fn tent(n: usize) -> LipFunction {
        TentSequenceFunction::new(n).unwrap().into()
    }

    fn cantor_fn(params: FatCantorParams, depth: u32) -> LipFunction {
        CantorIntegralFunction::new(build(params, depth).unwrap()).into()
    }

    /// Direct sum over every tent, as written in the definition.
    fn tent_by_definition(n: usize, t: &Scalar) -> Scalar {
        if n == 1 {
            return t.clone().max(Scalar::zero()).min(Scalar::one());
        }
        let s = Scalar::pow2(n as i64 - 1);
        (1..=1usize << (n - 2))
            .map(|j| {
                let centre = Scalar::from(2 * j - 1) / &s;
                (s.recip() - (t - centre).abs()).max(Scalar::zero())
            })
            .sum()
    }

    #[test]
    fn pl_construction_errors() {
        assert_eq!(PLFunction::new(vec![q("0")], vec![q("0")]), Err(LipError::TooFewBreakpoints));
        assert!(matches!(
            PLFunction::new(vec![q("0"), q("0")], vec![q("0"), q("1")]),
            Err(LipError::UnsortedBreakpoints(1))
        ));
        assert!(matches!(PLFunction::new(vec![q("0"), q("1")], vec![q("0")]), Err(LipError::LengthMismatch { .. })));
    }

    #[test]
    fn eval_examples() {
        assert_eq!(identity().eval_scalar(&q("1/3")).unwrap(), Bracket::exact(q("1/3")));
        assert_eq!(tent(4).eval(&q("1/2")).unwrap()[1], Bracket::exact(q("1/2")));
        let f = cantor_fn(FatCantorParams::Ternary, 10);
        assert!(f.eval_scalar(&q("1")).unwrap().contains(&q("1")));
        assert!(matches!(identity().eval(&q("2")), Err(LipError::Domain { .. })));
        assert!(tent(3).eval(&q("-5")).is_ok());
        assert_eq!(tent(3).eval_scalar(&q("0")), Err(LipError::VectorCodomain));
    }

    #[test]
    fn pl_constant_extension_and_derivative_convention() {
        let LipFunction::PiecewiseLinear(f) = abs_half() else { unreachable!() };
        assert_eq!(f.eval_extended(&q("-3")), q("1/2"));
        assert_eq!(f.eval_extended(&q("7")), q("1/2"));
        assert_eq!(f.derivative(&q("1/2")).unwrap(), q("1"));
        assert_eq!(f.derivative(&q("0")).unwrap(), q("-1"));
        assert_eq!(f.derivative(&q("1")).unwrap(), q("1"));
        assert_eq!(f.lip_on(&Interval::new(q("0"), q("1/4")).unwrap()).unwrap(), q("1"));
    }

    #[test]
    fn tent_matches_definition() {
        for n in 1..=7 {
            for i in -4..=132 {
                let t = Scalar::new(i, 128);
                assert_eq!(tent_coordinate(n, &t), tent_by_definition(n, &t), "n={n} t={t}");
            }
            let t = q("1/3");
            assert_eq!(tent_coordinate(n, &t), tent_by_definition(n, &t));
        }
    }

    #[test]
    fn lip_number_examples() {
        for n in [1, 2, 12, 24] {
            assert_eq!(tent(n).lip_number(), Bracket::exact(Scalar::one()));
        }
        assert_eq!(abs_half().lip_number(), Bracket::exact(Scalar::one()));
        let f = CantorIntegralFunction::new(build(FatCantorParams::quarter_power(q("1/2")).unwrap(), 5).unwrap());
        let gap = f.slope_one_witness();
        let g: LipFunction = f.into();
        let quotient = g.difference_quotient(gap.lo(), gap.hi()).unwrap();
        assert_eq!(quotient.coords()[0], Bracket::exact(Scalar::one()));
        assert_eq!(g.lip_number(), Bracket::exact(Scalar::one()));
    }

    #[test]
    fn tent_lip_by_exhaustive_slopes() {
        // every coordinate is piecewise linear on the 2^(n-1) grid
        for n in 1..=8 {
            let s = 1i64 << (n - 1);
            let max_slope = (-1..=s + 1)
                .map(|i| {
                    let (a, b) = (Scalar::new(i, s), Scalar::new(i + 1, s));
                    ((tent_coordinate(n, &b) - tent_coordinate(n, &a)) * Scalar::from(s)).abs()
                })
                .max()
                .unwrap();
            assert_eq!(max_slope, Scalar::one());
        }
    }

    #[test]
    fn quotient_examples() {
        let f = tent(12);
        let (p, qq) = TentSequenceFunction::symmetric_pair(2);
        let quot = f.difference_quotient(&p, &qq).unwrap().exact().unwrap();
        assert_eq!(quot[0], Scalar::one());
        assert!(quot[1..].iter().all(Scalar::is_zero));
        let quot = identity().difference_quotient(&q("1/7"), &q("5/6")).unwrap();
        assert_eq!(quot.norm(), Bracket::exact(Scalar::one()));
        assert_eq!(identity().difference_quotient(&q("1/7"), &q("1/7")), Err(LipError::EqualPoints(q("1/7"))));

        let g = cantor_fn(FatCantorParams::quarter_power(q("1/2")).unwrap(), 8);
        let quot = g.difference_quotient(&q("0"), &q("1")).unwrap();
        assert_eq!(quot.coords()[0], Bracket::exact(q("1/6")));
    }

    #[test]
    fn attainment_examples() {
        let zero = Scalar::zero();
        assert_eq!(tent(12).strong_attainment_check(&q("0"), &q("1"), &zero).unwrap(), Attainment::Attains);
        assert_eq!(abs_half().strong_attainment_check(&q("0"), &q("1"), &zero).unwrap(), Attainment::Fails);
        assert_eq!(abs_half().strong_attainment_check(&q("0"), &q("1"), &q("1")).unwrap(), Attainment::Attains);
        // a Cantor quotient straddling C is not exact at small depth
        let g = cantor_fn(FatCantorParams::quarter_power(q("1/2")).unwrap(), 1);
        let check = g.strong_attainment_check(&q("1/100"), &q("2/100"), &zero).unwrap();
        assert_eq!(check, Attainment::Inconclusive);
    }

    #[test]
    fn midpoint_keeps_attainment() {
        let f = tent(10);
        let zero = Scalar::zero();
        let (mut p, mut r) = (q("0"), q("1"));
        for _ in 0..12 {
            assert_eq!(f.strong_attainment_check(&p, &r, &zero).unwrap(), Attainment::Attains);
            let mid = p.midpoint(&r);
            assert_eq!(f.strong_attainment_check(&mid, &r, &zero).unwrap(), Attainment::Attains);
            r = mid;
            std::mem::swap(&mut p, &mut r);
        }
    }

    #[test]
    fn probe_examples() {
        let probe = QuotientProbe::two_sided(q("1/3"), Direction::Backward, vec![q("1/8"), q("-1/16")]).unwrap();
        let quots = identity().derivative_probe(&probe).unwrap();
        // direction -1: quotient approximates f'(x, -1) = -1
        assert!(quots.iter().all(|qq| qq.coords()[0] == Bracket::exact(-Scalar::one())));
        let probe = QuotientProbe::dyadic(q("1/3"), Direction::Forward, 2..6);
        let quots = identity().derivative_probe(&probe).unwrap();
        assert!(quots.iter().all(|qq| qq.coords()[0] == Bracket::exact(Scalar::one())));

        assert!(QuotientProbe::two_sided(q("0"), Direction::Forward, vec![q("0")]).is_err());
        assert!(QuotientProbe::one_sided(q("0"), Direction::Forward, vec![q("-1/2")]).is_err());
        let outside = QuotientProbe::two_sided(q("0"), Direction::Forward, vec![q("-1/2")]).unwrap();
        assert!(matches!(identity().derivative_probe(&outside), Err(LipError::Domain { .. })));
    }

    #[test]
    fn tent_probe_hits_unit_slope_at_dyadic_point() {
        // t0 = 3/8 is dyadic of order 3; coordinate n has slope ±1 beside it
        let f = tent(10);
        let probe = QuotientProbe::dyadic(q("3/8"), Direction::Forward, 4..20);
        let quots = f.derivative_probe(&probe).unwrap();
        for n in 4..=10 {
            let hit = quots.iter().any(|qq| qq.coordinate(n).exact_value().unwrap().abs() == Scalar::one());
            assert!(hit, "coordinate {n}");
        }
    }

    #[test]
    fn cantor_probe_inside_removed_middle() {
        let g = CantorIntegralFunction::new(build(FatCantorParams::quarter_power(q("1/2")).unwrap(), 6).unwrap());
        let x = g.slope_one_witness().midpoint();
        let f: LipFunction = g.into();
        let probe = QuotientProbe::dyadic(x, Direction::Forward, 6..12);
        for quot in f.derivative_probe(&probe).unwrap() {
            assert_eq!(quot.coords()[0], Bracket::exact(Scalar::one()));
        }
    }

    #[test]
    fn witness_examples() {
        let half = q("1/2");
        assert!(oscillation_witness(&tent(6), &q("1/3"), &q("1/16"), &half).is_some());
        assert!(oscillation_witness(&identity(), &q("1/3"), &q("1/16"), &q("1/1000000")).is_none());
        for n in [4usize, 8, 12] {
            for m in 0..=(n as i64 - 2) {
                let delta = Scalar::pow2(-m);
                let (h1, h2) = oscillation_witness(&tent(n), &half, &delta, &half).expect("witness");
                assert!(h1.abs() < delta && h2.abs() < delta);
            }
        }
    }

    #[test]
    fn dyadic_grid_starts_below_delta() {
        let steps = dyadic_steps(&q("1/16"), 3);
        assert_eq!(steps, vec![q("1/32"), q("-1/32"), q("1/64"), q("-1/64"), q("1/128"), q("-1/128")]);
        assert_eq!(dyadic_steps(&q("3/4"), 1), vec![q("1/2"), q("-1/2")]);
        assert_eq!(dyadic_steps(&q("3"), 1), vec![q("1"), q("-1")]);
    }

    #[test]
    fn json_documents() {
        let f = abs_half();
        let LipFunction::PiecewiseLinear(inner) = &f else { unreachable!() };
        assert_eq!(
            serde_json::to_string(inner).unwrap(),
            r#"{"breakpoints":[[0,1],[1,2],[1,1]],"values":[[1,2],[0,1],[1,2]]}"#
        );
        let back: LipFunction = serde_json::from_str(&serde_json::to_string(&f).unwrap()).unwrap();
        assert_eq!(back, f);
        assert_eq!(serde_json::to_string(&TentSequenceFunction::new(12).unwrap()).unwrap(), r#"{"n":12}"#);
        assert!(serde_json::from_str::<PLFunction>(r#"{"breakpoints":[[1,1],[0,1]],"values":[[0,1],[0,1]]}"#).is_err());
        let g = cantor_fn(FatCantorParams::Ternary, 2);
        let back: LipFunction = serde_json::from_str(&serde_json::to_string(&g).unwrap()).unwrap();
        assert_eq!(back, g);
    }

    fn grid_point() -> impl Strategy<Value = Scalar> {
        (0i64..=240).prop_map(|n| Scalar::new(n, 240))
    }

    fn pl_strategy() -> impl Strategy<Value = PLFunction> {
        prop::collection::btree_set(1i64..64, 0..8).prop_flat_map(|inner| {
            let mut xs = vec![0i64];
            xs.extend(inner);
            xs.push(64);
            let n = xs.len();
            prop::collection::vec(-16i64..=16, n).prop_map(move |ys| {
                PLFunction::new(
                    xs.iter().map(|&x| Scalar::new(x, 64)).collect(),
                    ys.iter().map(|&y| Scalar::new(y, 16)).collect(),
                )
                .unwrap()
            })
        })
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(96))]

        #[test]
        fn quotients_bounded_by_lip(f in pl_strategy(), a in grid_point(), b in grid_point(), n in 1usize..9) {
            prop_assume!(a != b);
            let lip_pl = LipFunction::from(f.clone()).lip_number();
            let quot = LipFunction::from(f).difference_quotient(&a, &b).unwrap();
            prop_assert!(quot.norm().hi() <= lip_pl.hi());
            let t = tent(n);
            let quot = t.difference_quotient(&a, &b).unwrap();
            prop_assert!(quot.norm().hi() <= t.lip_number().hi());
            prop_assert!(quot.coords().iter().all(|c| c.abs().hi() <= &Scalar::one()));
        }

        #[test]
        fn tent_coordinates_bounded(t in (-20i64..=260).prop_map(|n| Scalar::new(n, 240)), n in 2usize..14) {
            let v = tent_coordinate(n, &t);
            prop_assert!(!v.is_negative());
            prop_assert!(v <= Scalar::pow2(1 - n as i64));
        }

        #[test]
        fn symmetric_pairs_give_first_basis_vector(n in 2u32..11) {
            let (p, qq) = TentSequenceFunction::symmetric_pair(n);
            let quot = tent(12).difference_quotient(&p, &qq).unwrap().exact().unwrap();
            prop_assert_eq!(&quot[0], &Scalar::one());
            prop_assert!(quot[1..].iter().all(Scalar::is_zero));
        }

        #[test]
        fn cantor_increment_identity(c in 1i64..10, d in 1u32..9, a in grid_point(), b in grid_point()) {
            let (a, b) = if a <= b { (a, b) } else { (b, a) };
            prop_assume!(a < b);
            let set = build(FatCantorParams::quarter_power(Scalar::new(c, 10)).unwrap(), d).unwrap();
            let g = CantorIntegralFunction::new(set.clone());
            let lhs = g.eval(&b).unwrap() - g.eval(&a).unwrap();
            let window = Interval::new(a.clone(), b.clone()).unwrap();
            let rhs = (-crate::cantor::measure_in(&set, &window)).shift(&(&b - &a));
            let slack = set.tail().clone() + g.eval(&b).unwrap().width() + g.eval(&a).unwrap().width();
            // the two enclosures of the same real number must overlap
            prop_assert!(lhs.lo() <= &(rhs.hi() + &slack) && rhs.lo() <= &(lhs.hi() + &slack));
            prop_assert!(lhs.lo() <= rhs.hi() && rhs.lo() <= lhs.hi());
            // non-decreasing and 1-Lipschitz
            prop_assert!(!lhs.hi().is_negative());
            prop_assert!(lhs.lo() <= &(&b - &a));
        }
    }
}
