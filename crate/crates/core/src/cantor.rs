//! Parametrized fat Cantor sets on `[0, 1]`.
//!
//! A construction removes, at step `n`, one centered open middle of a fixed
//! absolute length from each of the `2^(n-1)` components left by step `n-1`.
//! Every component at a given depth therefore has the same length, and every
//! component receives the same future removals. That self-similarity gives
//! closed forms for the limit measure `λ(C)`, for the tail `λ(C_d) - λ(C)`,
//! and for `λ(C ∩ K) = λ(C) / 2^n` on any depth-`n` component `K`.
//!
//! Two schedules are supported:
//!
//! * [`FatCantorParams::Ternary`] removes middles of length `3^-n`, which
//!   reproduces the classical middle-thirds set.
//! * [`FatCantorParams::Geometric`] removes middles of length `k c^n / 4^(n-1)`.
//!   Removing `c^n / 4^n` at step `n` is the instance `k = 1/4`.
//!
//! The depth-`d` truncation `C_d` has `2^d` components and is never stored as
//! a list; queries walk the binary component tree in `O(d)` steps.

use std::cmp::Ordering;
use std::fmt;

use num_bigint::BigInt;
use rayon::prelude::*;
use serde::de::Error as _;
use serde::ser::SerializeStruct;
use serde::{Deserialize, Deserializer, Serialize, Serializer};
use thiserror::Error;

use crate::exactnum::{Bracket, DisjointIntervalSet, Interval, Scalar};
use crate::parallel;
use crate::report::{CellStatus, Summary};

/// Deepest truncation [`FatCantorSet::truncation`] will materialize.
pub const MAX_MATERIALIZED_DEPTH: u32 = 22;

/// Deepest construction [`depth_for_width`] will search.
pub const MAX_DEPTH: u32 = 4096;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum CantorError {
    #[error("depth must be at least 1")]
    ZeroDepth,
    #[error("geometric schedule needs 0 < c < 1 and k > 0 (got c = {c}, k = {k})")]
    InvalidParams { c: Scalar, k: Scalar },
    #[error("schedule infeasible at step {step}: removal {removed} is not shorter than component {available}")]
    Infeasible { step: u32, removed: Scalar, available: Scalar },
    #[error(
        "truncation at depth {depth} has too many components to materialize (limit depth {MAX_MATERIALIZED_DEPTH})"
    )]
    TooDeep { depth: u32 },
    #[error("bracket width target must be positive, got {0}")]
    BadWidth(Scalar),
    #[error("no depth up to {MAX_DEPTH} reaches tail width {0}")]
    WidthUnreachable(Scalar),
    #[error("window grid step must be positive, got {0}")]
    BadGridStep(Scalar),
    #[error("the lemma inequality is not guaranteed for c = {c}, k = {k} (needs 0 < c < 1, 0 < k <= 1/4)")]
    LemmaHypotheses { c: Scalar, k: Scalar },
    #[error("document does not match its own parameters: {0}")]
    Mismatch(&'static str),
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum FatCantorParams {
    Ternary,
    Geometric { c: Scalar, k: Scalar },
}

impl FatCantorParams {
    pub fn geometric(c: Scalar, k: Scalar) -> Result<Self, CantorError> {
        if !c.is_positive() || c >= Scalar::one() || !k.is_positive() {
            return Err(CantorError::InvalidParams { c, k });
        }
        Ok(FatCantorParams::Geometric { c, k })
    }

    /// The schedule removing `c^n / 4^n` at step `n`.
    pub fn quarter_power(c: Scalar) -> Result<Self, CantorError> {
        FatCantorParams::geometric(c, Scalar::new(1, 4))
    }

    pub fn satisfies_lemma_hypotheses(&self) -> bool {
        match self {
            FatCantorParams::Ternary => false,
            FatCantorParams::Geometric { k, .. } => k <= &Scalar::new(1, 4),
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            FatCantorParams::Ternary => "ternary",
            FatCantorParams::Geometric { .. } => "geometric",
        }
    }

    /// Length of each open middle removed at step `n >= 1`.
    pub fn removed_length(&self, step: u32) -> Scalar {
        let n = step as i32;
        match self {
            FatCantorParams::Ternary => Scalar::new(1, 3).pow(n),
            FatCantorParams::Geometric { c, k } => k * c.pow(n) / Scalar::from(4).pow(n - 1),
        }
    }

    /// `λ(C)`, in closed form.
    pub fn limit_measure(&self) -> Scalar {
        match self {
            FatCantorParams::Ternary => Scalar::zero(),
            FatCantorParams::Geometric { c, k } => Scalar::one() - k * c / (Scalar::one() - c.half()),
        }
    }

    /// `λ(C_depth) - λ(C)`, in closed form.
    pub fn tail(&self, depth: u32) -> Scalar {
        let d = depth as i32;
        match self {
            FatCantorParams::Ternary => Scalar::new(2, 3).pow(d),
            FatCantorParams::Geometric { c, k } => {
                let half_c = c.half();
                k * c * half_c.pow(d) / (Scalar::one() - &half_c)
            }
        }
    }
}

impl fmt::Display for FatCantorParams {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            FatCantorParams::Ternary => write!(f, "ternary"),
            FatCantorParams::Geometric { c, k } => write!(f, "geometric(c={c}, k={k})"),
        }
    }
}

/// Minimal depth whose tail is at most `width`.
pub fn depth_for_width(params: &FatCantorParams, width: &Scalar) -> Result<u32, CantorError> {
    if !width.is_positive() {
        return Err(CantorError::BadWidth(width.clone()));
    }
    (1..=MAX_DEPTH).find(|&d| &params.tail(d) <= width).ok_or_else(|| CantorError::WidthUnreachable(width.clone()))
}

#[derive(Debug, Clone, PartialEq, Eq)]
struct Level {
    /// length of every component at this level
    len: Scalar,
    /// length of the middle removed from each component to reach the next level
    next_removed: Scalar,
    /// `λ(C ∩ K)` for any component `K` at this level
    limit_mass: Scalar,
}

/// A fat Cantor set together with an exact depth-`depth` truncation.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FatCantorSet {
    params: FatCantorParams,
    depth: u32,
    levels: Vec<Level>,
    tail: Scalar,
    limit_measure: Scalar,
}

/// Builds `C_depth`, checking step by step that each removal fits.
pub fn build(params: FatCantorParams, depth: u32) -> Result<FatCantorSet, CantorError> {
    if depth == 0 {
        return Err(CantorError::ZeroDepth);
    }
    let limit_measure = params.limit_measure();
    let mut levels = Vec::with_capacity(depth as usize + 1);
    let mut len = Scalar::one();
    let mut mass = limit_measure.clone();
    for step in 1..=depth {
        let removed = params.removed_length(step);
        if removed >= len {
            return Err(CantorError::Infeasible { step, removed, available: len });
        }
        let next_len = (&len - &removed).half();
        let next_mass = mass.half();
        levels.push(Level { len, next_removed: removed, limit_mass: mass });
        len = next_len;
        mass = next_mass;
    }
    levels.push(Level { len: len.clone(), next_removed: params.removed_length(depth + 1), limit_mass: mass });

    if limit_measure.is_negative() {
        // Some later step must fail; report it.
        let mut step = depth;
        loop {
            step += 1;
            let removed = params.removed_length(step);
            if removed >= len {
                return Err(CantorError::Infeasible { step, removed, available: len });
            }
            len = (&len - &removed).half();
        }
    }

    let tail = params.tail(depth);
    Ok(FatCantorSet { params, depth, levels, tail, limit_measure })
}

impl FatCantorSet {
    pub fn params(&self) -> &FatCantorParams {
        &self.params
    }

    pub fn depth(&self) -> u32 {
        self.depth
    }

    /// `λ(C_depth) - λ(C)`.
    pub fn tail(&self) -> &Scalar {
        &self.tail
    }

    /// `λ(C)`.
    pub fn limit_measure(&self) -> &Scalar {
        &self.limit_measure
    }

    pub fn component_count(&self) -> BigInt {
        BigInt::from(1) << self.depth
    }

    /// Common length of the `2^depth` truncation components.
    pub fn component_length(&self) -> &Scalar {
        &self.leaf().len
    }

    /// Length of each middle removed at `step` (1-based, `step <= depth`).
    pub fn removed_length(&self, step: u32) -> Option<&Scalar> {
        (1..=self.depth).contains(&step).then(|| &self.levels[step as usize - 1].next_removed)
    }

    fn leaf(&self) -> &Level {
        &self.levels[self.depth as usize]
    }

    /// `λ(C_depth)`, from the component count and length.
    pub fn truncation_measure(&self) -> Scalar {
        Scalar::pow2(self.depth as i64) * self.component_length()
    }

    /// The components of `C_depth` in increasing order, generated lazily.
    pub fn components(&self) -> Components<'_> {
        Components { set: self, stack: vec![(0, Scalar::zero())] }
    }

    pub fn truncation(&self) -> Result<DisjointIntervalSet, CantorError> {
        if self.depth > MAX_MATERIALIZED_DEPTH {
            return Err(CantorError::TooDeep { depth: self.depth });
        }
        Ok(DisjointIntervalSet::from_sorted_unchecked(self.components().collect()))
    }

    /// Descends from the root to the component at `level` containing `t`,
    /// calling `on_left_full` each time an entire left sibling lies below `t`.
    /// Returns `Err(x)` with the left edge of the gap when `t` falls in a
    /// removed middle, `Ok(x)` with the left edge of the component otherwise.
    fn descend(&self, t: &Scalar, level: u32, mut on_left_full: impl FnMut(u32)) -> Result<Scalar, Scalar> {
        let mut x = Scalar::zero();
        for n in 0..level as usize {
            let child = &self.levels[n + 1].len;
            let left_end = &x + child;
            if t <= &left_end {
                continue;
            }
            let right_start = &left_end + &self.levels[n].next_removed;
            if t < &right_start {
                on_left_full(n as u32 + 1);
                return Err(left_end);
            }
            on_left_full(n as u32 + 1);
            x = right_start;
        }
        Ok(x)
    }

    /// `λ(C_depth ∩ [0, t])`, exact.
    pub fn truncation_measure_below(&self, t: &Scalar) -> Scalar {
        if !t.is_positive() {
            return Scalar::zero();
        }
        if t >= &Scalar::one() {
            return self.truncation_measure();
        }
        let leaf_len = self.component_length();
        let mut acc = Scalar::zero();
        let depth = self.depth;
        let found = self.descend(t, depth, |lvl| {
            acc = &acc + Scalar::pow2((depth - lvl) as i64) * leaf_len;
        });
        match found {
            Ok(x) => acc + (t - &x).min(leaf_len.clone()),
            Err(_) => acc,
        }
    }

    /// `λ(C_depth ∩ window)`, exact.
    pub fn truncation_measure_in(&self, window: &Interval) -> Scalar {
        self.truncation_measure_below(window.hi()) - self.truncation_measure_below(window.lo())
    }

    /// `λ(C ∩ [0, t])` enclosed using the exact mass of every whole component
    /// and the leaf-level uncertainty of the one partial component.
    pub fn limit_measure_below(&self, t: &Scalar) -> Bracket {
        if !t.is_positive() {
            return Bracket::exact(Scalar::zero());
        }
        if t >= &Scalar::one() {
            return Bracket::exact(self.limit_measure.clone());
        }
        let mut acc = Scalar::zero();
        let found = self.descend(t, self.depth, |lvl| {
            acc = &acc + &self.levels[lvl as usize].limit_mass;
        });
        match found {
            Err(_) => Bracket::exact(acc),
            Ok(x) => {
                let leaf = self.leaf();
                let covered = (t - &x).min(leaf.len.clone());
                let missing = &leaf.len - &leaf.limit_mass;
                let lo = (&covered - &missing).max(Scalar::zero());
                let hi = covered.min(leaf.limit_mass.clone());
                Bracket::new(&acc + lo, &acc + hi).expect("partial mass bounds are ordered")
            }
        }
    }

    /// `λ(C ∩ window)` enclosed via [`Self::limit_measure_below`]; usually much
    /// tighter than [`measure_in`].
    pub fn limit_measure_in(&self, window: &Interval) -> Bracket {
        (self.limit_measure_below(window.hi()) - self.limit_measure_below(window.lo())).clamp_below(&Scalar::zero())
    }

    /// Some closed subinterval of `window` disjoint from `C_depth`, if one exists.
    pub fn free_subinterval(&self, window: &Interval) -> Option<Interval> {
        let zero = Scalar::zero();
        let one = Scalar::one();
        if window.lo() < &zero {
            let hi = window.hi().min(&zero);
            return Interval::new(window.lo().clone(), window.lo().midpoint(hi)).ok();
        }
        if window.hi() > &one {
            let lo = window.lo().max(&one);
            return Interval::new(lo.midpoint(window.hi()), window.hi().clone()).ok();
        }
        let (a, b) = (window.lo(), window.hi());
        let mut x = Scalar::zero();
        for n in 0..self.depth as usize {
            let left_end = &x + &self.levels[n + 1].len;
            let right_start = &left_end + &self.levels[n].next_removed;
            let lo = a.max(&left_end);
            let hi = b.min(&right_start);
            if lo < hi {
                let quarter = (hi - lo).half().half();
                return Interval::new(lo + &quarter, hi - &quarter).ok();
            }
            if b <= &left_end {
                continue;
            }
            if a >= &right_start {
                x = right_start;
                continue;
            }
            return None;
        }
        None
    }

    pub fn refine(&self, extra_depth: u32) -> Result<FatCantorSet, CantorError> {
        if extra_depth == 0 {
            return Err(CantorError::ZeroDepth);
        }
        build(self.params.clone(), self.depth + extra_depth)
    }

    /// The two components one level below `node`, or `None` at the leaves.
    pub(crate) fn node_children(&self, node: &Node) -> Option<[Node; 2]> {
        if node.level >= self.depth {
            return None;
        }
        let n = node.level as usize;
        let child_len = &self.levels[n + 1].len;
        let child_mass = &self.levels[n + 1].limit_mass;
        let right_start = &node.left + child_len + &self.levels[n].next_removed;
        let left = Node { level: node.level + 1, left: node.left.clone(), mass_below: node.mass_below.clone() };
        let right = Node { level: node.level + 1, left: right_start, mass_below: &node.mass_below + child_mass };
        Some([left, right])
    }

    pub(crate) fn node_len(&self, node: &Node) -> &Scalar {
        &self.levels[node.level as usize].len
    }

    pub(crate) fn node_mass(&self, node: &Node) -> &Scalar {
        &self.levels[node.level as usize].limit_mass
    }
}

/// A component of some truncation `C_level`, with `λ(C ∩ [0, left])`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub(crate) struct Node {
    pub level: u32,
    pub left: Scalar,
    pub mass_below: Scalar,
}

impl Node {
    pub fn root() -> Node {
        Node { level: 0, left: Scalar::zero(), mass_below: Scalar::zero() }
    }
}

/// `λ(C ∩ window)` bracketed as `[hi - tail, hi]` with
/// `hi = λ(C_depth ∩ window)`.
pub fn measure_in(set: &FatCantorSet, window: &Interval) -> Bracket {
    let hi = set.truncation_measure_in(window);
    let lo = (&hi - &set.tail).max(Scalar::zero());
    Bracket::new(lo, hi).expect("tail is non-negative")
}

/// Lazy in-order iterator over the components of a truncation.
pub struct Components<'a> {
    set: &'a FatCantorSet,
    stack: Vec<(u32, Scalar)>,
}

impl Iterator for Components<'_> {
    type Item = Interval;

    fn next(&mut self) -> Option<Interval> {
        while let Some((level, x)) = self.stack.pop() {
            let levels = &self.set.levels;
            let n = level as usize;
            if level == self.set.depth {
                let hi = &x + &levels[n].len;
                return Some(Interval::new(x, hi).expect("positive component length"));
            }
            let right = &x + &levels[n + 1].len + &levels[n].next_removed;
            self.stack.push((level + 1, right));
            self.stack.push((level + 1, x));
        }
        None
    }
}

// JSON document: {schedule, c, k, depth, components: [[lo_num, lo_den, hi_num, hi_den], ...], tail}

struct ComponentRow(Interval);

impl Serialize for ComponentRow {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        let pair = |x: &Scalar| serde_json::to_value(x).expect("scalar serializes");
        let (lo, hi) = (pair(self.0.lo()), pair(self.0.hi()));
        [&lo[0], &lo[1], &hi[0], &hi[1]].serialize(serializer)
    }
}

struct ComponentStream<'a>(&'a FatCantorSet);

impl Serialize for ComponentStream<'_> {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.collect_seq(self.0.components().map(ComponentRow))
    }
}

/// Streams every component, so documents above [`MAX_MATERIALIZED_DEPTH`]
/// are refused rather than written.
impl Serialize for FatCantorSet {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        if self.depth > MAX_MATERIALIZED_DEPTH {
            return Err(serde::ser::Error::custom(CantorError::TooDeep { depth: self.depth }));
        }
        let (c, k) = match &self.params {
            FatCantorParams::Ternary => (None, None),
            FatCantorParams::Geometric { c, k } => (Some(c), Some(k)),
        };
        let mut doc = serializer.serialize_struct("FatCantorSet", 6)?;
        doc.serialize_field("schedule", self.params.name())?;
        doc.serialize_field("c", &c)?;
        doc.serialize_field("k", &k)?;
        doc.serialize_field("depth", &self.depth)?;
        doc.serialize_field("components", &ComponentStream(self))?;
        doc.serialize_field("tail", &self.tail)?;
        doc.end()
    }
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct FatCantorDocument {
    schedule: String,
    c: Option<Scalar>,
    k: Option<Scalar>,
    depth: u32,
    components: Option<Vec<[serde_json::Number; 4]>>,
    tail: Option<Scalar>,
}

impl FatCantorDocument {
    fn into_set(self) -> Result<FatCantorSet, String> {
        let params = match (self.schedule.as_str(), self.c, self.k) {
            ("ternary", None, None) => FatCantorParams::Ternary,
            ("geometric", Some(c), Some(k)) => FatCantorParams::geometric(c, k).map_err(|e| e.to_string())?,
            (other, _, _) => return Err(format!("bad schedule/parameter combination for {other:?}")),
        };
        let set = build(params, self.depth).map_err(|e| e.to_string())?;
        if let Some(tail) = self.tail {
            if tail != set.tail {
                return Err(CantorError::Mismatch("tail").to_string());
            }
        }
        if let Some(rows) = self.components {
            if BigInt::from(rows.len()) != set.component_count() {
                return Err(CantorError::Mismatch("component count").to_string());
            }
            for (row, expected) in rows.iter().zip(set.components()) {
                let [ln, ld, hn, hd] = row;
                let lo: Scalar = serde_json::from_value(serde_json::json!([ln, ld])).map_err(|e| e.to_string())?;
                let hi: Scalar = serde_json::from_value(serde_json::json!([hn, hd])).map_err(|e| e.to_string())?;
                if (&lo, &hi) != (expected.lo(), expected.hi()) {
                    return Err(CantorError::Mismatch("components").to_string());
                }
            }
        }
        Ok(set)
    }
}

/// Rebuilds the set from `schedule`/`c`/`k`/`depth` and checks any listed
/// components and tail against the rebuilt truncation.
impl<'de> Deserialize<'de> for FatCantorSet {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        FatCantorDocument::deserialize(deserializer)?.into_set().map_err(D::Error::custom)
    }
}

// Lemma campaign: λ(C ∩ [a, b]) > (b - a)/2 for every grid window with b - a >= c.

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LemmaParams {
    pub c: Scalar,
    pub k: Scalar,
    pub grid_step: Scalar,
    pub depth: u32,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LemmaCell {
    pub a: Scalar,
    pub b: Scalar,
    pub lambda_lo: Scalar,
    pub margin_lo: Scalar,
    pub status: CellStatus,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LemmaReport {
    pub params: LemmaParams,
    pub cells: Vec<LemmaCell>,
    pub summary: Summary,
}

/// Lower bound on `λ(C ∩ W) - |W|/2` over windows with `|W| >= c`, namely
/// `c/2 - (1 - λ(C))`; positive exactly when the lemma's hypotheses give room.
pub fn lemma_guaranteed_margin(params: &FatCantorParams) -> Option<Scalar> {
    match params {
        FatCantorParams::Ternary => None,
        FatCantorParams::Geometric { c, .. } => {
            let m = c.half() - (Scalar::one() - params.limit_measure());
            m.is_positive().then_some(m)
        }
    }
}

/// Grid windows `[a, b] ⊆ [0, 1]` with endpoints in `step·ℤ` and `b - a >= min_len`.
pub fn grid_windows(step: &Scalar, min_len: &Scalar) -> Result<Vec<Interval>, CantorError> {
    if !step.is_positive() {
        return Err(CantorError::BadGridStep(step.clone()));
    }
    let count = (Scalar::one() / step).floor();
    let count: usize = count.try_into().map_err(|_| CantorError::BadGridStep(step.clone()))?;
    let points: Vec<Scalar> = (0..=count).map(|i| Scalar::from(i) * step).collect();
    let mut out = Vec::new();
    for (i, a) in points.iter().enumerate() {
        for b in &points[i + 1..] {
            if &(b - a) >= min_len {
                out.push(Interval::new(a.clone(), b.clone()).expect("ordered grid"));
            }
        }
    }
    Ok(out)
}

/// Certifies the lemma inequality on every grid window. The depth is the
/// smallest whose tail is at most `width_target`, defaulting to half the
/// guaranteed margin, so every cell certifies when the hypotheses hold.
pub fn lemma_campaign(
    c: &Scalar,
    k: &Scalar,
    grid_step: &Scalar,
    width_target: Option<&Scalar>,
) -> Result<LemmaReport, CantorError> {
    let params = FatCantorParams::geometric(c.clone(), k.clone())?;
    if !params.satisfies_lemma_hypotheses() {
        return Err(CantorError::LemmaHypotheses { c: c.clone(), k: k.clone() });
    }
    let margin =
        lemma_guaranteed_margin(&params).ok_or_else(|| CantorError::LemmaHypotheses { c: c.clone(), k: k.clone() })?;
    let width = match width_target {
        Some(w) => w.clone(),
        None => margin.half(),
    };
    let depth = depth_for_width(&params, &width)?;
    let set = build(params, depth)?;
    let windows = grid_windows(grid_step, c)?;

    let cells: Vec<LemmaCell> = parallel::install(|| {
        windows
            .par_iter()
            .map(|w| {
                let lambda_lo = measure_in(&set, w).lo().clone();
                let margin_lo = &lambda_lo - w.length().half();
                let status = match margin_lo.cmp(&Scalar::zero()) {
                    Ordering::Greater => CellStatus::Certified,
                    _ => CellStatus::Inconclusive,
                };
                LemmaCell { a: w.lo().clone(), b: w.hi().clone(), lambda_lo, margin_lo, status }
            })
            .collect()
    });
    let summary = Summary::tally(cells.iter().map(|c| c.status));
    Ok(LemmaReport {
        params: LemmaParams { c: c.clone(), k: k.clone(), grid_step: grid_step.clone(), depth },
        cells,
        summary,
    })
}
