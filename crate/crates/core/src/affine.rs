//! Affine approximation of real-valued Lipschitz functions.
//!
//! * [`residual_extremes`] and [`best_intercept`] solve the fixed-slope
//!   minimax problem `min_y sup_{t ∈ W} |x₀ t + y - f(t)|`. With residual
//!   `h(t) = f(t) - x₀ t` the optimum is `y = (max h + min h) / 2` and the
//!   optimal error is `(max h - min h) / 2`.
//! * [`maximal_aap_construct`] builds, for a piecewise-linear `f` and an
//!   interval `I`, a subinterval `I₁` and an affine `g` whose slope is within
//!   `ε` of `Lip(f|_I)` and whose error on `I₁` is at most
//!   `ε · diam(I₁) · Lip(f)`.
//! * [`uniform_aap_falsify`] certifies, cell by cell, that the Cantor
//!   integral `t - λ(C ∩ [0, t])` cannot be approximated that way on long
//!   windows: every affine map with `|x₀| > 7/8` has minimax error above
//!   `(b - a)/8` on every window `[a, b]` with `b - a >= c`.

use std::cmp::Reverse;
use std::collections::BinaryHeap;
use std::io;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::cantor::{self, build, grid_windows, CantorError, FatCantorParams, FatCantorSet, Node};
use crate::exactnum::{Bracket, Interval, Scalar};
use crate::lipfun::{CantorIntegralFunction, LipError, LipFunction, PLFunction};
use crate::parallel;
use crate::report::{CellStatus, Summary};

/// First depth tried by the falsifier before escalating.
pub const FALSIFIER_START_DEPTH: u32 = 6;
/// Depth increment between falsifier attempts on one cell.
pub const FALSIFIER_DEPTH_STEP: u32 = 4;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum AffineError {
    #[error(transparent)]
    Lip(#[from] LipError),
    #[error(transparent)]
    Cantor(#[from] CantorError),
    #[error("f is constant on {0}")]
    Degenerate(Interval),
    #[error("epsilon must lie in (0, 1), got {0}")]
    BadEpsilon(Scalar),
    #[error("c must lie in (0, 1), got {0}")]
    BadFraction(Scalar),
    #[error("slope {0} does not satisfy |x0| > 7/8")]
    BadSlope(Scalar),
    #[error("no grid window of step {step} has length at least {c}")]
    NoWindows { step: Scalar, c: Scalar },
    #[error("depth budget must be at least 1")]
    ZeroDepth,
}

/// `g(t) = slope · t + intercept`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AffineMap {
    pub slope: Scalar,
    pub intercept: Scalar,
}

impl AffineMap {
    pub fn new(slope: Scalar, intercept: Scalar) -> Self {
        AffineMap { slope, intercept }
    }

    pub fn eval(&self, t: &Scalar) -> Scalar {
        &self.slope * t + &self.intercept
    }

    pub fn lip(&self) -> Scalar {
        self.slope.abs()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FitReport {
    pub interval: Interval,
    pub map: AffineMap,
    pub sup_error: Bracket,
    /// `Lip(f|_I) - Lip(g)`
    pub lip_gap: Scalar,
    /// `λ(M ∩ I₁) / λ(I₁)` for the steep set `M` of the construction
    pub density: Scalar,
}

/// Enclosures of `max` and `min` of `h(t) = f(t) - slope · t` over a window.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Extremes {
    pub max: Bracket,
    pub min: Bracket,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct InterceptFit {
    pub intercept: Bracket,
    pub sup_error: Bracket,
}

pub fn residual_extremes(f: &LipFunction, window: &Interval, slope: &Scalar) -> Result<Extremes, AffineError> {
    match f {
        LipFunction::PiecewiseLinear(pl) => pl_residual_extremes(pl, window, slope),
        LipFunction::CantorIntegral(ci) => cantor_residual_extremes(ci, window, slope),
        LipFunction::TentSequence(_) => Err(LipError::VectorCodomain.into()),
    }
}

fn pl_residual_extremes(f: &PLFunction, window: &Interval, slope: &Scalar) -> Result<Extremes, AffineError> {
    let samples = pl_samples(f, window)?;
    let residuals = samples.iter().map(|(t, y)| y - slope * t);
    let (min, max) = residuals.fold((None::<Scalar>, None::<Scalar>), |(lo, hi), r| {
        let lo = Some(lo.map_or(r.clone(), |m| m.min(r.clone())));
        let hi = Some(hi.map_or(r.clone(), |m| m.max(r)));
        (lo, hi)
    });
    Ok(Extremes {
        max: Bracket::exact(max.expect("window endpoints sampled")),
        min: Bracket::exact(min.expect("window endpoints sampled")),
    })
}

/// Window endpoints plus interior breakpoints, with exact values.
fn pl_samples(f: &PLFunction, window: &Interval) -> Result<Vec<(Scalar, Scalar)>, AffineError> {
    let mut ts = vec![window.lo().clone()];
    ts.extend(f.breakpoints().iter().filter(|x| window.lo() < *x && *x < window.hi()).cloned());
    if window.hi() != window.lo() {
        ts.push(window.hi().clone());
    }
    ts.into_iter()
        .map(|t| {
            let y = f.eval(&t)?;
            Ok((t, y))
        })
        .collect()
}

/// `max_{s ∈ [0, len]} min(a + d_hi s, b - d_lo (len - s))` where `a`, `b`
/// bound the function at the ends and `[d_lo, d_hi]` bounds its derivative,
/// `d_hi - d_lo = 1`. The minimum is concave in `s` with its kink at the
/// crossing, so the maximum sits at the crossing or at an end.
fn concave_cap(a: &Scalar, b: &Scalar, len: &Scalar, d_lo: &Scalar, d_hi: &Scalar) -> Scalar {
    let cross = (b - d_lo * len - a) / (d_hi - d_lo);
    let cross = cross.max(Scalar::zero()).min(len.clone());
    [Scalar::zero(), cross, len.clone()]
        .iter()
        .map(|s| (a + d_hi * s).min(b - d_lo * (len - s)))
        .max()
        .expect("three candidates")
}

/// Best-first search for `max φ` over `window`, where `φ = sign · h` and
/// `h(t) = t - λ(C ∩ [0, t]) - slope · t`.
fn cantor_residual_max(set: &FatCantorSet, window: &Interval, slope: &Scalar, sign: i32) -> Bracket {
    let one = Scalar::one();
    let signed = |x: Scalar| if sign > 0 { x } else { -x };
    let signed_bracket = |b: Bracket| if sign > 0 { b } else { -b };
    // h' ∈ [-slope, 1 - slope] a.e.
    let (d_lo, d_hi) = if sign > 0 { (-slope, &one - slope) } else { (slope - &one, slope.clone()) };
    let drift = &one - slope;
    // exact residual at a point where λ(C ∩ [0, t]) = mass is known
    let exact_at = |t: &Scalar, mass: &Scalar| signed(&drift * t - mass);
    let at_window_end = |t: &Scalar| {
        let mass = set.limit_measure_below(t);
        signed_bracket((-mass).shift(&(&drift * t)))
    };
    let a_val = at_window_end(window.lo());
    let b_val = at_window_end(window.hi());
    let mut best = a_val.lo().clone().max(b_val.lo().clone());

    // value enclosures at the clipped ends of a node
    let ends = |node: &Node| -> Option<(Scalar, Bracket, Scalar, Bracket)> {
        let right = &node.left + set.node_len(node);
        let lo = window.lo().max(&node.left).clone();
        let hi = window.hi().min(&right).clone();
        if lo > hi {
            return None;
        }
        let lo_val = if lo == node.left { Bracket::exact(exact_at(&lo, &node.mass_below)) } else { a_val.clone() };
        let hi_val = if hi == right {
            Bracket::exact(exact_at(&hi, &(&node.mass_below + set.node_mass(node))))
        } else {
            b_val.clone()
        };
        Some((lo, lo_val, hi, hi_val))
    };

    // ordered by upper bound, then insertion order
    type Entry = (Scalar, Reverse<u64>, u32, Scalar, Scalar);
    let mut heap: BinaryHeap<Entry> = BinaryHeap::new();
    let mut seq: u64 = 0;
    let mut push = |heap: &mut BinaryHeap<Entry>, node: Node, best: &mut Scalar| {
        if let Some((lo, lo_val, hi, hi_val)) = ends(&node) {
            *best = best.clone().max(lo_val.lo().clone()).max(hi_val.lo().clone());
            let upper = concave_cap(lo_val.hi(), hi_val.hi(), &(hi - lo), &d_lo, &d_hi);
            heap.push((upper, Reverse(seq), node.level, node.left, node.mass_below));
            seq += 1;
        }
    };
    push(&mut heap, Node::root(), &mut best);

    while let Some((upper, _, level, left, mass_below)) = heap.pop() {
        if upper <= best {
            return Bracket::exact(best);
        }
        let node = Node { level, left, mass_below };
        match set.node_children(&node) {
            None => return Bracket::new(best, upper).expect("upper bound exceeds best"),
            Some([l, r]) => {
                push(&mut heap, l, &mut best);
                push(&mut heap, r, &mut best);
            }
        }
    }
    Bracket::exact(best)
}

fn cantor_residual_extremes(
    f: &CantorIntegralFunction,
    window: &Interval,
    slope: &Scalar,
) -> Result<Extremes, AffineError> {
    let domain = f.domain();
    for t in [window.lo(), window.hi()] {
        if !domain.contains(t) {
            return Err(LipError::Domain { t: t.clone(), domain: domain.clone() }.into());
        }
    }
    let max = cantor_residual_max(f.cantor(), window, slope, 1);
    let min = -cantor_residual_max(f.cantor(), window, slope, -1);
    Ok(Extremes { max, min })
}

/// Minimax intercept and error for slope `slope` on `window`.
pub fn best_intercept(f: &LipFunction, window: &Interval, slope: &Scalar) -> Result<InterceptFit, AffineError> {
    let Extremes { max, min } = residual_extremes(f, window, slope)?;
    let two = Scalar::from(2);
    let intercept = (&max + &min).scale(&two.recip());
    let sup_error = (&max - &min).scale(&two.recip()).clamp_below(&Scalar::zero());
    Ok(InterceptFit { intercept, sup_error })
}

/// `sup_{t ∈ window} |g(t) - f(t)|`, exact for piecewise-linear `f`.
pub fn pl_sup_error(f: &PLFunction, window: &Interval, g: &AffineMap) -> Result<Scalar, AffineError> {
    let samples = pl_samples(f, window)?;
    Ok(samples.iter().map(|(t, y)| (g.eval(t) - y).abs()).max().expect("non-empty"))
}

/// Longest run of consecutive segments on which `sign · f' > threshold`,
/// leftmost among equals. On such a run the steep set has density 1.
fn steepest_run(f: &PLFunction, sign: i32, threshold: &Scalar) -> Option<Interval> {
    let mut best: Option<Interval> = None;
    let mut start: Option<Scalar> = None;
    for i in 0..=f.segment_count() {
        let steep = i < f.segment_count() && {
            let s = f.slope(i);
            let s = if sign > 0 { s } else { -s };
            &s > threshold
        };
        match (&start, steep) {
            (None, true) => start = Some(f.breakpoints()[i].clone()),
            (Some(lo), false) => {
                let run = Interval::new(lo.clone(), f.breakpoints()[i].clone()).expect("ordered");
                if best.as_ref().is_none_or(|b| run.length() > b.length()) {
                    best = Some(run);
                }
                start = None;
            }
            _ => {}
        }
    }
    best
}

/// Builds `I₁ ⊆ window` and an affine `g` with
/// `Lip(g) > Lip(f|_window) - eps` and
/// `sup_{I₁} |g - f| <= eps · diam(I₁) · Lip(f)`.
///
/// The construction runs at `ε' = 2ε/3`: the steep set
/// `M = {t : f'(t) > Lip(f|_I)(1 - ε')}` (or its mirror for decreasing `f`)
/// is searched for a maximal-density segment, which for piecewise-linear `f`
/// is a longest run of steep segments, and `g` takes slope `±Lip(f|_I)`
/// with the intercept that balances the errors at both ends of `I₁`.
pub fn maximal_aap_construct(f: &PLFunction, window: &Interval, eps: &Scalar) -> Result<FitReport, AffineError> {
    if !eps.is_positive() || eps >= &Scalar::one() {
        return Err(AffineError::BadEpsilon(eps.clone()));
    }
    let local = f.restrict(window)?;
    let lip = local.lip();
    if lip.is_zero() {
        return Err(AffineError::Degenerate(window.clone()));
    }
    let working_eps = eps * Scalar::new(2, 3);
    let threshold = &lip * (Scalar::one() - &working_eps);
    let (sign, run) = match steepest_run(&local, 1, &threshold) {
        Some(run) => (1, run),
        None => (-1, steepest_run(&local, -1, &threshold).expect("a segment attains |f'| = Lip")),
    };
    let (a, b) = (run.lo(), run.hi());
    let slope = if sign > 0 { lip.clone() } else { -&lip };
    let intercept = (local.eval(a)? + local.eval(b)? - &slope * (a + b)).half();
    let map = AffineMap::new(slope, intercept);
    let sup_error = pl_sup_error(&local, &run, &map)?;
    Ok(FitReport {
        lip_gap: &lip - map.lip(),
        interval: run,
        map,
        sup_error: Bracket::exact(sup_error),
        density: Scalar::one(),
    })
}

/// Checks both guarantees of a [`FitReport`] exactly, recomputing the error
/// from `f` directly.
pub fn check_maximal_fit(
    f: &PLFunction,
    window: &Interval,
    eps: &Scalar,
    fit: &FitReport,
) -> Result<bool, AffineError> {
    if !window.contains_interval(&fit.interval) || !fit.interval.length().is_positive() {
        return Ok(false);
    }
    let lip_window = f.lip_on(window)?;
    let slope_ok = fit.map.lip() > &lip_window - eps;
    let error = pl_sup_error(f, &fit.interval, &fit.map)?;
    let error_ok = error <= eps * fit.interval.length() * f.lip();
    Ok(slope_ok && error_ok)
}

/// `{±(7/8 + j/64) : j = 1..16}`, positive slopes first.
pub fn default_slope_grid() -> Vec<Scalar> {
    let positive: Vec<Scalar> = (1..=16).map(|j| Scalar::new(56 + j, 64)).collect();
    let negative = positive.iter().map(|s| -s).collect::<Vec<_>>();
    positive.into_iter().chain(negative).collect()
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CampaignParams {
    pub c: Scalar,
    pub k: Scalar,
    pub grid_step: Scalar,
    pub depth: u32,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CampaignCell {
    pub a: Scalar,
    pub b: Scalar,
    pub slope: Scalar,
    /// certified lower bound on `sup_error - (b - a)/8`
    pub margin_lo: Scalar,
    pub status: CellStatus,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CampaignReport {
    pub params: CampaignParams,
    pub cells: Vec<CampaignCell>,
    pub summary: Summary,
}

impl CampaignReport {
    /// One row per cell: `a,b,slope,margin_lo,margin_lo_approx,status`.
    pub fn write_csv<W: io::Write>(&self, out: W) -> csv::Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["a", "b", "slope", "margin_lo", "margin_lo_approx", "status"])?;
        for cell in &self.cells {
            let status = match cell.status {
                CellStatus::Certified => "certified",
                CellStatus::Inconclusive => "inconclusive",
            };
            w.write_record([
                cell.a.to_string(),
                cell.b.to_string(),
                cell.slope.to_string(),
                cell.margin_lo.to_string(),
                format!("{:.9}", cell.margin_lo.to_f64()),
                status.to_string(),
            ])?;
        }
        w.flush()?;
        Ok(())
    }
}

/// Depths tried per cell: `6, 10, 14, ...`, capped by and always ending at `budget`.
pub fn depth_schedule(budget: u32) -> Vec<u32> {
    let mut depths: Vec<u32> = (FALSIFIER_START_DEPTH..budget).step_by(FALSIFIER_DEPTH_STEP as usize).collect();
    depths.push(budget);
    depths
}

/// Certifies `min_y sup_{[a,b]} |x₀ t + y - f(t)| > (b - a)/8` for the
/// Cantor integral over `Geometric(c, 1/4)` on every grid window with
/// `b - a >= c` and every slope in `slope_grid`.
pub fn uniform_aap_falsify(
    c: &Scalar,
    grid_step: &Scalar,
    slope_grid: &[Scalar],
    depth_budget: u32,
) -> Result<CampaignReport, AffineError> {
    if !c.is_positive() || c >= &Scalar::one() {
        return Err(AffineError::BadFraction(c.clone()));
    }
    if depth_budget == 0 {
        return Err(AffineError::ZeroDepth);
    }
    let floor = Scalar::new(7, 8);
    if let Some(bad) = slope_grid.iter().find(|s| s.abs() <= floor) {
        return Err(AffineError::BadSlope(bad.clone()));
    }
    let params = FatCantorParams::quarter_power(c.clone())?;
    let windows = grid_windows(grid_step, c)?;
    if windows.is_empty() {
        return Err(AffineError::NoWindows { step: grid_step.clone(), c: c.clone() });
    }
    let functions: Vec<LipFunction> = depth_schedule(depth_budget)
        .into_iter()
        .map(|d| Ok(CantorIntegralFunction::new(build(params.clone(), d)?).into()))
        .collect::<Result<_, CantorError>>()?;

    let cells: Vec<(usize, usize)> =
        (0..windows.len()).flat_map(|w| (0..slope_grid.len()).map(move |s| (w, s))).collect();
    let eighth = Scalar::new(1, 8);
    let results: Result<Vec<CampaignCell>, AffineError> = parallel::install(|| {
        cells
            .par_iter()
            .map(|&(wi, si)| {
                let window = &windows[wi];
                let slope = &slope_grid[si];
                let target = window.length() * &eighth;
                let mut margin = None;
                for f in &functions {
                    let fit = best_intercept(f, window, slope)?;
                    let m = fit.sup_error.lo() - &target;
                    let done = m.is_positive();
                    margin = Some(m);
                    if done {
                        break;
                    }
                }
                let margin_lo = margin.expect("at least one depth");
                let status = if margin_lo.is_positive() { CellStatus::Certified } else { CellStatus::Inconclusive };
                Ok(CampaignCell {
                    a: window.lo().clone(),
                    b: window.hi().clone(),
                    slope: slope.clone(),
                    margin_lo,
                    status,
                })
            })
            .collect()
    });
    let cells = results?;
    let summary = Summary::tally(cells.iter().map(|c| c.status));
    Ok(CampaignReport {
        params: CampaignParams {
            c: c.clone(),
            k: Scalar::new(1, 4),
            grid_step: grid_step.clone(),
            depth: depth_budget,
        },
        cells,
        summary,
    })
}

/// Certified lower bound on `½ λ(C ∩ [a, b]) - (b - a)/16 - (b - a)/8`,
/// the slope-free chain bounding the minimax error for `x₀ ∈ (7/8, 9/8]`.
pub fn chained_bound_margin(set: &FatCantorSet, window: &Interval) -> Scalar {
    let lambda_lo = cantor::measure_in(set, window).lo().clone();
    let len = window.length();
    lambda_lo.half() - &len * Scalar::new(1, 16) - len * Scalar::new(1, 8)
}
