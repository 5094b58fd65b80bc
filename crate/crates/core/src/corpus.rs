//! Seeded random instances for campaigns and tests.
//!
//! Every generator draws from `Xoshiro256PlusPlus::seed_from_u64(seed)`, so a
//! seed fixes the corpus bit for bit across runs and platforms.
//!
//! * PL functions have 2 to 20 breakpoints on the grid `k/64`, always
//!   including `0` and `1`, with values `j/16 ∈ [-1, 1]`.
//! * Windows have endpoints on the same `1/64` grid and are redrawn until the
//!   function is nonconstant on them.

use rand::{RngExt, SeedableRng};
use rand_xoshiro::Xoshiro256PlusPlus;

use crate::cantor::FatCantorParams;
use crate::exactnum::{Interval, Scalar};
use crate::lipfun::PLFunction;

pub type CorpusRng = Xoshiro256PlusPlus;

pub const GRID: i64 = 64;
pub const VALUE_DENOM: i64 = 16;
pub const MAX_BREAKPOINTS: usize = 20;

pub fn rng(seed: u64) -> CorpusRng {
    Xoshiro256PlusPlus::seed_from_u64(seed)
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PlInstance {
    pub f: PLFunction,
    pub window: Interval,
}

/// A PL function with a pair `(p, q)` spanning one of its steepest segments.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SnaInstance {
    pub f: PLFunction,
    pub p: Scalar,
    pub q: Scalar,
}

pub fn random_pl(rng: &mut CorpusRng) -> PLFunction {
    let n = rng.random_range(2..=MAX_BREAKPOINTS);
    let mut xs = vec![0, GRID];
    while xs.len() < n {
        let x = rng.random_range(1..GRID);
        if !xs.contains(&x) {
            xs.push(x);
        }
    }
    xs.sort_unstable();
    let ys = (0..n).map(|_| Scalar::new(rng.random_range(-VALUE_DENOM..=VALUE_DENOM), VALUE_DENOM));
    PLFunction::new(xs.into_iter().map(|x| Scalar::new(x, GRID)).collect(), ys.collect())
        .expect("sorted distinct breakpoints")
}

/// A nonconstant PL function, redrawn until it has a nonzero slope.
pub fn random_nonconstant_pl(rng: &mut CorpusRng) -> PLFunction {
    loop {
        let f = random_pl(rng);
        if f.lip().is_positive() {
            return f;
        }
    }
}

/// A grid window of positive length on which `f` is nonconstant.
pub fn random_window(rng: &mut CorpusRng, f: &PLFunction) -> Interval {
    loop {
        let a = rng.random_range(0..GRID);
        let b = rng.random_range(a + 1..=GRID);
        let w = Interval::new(Scalar::new(a, GRID), Scalar::new(b, GRID)).expect("a < b");
        if f.lip_on(&w).expect("window inside [0, 1]").is_positive() {
            return w;
        }
    }
}

pub fn pl_corpus(seed: u64, count: usize) -> Vec<PlInstance> {
    let mut rng = rng(seed);
    (0..count)
        .map(|_| {
            let f = random_nonconstant_pl(&mut rng);
            let window = random_window(&mut rng, &f);
            PlInstance { f, window }
        })
        .collect()
}

pub fn sna_corpus(seed: u64, count: usize) -> Vec<SnaInstance> {
    let mut rng = rng(seed);
    (0..count)
        .map(|_| {
            let f = random_nonconstant_pl(&mut rng);
            let lip = f.lip();
            let i = (0..f.segment_count()).find(|&i| f.slope(i).abs() == lip).expect("Lip is a segment slope");
            let seg = f.segment(i);
            SnaInstance { p: seg.lo().clone(), q: seg.hi().clone(), f }
        })
        .collect()
}

/// `p/q` with `2 <= q <= max_denom` and `0 < p < q`.
pub fn random_unit_fraction(rng: &mut CorpusRng, max_denom: i64) -> Scalar {
    let q = rng.random_range(2..=max_denom);
    Scalar::new(rng.random_range(1..q), q)
}

/// Feasible `Geometric(c, k)`: `c ∈ (0, 1)` and `0 < k <= (1 - c/2)/c`, so
/// that `λ(C) >= 0`.
pub fn random_geometric(rng: &mut CorpusRng) -> FatCantorParams {
    let c = random_unit_fraction(rng, 100);
    let k_max = (Scalar::one() - c.half()) / &c;
    let u = Scalar::new(rng.random_range(1..=100), 100);
    FatCantorParams::geometric(c, k_max * u).expect("parameters in range")
}
