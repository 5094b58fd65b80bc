//! Certified computations around fat Cantor sets, explicit Lipschitz example
//! functions and maximal affine approximation of Lipschitz functions on the
//! real line.
//!
//! * [`exactnum`]: exact rationals, intervals, interval unions, brackets.
//! * [`cantor`]: fat Cantor sets with closed-form measure and certified
//!   measure queries.
//! * [`lipfun`]: piecewise-linear, Cantor-integral and tent-sequence
//!   functions with difference-quotient probes.
//! * [`affine`]: fixed-slope minimax fitting, the maximal affine
//!   approximation construction, and the uniform-approximation falsifier.
//! * [`corpus`]: seeded random piecewise-linear instances.
//! * [`parallel`], [`report`]: the worker pool and shared report types.

#![allow(clippy::result_large_err)]

pub mod affine;
pub mod cantor;
pub mod corpus;
pub mod exactnum;
pub mod lipfun;
pub mod parallel;
pub mod report;

pub use exactnum::{Bracket, DisjointIntervalSet, Interval, Scalar};
