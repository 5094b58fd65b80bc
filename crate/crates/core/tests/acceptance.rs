//! Acceptance suite. Runs every criterion, prints one PASS/FAIL line each
//! and exits nonzero if any criterion fails.
//!
//! Oracles here are computed independently of the library paths they check:
//! closed forms are recomputed from the parameters, the intercept oracle is
//! an f64 brute force, and exact checks re-evaluate functions from their
//! breakpoint tables.

use std::process::ExitCode;
use std::time::{Duration, Instant};

use maxaffine::affine::{best_intercept, default_slope_grid, maximal_aap_construct, uniform_aap_falsify};
use maxaffine::cantor::{build, lemma_campaign, FatCantorParams};
use maxaffine::corpus::{self, pl_corpus, random_geometric, random_unit_fraction, sna_corpus};
use maxaffine::lipfun::{oscillation_witness, LipFunction, PLFunction, TentSequenceFunction};
use maxaffine::report::CellStatus;
use maxaffine::{Interval, Scalar};
use rand::RngExt;

type Outcome = Result<(), String>;

struct Criterion {
    id: u32,
    name: &'static str,
    limit: Duration,
    run: fn() -> Outcome,
}

fn q(s: &str) -> Scalar {
    s.parse().unwrap()
}

fn ensure(ok: bool, msg: impl FnOnce() -> String) -> Outcome {
    if ok {
        Ok(())
    } else {
        Err(msg())
    }
}

fn cantor_reproduction() -> Outcome {
    let set = build(FatCantorParams::Ternary, 2).map_err(|e| e.to_string())?;
    let truncation = set.truncation().map_err(|e| e.to_string())?;
    let expected = "[0, 1/9] ∪ [2/9, 1/3] ∪ [2/3, 7/9] ∪ [8/9, 1]";
    ensure(truncation.to_string() == expected, || format!("got {truncation}"))?;
    let bounds: Vec<(Scalar, Scalar)> =
        truncation.components().iter().map(|c| (c.lo().clone(), c.hi().clone())).collect();
    let expected: Vec<(Scalar, Scalar)> =
        [("0", "1/9"), ("2/9", "1/3"), ("2/3", "7/9"), ("8/9", "1")].iter().map(|(a, b)| (q(a), q(b))).collect();
    ensure(bounds == expected, || format!("components {bounds:?}"))
}

fn measure_closed_form() -> Outcome {
    let mut rng = corpus::rng(0);
    for _ in 0..10 {
        let params = random_geometric(&mut rng);
        let FatCantorParams::Geometric { c, k } = &params else { unreachable!() };
        let set = build(params.clone(), 40).map_err(|e| e.to_string())?;
        // removal series summed term by term: step n removes 2^(n-1) middles
        // of length k c^n / 4^(n-1)
        let removed: Scalar =
            (1..=40i32).map(|n| Scalar::pow2((n - 1) as i64) * k * c.pow(n) / Scalar::from(4).pow(n - 1)).sum();
        let truncation = set.truncation_measure();
        ensure(truncation == Scalar::one() - removed, || format!("{params}: truncation measure {truncation}"))?;
        let closed = Scalar::one() - k * c / (Scalar::one() - c.half());
        let got = &truncation - set.tail();
        ensure(got == closed, || format!("{params}: {got} vs {closed}"))?;
    }
    Ok(())
}

fn lemma_cells() -> Outcome {
    let quarter = q("1/4");
    for c in ["3/10", "1/2", "7/10"] {
        let c = q(c);
        let step = &c / Scalar::from(64);
        let report = lemma_campaign(&c, &quarter, &step, None).map_err(|e| e.to_string())?;
        ensure(report.summary.inconclusive == 0 && report.summary.total > 0, || {
            format!("c = {c}: {:?}", report.summary)
        })?;
        for cell in &report.cells {
            let len = &cell.b - &cell.a;
            ensure(cell.lambda_lo > len.half() && cell.status == CellStatus::Certified, || {
                format!("c = {c}: window [{}, {}]", cell.a, cell.b)
            })?;
        }
    }
    Ok(())
}

/// Exact sup of `|g - f|` over `window`, from the breakpoint table of `f`.
fn exact_sup_error(f: &PLFunction, window: &Interval, slope: &Scalar, intercept: &Scalar) -> Scalar {
    let at = |t: &Scalar| -> Scalar {
        let xs = f.breakpoints();
        let ys = f.values();
        let i = xs.windows(2).position(|w| &w[0] <= t && t <= &w[1]).expect("t in domain");
        let y = &ys[i] + (&ys[i + 1] - &ys[i]) * (t - &xs[i]) / (&xs[i + 1] - &xs[i]);
        (slope * t + intercept - y).abs()
    };
    let mut ts = vec![window.lo().clone(), window.hi().clone()];
    ts.extend(f.breakpoints().iter().filter(|x| window.contains(x)).cloned());
    ts.iter().map(at).max().unwrap()
}

fn max_abs_slope(f: &PLFunction, window: &Interval) -> Scalar {
    let xs = f.breakpoints();
    let ys = f.values();
    (0..xs.len() - 1)
        .filter(|&i| xs[i] < *window.hi() && xs[i + 1] > *window.lo())
        .map(|i| ((&ys[i + 1] - &ys[i]) / (&xs[i + 1] - &xs[i])).abs())
        .max()
        .unwrap()
}

fn maximal_construction() -> Outcome {
    for (idx, inst) in pl_corpus(0, 50).iter().enumerate() {
        ensure(inst.f.breakpoints().len() <= 20, || format!("instance {idx} too large"))?;
        let lip_window = max_abs_slope(&inst.f, &inst.window);
        for eps in ["1/10", "1/100"] {
            let eps = q(eps);
            let fit = maximal_aap_construct(&inst.f, &inst.window, &eps).map_err(|e| format!("{idx}: {e}"))?;
            let i1 = &fit.interval;
            ensure(inst.window.contains_interval(i1) && i1.length().is_positive(), || {
                format!("{idx}: I1 = {i1} outside {}", inst.window)
            })?;
            ensure(fit.map.slope.abs() > &lip_window - &eps, || format!("{idx}: slope {}", fit.map.slope))?;
            let err = exact_sup_error(&inst.f, i1, &fit.map.slope, &fit.map.intercept);
            let bound = &eps * i1.length() * &lip_window;
            ensure(err <= bound, || format!("{idx}, eps {eps}: error {err} > {bound}"))?;
        }
    }
    Ok(())
}

fn failure_campaign() -> Outcome {
    let report = uniform_aap_falsify(&q("1/2"), &q("1/128"), &default_slope_grid(), 30).map_err(|e| e.to_string())?;
    // 65 + 64 + ... + 1 windows of length >= 1/2 on the 1/128 grid, 32 slopes
    ensure(report.cells.len() == 2145 * 32, || format!("{} cells", report.cells.len()))?;
    ensure(report.summary.inconclusive == 0, || format!("{:?}", report.summary))?;
    let bad = report.cells.iter().filter(|c| !c.margin_lo.is_positive() || c.status != CellStatus::Certified).count();
    ensure(bad == 0, || format!("{bad} cells without a positive certified margin"))
}

fn pl_f64(xs: &[f64], ys: &[f64], t: f64) -> f64 {
    let i = xs.windows(2).position(|w| w[0] <= t && t <= w[1]).unwrap();
    ys[i] + (ys[i + 1] - ys[i]) * (t - xs[i]) / (xs[i + 1] - xs[i])
}

fn intercept_oracle() -> Outcome {
    let mut rng = corpus::rng(6);
    for (idx, inst) in pl_corpus(6, 20).iter().enumerate() {
        let slope = Scalar::new(rng.random_range(-16..=16), 8);
        let fit = best_intercept(&inst.f.clone().into(), &inst.window, &slope).map_err(|e| e.to_string())?;

        let xs: Vec<f64> = inst.f.breakpoints().iter().map(Scalar::to_f64).collect();
        let ys: Vec<f64> = inst.f.values().iter().map(Scalar::to_f64).collect();
        let (a, b) = (inst.window.lo().to_f64(), inst.window.hi().to_f64());
        let s = slope.to_f64();
        let steps = ((b - a) * 4096.0).round() as usize;
        let ts: Vec<f64> = (0..=steps).map(|i| a + i as f64 / 4096.0).collect();
        let fs: Vec<f64> = ts.iter().map(|&t| pl_f64(&xs, &ys, t)).collect();
        let (mut best_y, mut best_err) = (0.0, f64::INFINITY);
        for j in -4000..=4000 {
            let y = j as f64 * 1e-3;
            let err = ts.iter().zip(&fs).map(|(t, f)| (s * t + y - f).abs()).fold(0.0, f64::max);
            if err < best_err {
                best_err = err;
                best_y = y;
            }
        }
        let dy = (fit.intercept.midpoint().to_f64() - best_y).abs();
        let de = (fit.sup_error.midpoint().to_f64() - best_err).abs();
        ensure(dy <= 1e-3 && de <= 1e-3, || format!("instance {idx}: dy = {dy:e}, de = {de:e}"))?;
    }
    Ok(())
}

fn tent_suite() -> Outcome {
    let f: LipFunction = TentSequenceFunction::new(12).map_err(|e| e.to_string())?.into();
    let lip = f.lip_number();
    ensure(lip.is_exact() && lip.lo() == &Scalar::one(), || format!("Lip = {lip}"))?;
    for n in 2..=11u32 {
        let off = Scalar::pow2(-(n as i64));
        let half = q("1/2");
        let quotient = f.difference_quotient(&(&half + &off), &(&half - &off)).map_err(|e| e.to_string())?;
        let mut e1 = vec![Scalar::zero(); 12];
        e1[0] = Scalar::one();
        ensure(quotient.exact() == Some(e1), || format!("n = {n}: {quotient:?}"))?;
    }
    let lower = q("1/2");
    for j in 0..32 {
        let t0 = Scalar::new(j, 32);
        for m in 1..=8 {
            let delta = Scalar::pow2(-m);
            let (h1, h2) = oscillation_witness(&f, &t0, &delta, &lower).ok_or_else(|| format!("t0 = {t0}, m = {m}"))?;
            // recheck the witness directly
            let q1 = f.difference_quotient(&(&t0 + &h1), &t0).unwrap().exact().unwrap();
            let q2 = f.difference_quotient(&(&t0 + &h2), &t0).unwrap().exact().unwrap();
            let sep = q1.iter().zip(&q2).map(|(x, y)| (x - y).abs()).max().unwrap();
            ensure(sep >= lower && h1.abs() < delta && h2.abs() < delta, || format!("t0 = {t0}, m = {m}"))?;
        }
    }
    Ok(())
}

fn sna_line() -> Outcome {
    let mut rng = corpus::rng(8);
    for (idx, inst) in sna_corpus(8, 50).iter().enumerate() {
        let f: LipFunction = inst.f.clone().into();
        let lip = max_abs_slope(&inst.f, &inst.f.domain());
        for _ in 0..10 {
            let lambda = random_unit_fraction(&mut rng, 1000);
            let r = (Scalar::one() - &lambda) * &inst.p + &lambda * &inst.q;
            let quotient = f.difference_quotient(&inst.p, &r).map_err(|e| e.to_string())?;
            let norm = quotient.norm();
            ensure(norm.is_exact() && norm.lo() == &lip, || format!("instance {idx}, λ = {lambda}: {norm} vs {lip}"))?;
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let criteria = [
        Criterion { id: 1, name: "Cantor reproduction", limit: Duration::from_secs(1), run: cantor_reproduction },
        Criterion { id: 2, name: "measure closed form", limit: Duration::from_secs(10), run: measure_closed_form },
        Criterion { id: 3, name: "lemma campaign", limit: Duration::from_secs(60), run: lemma_cells },
        Criterion {
            id: 4,
            name: "maximal AAP construction",
            limit: Duration::from_secs(30),
            run: maximal_construction,
        },
        Criterion {
            id: 5,
            name: "uniform AAP failure campaign",
            limit: Duration::from_secs(300),
            run: failure_campaign,
        },
        Criterion {
            id: 6,
            name: "intercept oracle equivalence",
            limit: Duration::from_secs(30),
            run: intercept_oracle,
        },
        Criterion { id: 7, name: "tent example suite", limit: Duration::from_secs(30), run: tent_suite },
        Criterion { id: 8, name: "SNA line property", limit: Duration::MAX, run: sna_line },
    ];
    let mut failed = 0;
    for c in &criteria {
        let start = Instant::now();
        let outcome = (c.run)();
        let elapsed = start.elapsed();
        let outcome =
            outcome.and_then(|()| ensure(elapsed < c.limit, || format!("took {elapsed:.2?}, limit {:?}", c.limit)));
        match outcome {
            Ok(()) => println!("PASS criterion {} ({}) in {elapsed:.2?}", c.id, c.name),
            Err(msg) => {
                failed += 1;
                println!("FAIL criterion {} ({}) in {elapsed:.2?}: {msg}", c.id, c.name);
            }
        }
    }
    println!("{} of {} criteria passed", criteria.len() - failed, criteria.len());
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
