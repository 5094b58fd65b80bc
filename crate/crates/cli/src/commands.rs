use std::fs;
use std::io::{self, Write};
use std::path::PathBuf;

use clap::{Args, ValueEnum};
use maxaffine::affine::{
    check_maximal_fit, default_slope_grid, maximal_aap_construct, uniform_aap_falsify, CampaignReport, FitReport,
};
use maxaffine::cantor::{build, lemma_campaign, FatCantorParams, LemmaReport, MAX_MATERIALIZED_DEPTH};
use maxaffine::corpus::{pl_corpus, PlInstance};
use maxaffine::lipfun::{oscillation_witness, LipFunction, PLFunction, TentSequenceFunction};
use maxaffine::report::{CellStatus, Summary};
use maxaffine::{Interval, Scalar};
use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::output::{csv_writer, CliError, Format, Sink};

/// Above this many components the truncation is not printed.
const PRINT_COMPONENTS_DEPTH: u32 = 6;
/// CSV grids for the tent example use at most `2^16 + 1` points.
const TENT_GRID_CAP: u32 = 16;
const TENT_PROBE_POINTS: i64 = 32;
const TENT_MAX_SCALE: u32 = 8;

fn status_str(status: CellStatus) -> &'static str {
    match status {
        CellStatus::Certified => "certified",
        CellStatus::Inconclusive => "inconclusive",
    }
}

fn finish(summary: &Summary, what: &str) -> Result<(), CliError> {
    if summary.all_certified() {
        Ok(())
    } else {
        Err(CliError::Inconclusive(format!("{} of {} {what} inconclusive", summary.inconclusive, summary.total)))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Schedule {
    Ternary,
    Geometric,
}

#[derive(Debug, Args)]
pub struct CantorBuildArgs {
    #[arg(long, value_enum, default_value = "geometric")]
    schedule: Schedule,
    /// ratio c in (0, 1), geometric schedule only
    #[arg(long)]
    c: Option<Scalar>,
    /// scale k > 0, geometric schedule only
    #[arg(long)]
    k: Option<Scalar>,
    #[arg(long)]
    depth: u32,
    /// write the truncation as JSON (depth at most 22)
    #[arg(long)]
    out: Option<PathBuf>,
}

pub fn cantor_build(args: CantorBuildArgs) -> Result<(), CliError> {
    let params = match args.schedule {
        Schedule::Ternary => {
            if args.c.is_some() || args.k.is_some() {
                return Err(CliError::usage("--c and --k apply to the geometric schedule only"));
            }
            FatCantorParams::Ternary
        }
        Schedule::Geometric => {
            let c = args.c.ok_or_else(|| CliError::usage("the geometric schedule needs --c"))?;
            let k = args.k.unwrap_or_else(|| Scalar::new(1, 4));
            FatCantorParams::geometric(c, k).map_err(CliError::usage)?
        }
    };
    if args.out.is_some() && args.depth > MAX_MATERIALIZED_DEPTH {
        return Err(CliError::Usage(format!(
            "JSON output needs depth at most {MAX_MATERIALIZED_DEPTH}, got {}",
            args.depth
        )));
    }
    let set = build(params.clone(), args.depth).map_err(CliError::usage)?;
    let sink = Sink::new(args.out);
    sink.say(format!("schedule: {params}"));
    sink.say(format!("depth: {}", set.depth()));
    sink.say(format!("components: {} of length {}", set.component_count(), set.component_length()));
    sink.say(format!("lambda(C) = {}", set.limit_measure()));
    sink.say(format!("tail = {}", set.tail()));
    sink.say(format!("lambda(C_{}) = {}", set.depth(), set.truncation_measure()));
    if set.depth() <= PRINT_COMPONENTS_DEPTH {
        let truncation = set.truncation().map_err(CliError::usage)?;
        sink.say(format!("C_{} = {truncation}", set.depth()));
    }
    sink.write_json(&set)
}

#[derive(Debug, Args)]
pub struct VerifyLemmaArgs {
    /// comma-separated ratios, each in (0, 1)
    #[arg(long, value_delimiter = ',', required = true)]
    c: Vec<Scalar>,
    #[arg(long, default_value = "1/4")]
    k: Scalar,
    /// window grid step; defaults to c/64 for each c
    #[arg(long)]
    grid_step: Option<Scalar>,
    /// bracket width target; defaults to half the guaranteed margin
    #[arg(long)]
    width: Option<Scalar>,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "json")]
    format: Format,
}

#[derive(Debug, Serialize, Deserialize)]
pub struct LemmaBatch {
    pub campaigns: Vec<LemmaReport>,
    pub summary: Summary,
}

impl LemmaBatch {
    fn write_csv(&self, w: &mut dyn Write) -> io::Result<()> {
        let mut csv = csv_writer(w);
        csv.write_record(["c", "k", "depth", "a", "b", "lambda_lo", "margin_lo", "margin_lo_approx", "status"])?;
        for report in &self.campaigns {
            let p = &report.params;
            for cell in &report.cells {
                csv.write_record([
                    p.c.to_string(),
                    p.k.to_string(),
                    p.depth.to_string(),
                    cell.a.to_string(),
                    cell.b.to_string(),
                    cell.lambda_lo.to_string(),
                    cell.margin_lo.to_string(),
                    format!("{:.9}", cell.margin_lo.to_f64()),
                    status_str(cell.status).to_string(),
                ])?;
            }
        }
        csv.flush()
    }

    fn describe(&self, sink: &Sink) {
        for report in &self.campaigns {
            let p = &report.params;
            let min = report.cells.iter().map(|c| &c.margin_lo).min();
            sink.say(format!(
                "c = {}, k = {}, grid step {}, depth {}: {} windows, {} certified, {} inconclusive{}",
                p.c,
                p.k,
                p.grid_step,
                p.depth,
                report.summary.total,
                report.summary.certified,
                report.summary.inconclusive,
                min.map(|m| format!(", smallest margin ~{:.6}", m.to_f64())).unwrap_or_default()
            ));
        }
    }
}

pub fn verify_lemma(args: VerifyLemmaArgs) -> Result<(), CliError> {
    let campaigns = args
        .c
        .iter()
        .map(|c| {
            let step = args.grid_step.clone().unwrap_or_else(|| c / Scalar::from(64));
            lemma_campaign(c, &args.k, &step, args.width.as_ref()).map_err(CliError::usage)
        })
        .collect::<Result<Vec<_>, _>>()?;
    let summary = Summary::tally(campaigns.iter().flat_map(|r| r.cells.iter().map(|c| c.status)));
    let batch = LemmaBatch { campaigns, summary };
    let sink = Sink::new(args.out);
    batch.describe(&sink);
    emit_lemma(&sink, &batch, args.format)?;
    finish(&batch.summary, "windows")
}

fn emit_lemma(sink: &Sink, batch: &LemmaBatch, format: Format) -> Result<(), CliError> {
    match format {
        Format::Json => sink.write_json(batch),
        Format::Csv => sink.write(|w| batch.write_csv(w)),
    }
}

#[derive(Debug, Args)]
pub struct AapApproxArgs {
    /// PRNG seed for the random corpus
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// number of random PL instances
    #[arg(long, default_value_t = 50)]
    count: usize,
    /// comma-separated tolerances, each in (0, 1)
    #[arg(long, value_delimiter = ',', default_value = "1/10")]
    eps: Vec<Scalar>,
    /// PL function JSON to use instead of the random corpus; the window is its domain
    #[arg(long)]
    function: Option<PathBuf>,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "json")]
    format: Format,
}

#[derive(Debug, Serialize, Deserialize)]
pub struct AapParams {
    pub seed: u64,
    pub count: usize,
    pub eps: Vec<Scalar>,
}

#[derive(Debug, Serialize, Deserialize)]
pub struct AapCell {
    pub index: usize,
    pub eps: Scalar,
    pub window: Interval,
    pub fit: FitReport,
    /// `eps · diam(I₁) · Lip(f)`
    pub bound: Scalar,
    pub status: CellStatus,
}

#[derive(Debug, Serialize, Deserialize)]
pub struct AapReport {
    pub params: AapParams,
    pub cells: Vec<AapCell>,
    pub summary: Summary,
}

impl AapReport {
    fn write_csv(&self, w: &mut dyn Write) -> io::Result<()> {
        let mut csv = csv_writer(w);
        csv.write_record([
            "index",
            "eps",
            "a",
            "b",
            "i1_lo",
            "i1_hi",
            "slope",
            "intercept",
            "sup_error",
            "bound",
            "status",
        ])?;
        for cell in &self.cells {
            csv.write_record([
                cell.index.to_string(),
                cell.eps.to_string(),
                cell.window.lo().to_string(),
                cell.window.hi().to_string(),
                cell.fit.interval.lo().to_string(),
                cell.fit.interval.hi().to_string(),
                cell.fit.map.slope.to_string(),
                cell.fit.map.intercept.to_string(),
                cell.fit.sup_error.hi().to_string(),
                cell.bound.to_string(),
                status_str(cell.status).to_string(),
            ])?;
        }
        csv.flush()
    }

    fn describe(&self, sink: &Sink) {
        sink.say(format!(
            "maximal affine approximation: {} instances x {} tolerances, {} certified, {} inconclusive",
            self.params.count,
            self.params.eps.len(),
            self.summary.certified,
            self.summary.inconclusive
        ));
    }
}

fn read_file(path: &PathBuf) -> Result<String, CliError> {
    fs::read_to_string(path).map_err(|source| CliError::Io { path: path.display().to_string(), source })
}

pub fn aap_approx(args: AapApproxArgs) -> Result<(), CliError> {
    let instances = match &args.function {
        Some(path) => {
            let f: PLFunction = serde_json::from_str(&read_file(path)?).map_err(CliError::usage)?;
            let window = f.domain();
            vec![PlInstance { f, window }]
        }
        None => pl_corpus(args.seed, args.count),
    };
    let mut cells = Vec::new();
    for (index, inst) in instances.iter().enumerate() {
        for eps in &args.eps {
            let fit = maximal_aap_construct(&inst.f, &inst.window, eps).map_err(CliError::usage)?;
            let ok = check_maximal_fit(&inst.f, &inst.window, eps, &fit).map_err(CliError::usage)?;
            let bound = eps * fit.interval.length() * inst.f.lip();
            let status = if ok { CellStatus::Certified } else { CellStatus::Inconclusive };
            cells.push(AapCell { index, eps: eps.clone(), window: inst.window.clone(), fit, bound, status });
        }
    }
    let summary = Summary::tally(cells.iter().map(|c| c.status));
    let report =
        AapReport { params: AapParams { seed: args.seed, count: instances.len(), eps: args.eps }, cells, summary };
    let sink = Sink::new(args.out);
    report.describe(&sink);
    emit_aap(&sink, &report, args.format)?;
    finish(&report.summary, "instances")
}

fn emit_aap(sink: &Sink, report: &AapReport, format: Format) -> Result<(), CliError> {
    match format {
        Format::Json => sink.write_json(report),
        Format::Csv => sink.write(|w| report.write_csv(w)),
    }
}

#[derive(Debug, Args)]
pub struct VerifyFailureArgs {
    #[arg(long, default_value = "1/2")]
    c: Scalar,
    #[arg(long, default_value = "1/128")]
    grid_step: Scalar,
    /// largest truncation depth tried per cell
    #[arg(long, default_value_t = 30)]
    depth: u32,
    /// comma-separated slopes replacing the default grid ±(7/8 + j/64), j = 1..16
    #[arg(long, value_delimiter = ',')]
    slope: Vec<Scalar>,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "json")]
    format: Format,
}

fn describe_failure(report: &CampaignReport, sink: &Sink) {
    let p = &report.params;
    sink.say(format!("c = {}, k = {}, grid step {}, depth budget {}", p.c, p.k, p.grid_step, p.depth));
    sink.say(format!(
        "{} cells: {} certified, {} inconclusive",
        report.summary.total, report.summary.certified, report.summary.inconclusive
    ));
    if let Some(cell) = report.cells.iter().min_by(|x, y| x.margin_lo.cmp(&y.margin_lo)) {
        sink.say(format!(
            "smallest margin ~{:.6} on [{}, {}] at slope {}",
            cell.margin_lo.to_f64(),
            cell.a,
            cell.b,
            cell.slope
        ));
    }
}

pub fn verify_failure(args: VerifyFailureArgs) -> Result<(), CliError> {
    let slopes = if args.slope.is_empty() { default_slope_grid() } else { args.slope };
    let report = uniform_aap_falsify(&args.c, &args.grid_step, &slopes, args.depth).map_err(CliError::usage)?;
    let sink = Sink::new(args.out);
    describe_failure(&report, &sink);
    emit_failure(&sink, &report, args.format)?;
    finish(&report.summary, "cells")
}

fn emit_failure(sink: &Sink, report: &CampaignReport, format: Format) -> Result<(), CliError> {
    match format {
        Format::Json => sink.write_json(report),
        Format::Csv => sink.write(|w| report.write_csv(w).map_err(io::Error::from)),
    }
}

#[derive(Debug, Args)]
pub struct TentExampleArgs {
    /// number of coordinates
    #[arg(long, alias = "coords", default_value_t = 12, value_parser = clap::value_parser!(u32).range(2..=24))]
    n: u32,
    /// CSV samples of every coordinate on a dyadic grid
    #[arg(long)]
    out: Option<PathBuf>,
}

/// Probe scales `2^-m`: `m = 1..=min(8, N - 2)`, or `m = 0` alone for `N = 2`.
fn tent_scales(n: u32) -> Vec<u32> {
    let top = TENT_MAX_SCALE.min(n.saturating_sub(2));
    if top == 0 {
        vec![0]
    } else {
        (1..=top).collect()
    }
}

pub fn tent_example(args: TentExampleArgs) -> Result<(), CliError> {
    let n = args.n;
    let tent = TentSequenceFunction::new(n as usize).map_err(CliError::usage)?;
    let f: LipFunction = tent.into();
    let sink = Sink::new(args.out);
    let mut failures = Vec::new();

    let lip = f.lip_number();
    sink.say(format!("Lip(f) = {lip}"));
    if !(lip.is_exact() && lip.lo() == &Scalar::one()) {
        failures.push("Lip(f) is not 1".to_string());
    }

    let mut e1 = vec![Scalar::zero(); n as usize];
    e1[0] = Scalar::one();
    for k in 2..n {
        let (p, q) = TentSequenceFunction::symmetric_pair(k);
        let quotient = f.difference_quotient(&p, &q).map_err(CliError::usage)?;
        let ok = quotient.exact().as_ref() == Some(&e1);
        sink.say(format!("quotient at ({p}, {q}) = e1: {}", if ok { "yes" } else { "no" }));
        if !ok {
            failures.push(format!("quotient at ({p}, {q})"));
        }
    }

    let lower = Scalar::new(1, 2);
    let scales = tent_scales(n);
    let mut found = 0;
    for j in 0..TENT_PROBE_POINTS {
        let t0 = Scalar::new(j, TENT_PROBE_POINTS);
        for &m in &scales {
            let delta = Scalar::pow2(-(m as i64));
            match oscillation_witness(&f, &t0, &delta, &lower) {
                Some(_) => found += 1,
                None => failures.push(format!("no witness at t0 = {t0}, delta = {delta}")),
            }
        }
    }
    let probes = TENT_PROBE_POINTS as usize * scales.len();
    sink.say(format!("oscillation witnesses (separation >= {lower}): {found} of {probes}"));

    sink.write(|w| write_tent_csv(w, &tent))?;
    if failures.is_empty() {
        Ok(())
    } else {
        Err(CliError::Inconclusive(failures.join("; ")))
    }
}

/// Rows `t, f_1(t), ..., f_N(t)` for `t = i / 2^min(N, 16)`. All values are
/// dyadic with at most 24 bits, so the decimal output is exact.
fn write_tent_csv(w: &mut dyn Write, tent: &TentSequenceFunction) -> io::Result<()> {
    let n = tent.coords();
    let bits = (n as u32).min(TENT_GRID_CAP);
    let points = 1i64 << bits;
    let mut csv = csv_writer(w);
    let header: Vec<String> = std::iter::once("t".to_string()).chain((1..=n).map(|i| format!("f{i}"))).collect();
    csv.write_record(&header)?;
    for i in 0..=points {
        let t = Scalar::new(i, points);
        let row: Vec<String> = std::iter::once(t.to_f64())
            .chain(tent.eval(&t).iter().map(Scalar::to_f64))
            .map(|x| x.to_string())
            .collect();
        csv.write_record(&row)?;
    }
    csv.flush()
}

#[derive(Debug, Args)]
pub struct ReportArgs {
    /// report JSON written by verify-lemma, aap-approx or verify-failure
    #[arg(long)]
    input: PathBuf,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "json")]
    format: Format,
}

/// Summaries are recomputed from the cells, so an edited summary cannot hide
/// an inconclusive cell.
pub fn report(args: ReportArgs) -> Result<(), CliError> {
    let value: Value = serde_json::from_str(&read_file(&args.input)?).map_err(CliError::usage)?;
    let bad = |e: serde_json::Error| CliError::Usage(format!("{}: {e}", args.input.display()));
    let sink = Sink::new(args.out);
    if value.get("campaigns").is_some() {
        let mut batch: LemmaBatch = serde_json::from_value(value).map_err(bad)?;
        for report in &mut batch.campaigns {
            report.summary = Summary::tally(report.cells.iter().map(|c| c.status));
        }
        batch.summary = Summary::tally(batch.campaigns.iter().flat_map(|r| r.cells.iter().map(|c| c.status)));
        batch.describe(&sink);
        emit_lemma(&sink, &batch, args.format)?;
        finish(&batch.summary, "windows")
    } else if value.pointer("/params/eps").is_some() {
        let mut report: AapReport = serde_json::from_value(value).map_err(bad)?;
        report.summary = Summary::tally(report.cells.iter().map(|c| c.status));
        report.describe(&sink);
        emit_aap(&sink, &report, args.format)?;
        finish(&report.summary, "instances")
    } else {
        let mut report: CampaignReport = serde_json::from_value(value).map_err(bad)?;
        report.summary = Summary::tally(report.cells.iter().map(|c| c.status));
        describe_failure(&report, &sink);
        emit_failure(&sink, &report, args.format)?;
        finish(&report.summary, "cells")
    }
}
