//! `maxaffine`: verification campaigns for fat Cantor sets and affine
//! approximation of Lipschitz functions.
//!
//! Exit codes: 0 when everything is certified, 1 on I/O failure, 2 on usage
//! or precondition errors, 3 when some cell stays inconclusive.

mod commands;
mod output;

use std::process::ExitCode;

use clap::{Parser, Subcommand};

use commands::{AapApproxArgs, CantorBuildArgs, ReportArgs, TentExampleArgs, VerifyFailureArgs, VerifyLemmaArgs};

/// Rational flags take the form `p/q` or an integer; decimals are rejected.
/// `--out -` sends the report to stdout and the summary to stderr.
#[derive(Debug, Parser)]
#[command(name = "maxaffine", version, about, long_about = None)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Build a fat Cantor set truncation and print its measures
    CantorBuild(CantorBuildArgs),
    /// Certify λ(C ∩ [a, b]) > (b - a)/2 on every grid window with b - a >= c
    VerifyLemma(VerifyLemmaArgs),
    /// Run the maximal affine approximation construction on PL functions
    AapApprox(AapApproxArgs),
    /// Certify that the Cantor integral admits no uniform affine approximation
    VerifyFailure(VerifyFailureArgs),
    /// Check the tent-sequence example and emit its coordinates as CSV
    TentExample(TentExampleArgs),
    /// Summarize or convert a saved report
    Report(ReportArgs),
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::CantorBuild(args) => commands::cantor_build(args),
        Command::VerifyLemma(args) => commands::verify_lemma(args),
        Command::AapApprox(args) => commands::aap_approx(args),
        Command::VerifyFailure(args) => commands::verify_failure(args),
        Command::TentExample(args) => commands::tent_example(args),
        Command::Report(args) => commands::report(args),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err}");
            ExitCode::from(err.exit_code())
        }
    }
}
