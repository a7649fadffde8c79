//! Every acceptance criterion at its stated tolerance, one line each.
//!
//! Built with `harness = false` so the lines are always shown; the process exits
//! nonzero when any criterion or the negative control fails.

use std::process::ExitCode;

fn main() -> ExitCode {
    let outcome = jhi_validation::run_acceptance();
    for line in &outcome.lines {
        println!("{line}");
    }
    if outcome.passed {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
