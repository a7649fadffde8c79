//! Runs the acceptance criteria and a negative control, producing one line per outcome.

use jhi::reproduce::{Criterion, CriterionRegistry, TableCriterion};

/// The convergence study used as the negative control.
pub const CONTROL_ID: u8 = 3;

pub struct Outcome {
    pub lines: Vec<String>,
    pub passed: bool,
}

/// The control study held to errors ten times larger than expected; it must be rejected.
pub fn negative_control() -> bool {
    let table = TableCriterion::standard_tables()
        .into_iter()
        .find(|t| t.id == CONTROL_ID)
        .expect("control study is registered");
    !table.with_expected_scaled(10.0).run().passed
}

pub fn run_acceptance() -> Outcome {
    let registry = CriterionRegistry::standard();
    let report = registry.run();
    let mut lines: Vec<String> = report.rows.iter().map(|r| r.to_string()).collect();
    let control = negative_control();
    lines.push(format!(
        "negative control {}: inflated expected errors are rejected",
        if control { "PASS" } else { "FAIL" }
    ));
    let failed = report.rows.iter().filter(|r| !r.passed).count();
    lines.push(format!("acceptance: {} of {} criteria passed", report.rows.len() - failed, report.rows.len()));
    Outcome {
        lines,
        passed: failed == 0 && control,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn registry_covers_every_criterion() {
        assert_eq!(CriterionRegistry::standard().ids(), (1..=9).collect::<Vec<u8>>());
    }

    #[test]
    fn control_study_passes_unscaled() {
        let table = TableCriterion::standard_tables().into_iter().find(|t| t.id == CONTROL_ID).unwrap();
        assert!(table.run().passed);
        assert!(negative_control());
    }
}
