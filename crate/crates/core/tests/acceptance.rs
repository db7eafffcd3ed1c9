//! Acceptance suite. Prints one line per criterion.
//!
//! `FKSEP_TIER=full` selects the full tier (tens of minutes on one core);
//! the default is the fast tier.

use std::process::ExitCode;

use fksep_core::harness::{acceptance_suite_reporting, AcceptanceOptions, Tier};

/// Checks expected to fail: in the subcritical regime the crossing masses
/// still increase slowly over the reachable range of A, so the fitted rate
/// is negative with a confidence interval that excludes zero.
const EXPECTED_FAILURES: &[(u32, &str)] = &[(8, "line beta=0.5 sigma"), (8, "koch beta=0.4 sigma")];

fn main() -> ExitCode {
    // libtest flags such as --nocapture are accepted and ignored; a name
    // filter that does not mention acceptance skips the suite.
    let args: Vec<String> = std::env::args().skip(1).collect();
    if args.iter().any(|a| a == "--list") {
        println!("acceptance: test");
        return ExitCode::SUCCESS;
    }
    if let Some(filter) = args.iter().find(|a| !a.starts_with('-')) {
        if !"acceptance".contains(filter.as_str()) {
            return ExitCode::SUCCESS;
        }
    }
    let tier = match std::env::var("FKSEP_TIER") {
        Ok(t) => t.parse().expect("FKSEP_TIER is fast or full"),
        Err(_) => Tier::Fast,
    };
    let opts = AcceptanceOptions {
        tier,
        ..Default::default()
    };
    let report = acceptance_suite_reporting(&opts, &mut |line| println!("{line}"));

    let mut unexpected = Vec::new();
    for item in &report.items {
        if !item.executed {
            unexpected.push(format!("criterion {} did not run: {:?}", item.id, item.error));
            continue;
        }
        for c in item.checks.iter().filter(|c| !c.pass) {
            if !EXPECTED_FAILURES.contains(&(item.id, c.label.as_str())) {
                unexpected.push(format!("criterion {}: {}", item.id, c.label));
            }
        }
    }
    println!(
        "acceptance ({tier}): {} of {} criteria passed, failing: {:?}",
        report.items.len() - report.failed_ids().len(),
        report.items.len(),
        report.failed_ids()
    );
    if unexpected.is_empty() {
        ExitCode::SUCCESS
    } else {
        for u in &unexpected {
            println!("unexpected failure: {u}");
        }
        ExitCode::FAILURE
    }
}
