//! Runs every verification suite with default options and prints a summary
//! line per suite, plus the failing cases if any.

use convac::verify::{run_suite, Suite, VerifyOptions};

fn main() {
    let opts = VerifyOptions::default();
    let mut all_passed = true;
    for suite in Suite::ALL {
        let report = run_suite(suite, &opts);
        println!(
            "{:<7} {:>4}/{:<4} {} ({} ms)",
            suite.name(),
            report.passed_cases,
            report.total_cases,
            if report.passed { "PASS" } else { "FAIL" },
            report.elapsed_ms
        );
        for c in report.cases.iter().filter(|c| !c.passed) {
            println!("    {}: {}", c.name, c.detail);
        }
        all_passed &= report.passed;
    }
    std::process::exit(if all_passed { 0 } else { 1 });
}
