//! Full acceptance suite with default settings, one line per criterion.
//!
//! Runs without the libtest harness so the report is always printed. The
//! process fails when the set of failing criteria differs from
//! `KNOWN_FAILURES`, in either direction.

use shearstab_cli::acceptance::{self, SuiteOptions, CRITERIA};

/// Criteria that fail with the current numerics; see the README.
const KNOWN_FAILURES: &[&str] = &["exponential"];

fn main() {
    // `cargo test -- --list` and filters from other targets must not start a
    // half-hour run
    let args: Vec<String> = std::env::args().skip(1).collect();
    if args.iter().any(|a| a == "--list") {
        println!("acceptance: test");
        return;
    }
    if let Some(filter) = args.iter().find(|a| !a.starts_with('-')) {
        if !"acceptance".contains(filter.as_str()) {
            return;
        }
    }

    println!("running {} acceptance criteria", CRITERIA.len());
    let outcomes = acceptance::run(&SuiteOptions::default(), &[], |o| println!("{o}"));
    let failing: Vec<&str> = outcomes.iter().filter(|o| !o.passed).map(|o| o.id).collect();
    println!(
        "acceptance: {} passed, {} failed ({})",
        outcomes.len() - failing.len(),
        failing.len(),
        if failing.is_empty() { "none".to_string() } else { failing.join(", ") }
    );
    if failing != KNOWN_FAILURES {
        eprintln!("failing criteria {failing:?} differ from the recorded {KNOWN_FAILURES:?}");
        std::process::exit(1);
    }
    for id in KNOWN_FAILURES {
        println!("known failure: {id}");
    }
}
