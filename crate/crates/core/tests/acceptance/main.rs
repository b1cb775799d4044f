//! Acceptance suite. Runs every criterion (or the numbers given on the
//! command line), prints one PASS/FAIL line each, and fails if any fails.
//!
//! ```text
//! cargo test --test acceptance            # all ten
//! cargo test --test acceptance -- 1 6 10  # a selection
//! ```

mod attention;
mod baseline;
mod common;
mod gradients;
mod lagrange;
mod oracle;
mod physics;
mod reproducibility;
mod training;

use std::panic::{catch_unwind, AssertUnwindSafe};
use std::time::Instant;

use common::Outcome;

type Criterion = (u32, &'static str, fn() -> Outcome);

const CRITERIA: [Criterion; 10] = [
    (1, "physics exactness", physics::run),
    (2, "gradient correctness", gradients::run),
    (3, "counterfactual baseline", baseline::run),
    (4, "attention sanity", attention::run),
    (5, "constraint learning", lagrange::run),
    (6, "oracle equivalence", oracle::run),
    (7, "desk-scale optimality gap", training::desk_gap),
    (8, "ablation ordering", training::ablation_ordering),
    (9, "scalability trend", training::scalability),
    (10, "reproducibility", reproducibility::run),
];

fn main() {
    let selected: Vec<u32> = std::env::args().skip(1).filter_map(|a| a.parse().ok()).collect();
    let mut failed = 0;
    for (n, name, f) in CRITERIA {
        if !selected.is_empty() && !selected.contains(&n) {
            continue;
        }
        let start = Instant::now();
        let outcome = catch_unwind(AssertUnwindSafe(f)).unwrap_or_else(|e| {
            let msg = e
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| e.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_default();
            Outcome::fail(format!("panicked: {msg}"))
        });
        let secs = start.elapsed().as_secs_f64();
        let verdict = if outcome.pass { "PASS" } else { "FAIL" };
        println!("criterion {n:>2} {verdict} {name} ({secs:.1} s): {}", outcome.detail);
        for line in &outcome.report {
            println!("             {line}");
        }
        failed += usize::from(!outcome.pass);
    }
    if failed > 0 {
        println!("{failed} criterion(s) failed");
        std::process::exit(1);
    }
}
