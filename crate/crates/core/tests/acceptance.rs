//! Runs the ten acceptance criteria and prints one PASS/FAIL line each.
//! Exits nonzero if any criterion fails.

use lpstab_core::suites::{run_criterion, run_suite, summary_table, Suite};

fn main() {
    let seed = std::env::var("LPSTAB_ACCEPTANCE_SEED").ok().and_then(|s| s.parse().ok()).unwrap_or(0);
    let results = match std::env::var("LPSTAB_ACCEPTANCE_ONLY").ok().and_then(|s| s.parse::<u8>().ok()) {
        Some(id) => vec![run_criterion(id, seed).expect("criterion runs")],
        None => run_suite(Suite::All, seed),
    };
    print!("{}", summary_table(&results));
    let failed: Vec<_> = results.iter().filter(|r| !r.passed).collect();
    for r in &failed {
        if let Some(c) = &r.counterexample {
            let text = serde_json::to_string(c).unwrap_or_default();
            let short: String = text.chars().take(2000).collect();
            eprintln!("counterexample for criterion {}: {short}", r.id);
        }
    }
    if !failed.is_empty() {
        std::process::exit(1);
    }
}
