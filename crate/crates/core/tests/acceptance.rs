//! Release gate: runs every acceptance criterion at full level and prints one
//! line per criterion. Set `ACCEPTANCE_SEED` to try another seed.

use std::process::ExitCode;
use std::time::Instant;

use infmeasure::selftest::{run_criterion, Level, CRITERIA};

const DEFAULT_SEED: u64 = 20_260_101;

fn main() -> ExitCode {
    let seed = std::env::var("ACCEPTANCE_SEED").ok().and_then(|s| s.parse().ok()).unwrap_or(DEFAULT_SEED);
    println!("acceptance: level full, seed {seed}");
    let mut failed = Vec::new();
    for id in 1..=CRITERIA {
        let start = Instant::now();
        let (passed, name, detail) = match run_criterion(id, Level::Full, seed) {
            Ok(r) => (r.passed, r.name, r.detail),
            Err(e) => (false, infmeasure::selftest::name(id).to_string(), format!("error: {e}")),
        };
        let mark = if passed { "PASS" } else { "FAIL" };
        println!("criterion {id:>2} {mark} {name} ({:.1}s): {detail}", start.elapsed().as_secs_f64());
        if !passed {
            failed.push(id);
        }
    }
    if failed.is_empty() {
        println!("acceptance: all {CRITERIA} criteria pass");
        ExitCode::SUCCESS
    } else {
        println!("acceptance: failed criteria {failed:?}");
        ExitCode::FAILURE
    }
}
