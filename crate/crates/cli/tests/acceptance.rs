//! The thirteen acceptance criteria, each at its stated tolerance.
//!
//! Runs without the libtest harness so that the per-criterion lines are
//! always printed; exits non-zero if any criterion fails or cannot run.

use std::process::ExitCode;

use anholkit::verify::criterion;

const SEED: u64 = 7;

fn main() -> ExitCode {
    println!("acceptance: 13 criteria, seed {SEED}");
    let mut failed: Vec<u8> = Vec::new();
    for id in 1..=13u8 {
        match criterion(id, SEED) {
            Ok(c) => {
                println!("{}", c.summary_line());
                for check in c.checks.iter().filter(|r| !r.pass) {
                    println!("    failing: {}", check.to_json());
                }
                if !c.pass() {
                    failed.push(id);
                }
            }
            Err(e) => {
                println!("[FAIL] criterion {id:2}: could not run: {e}");
                failed.push(id);
            }
        }
    }
    if failed.is_empty() {
        println!("acceptance: all 13 criteria passed");
        ExitCode::SUCCESS
    } else {
        println!("acceptance: failed criteria {failed:?}");
        ExitCode::FAILURE
    }
}
