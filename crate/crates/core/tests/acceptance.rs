//! Runs without the libtest harness so the per-criterion lines are always
//! shown, passing or not.

use std::process::ExitCode;

use parvol::acceptance::{run_acceptance, SuiteConfig};

fn main() -> ExitCode {
    let results = run_acceptance(&SuiteConfig::default(), |r| println!("{}", r.line()));
    let failed: Vec<u32> = results.iter().filter(|r| !r.passed).map(|r| r.id).collect();
    if results.len() != 8 || !failed.is_empty() {
        eprintln!(
            "acceptance suite failed: {} results, failed criteria {failed:?}",
            results.len()
        );
        return ExitCode::FAILURE;
    }
    println!("acceptance suite: all 8 criteria passed");
    ExitCode::SUCCESS
}
