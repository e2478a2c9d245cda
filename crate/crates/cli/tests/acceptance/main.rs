//! Acceptance suite: one PASS/FAIL line per criterion on stderr, plus
//! end-to-end runs of the `pipgd` binary.

mod cli;
mod criteria;

use std::io::Write;

/// Prints the verdict line (bypassing test output capture) and returns `pass`.
pub fn verdict(id: u32, name: &str, pass: bool, detail: &str) -> bool {
    let tag = if pass { "PASS" } else { "FAIL" };
    let mut err = std::io::stderr().lock();
    let _ = writeln!(err, "criterion {id} [{tag}] {name}: {detail}");
    pass
}
