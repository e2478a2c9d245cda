//! Experiment runners behind the `pipgd` binary.

pub mod args;
pub mod commands;
pub mod report;

use std::fmt;

use args::{Cli, Command};
use report::Summary;

/// Exit codes.
pub const EXIT_PASS: i32 = 0;
pub const EXIT_CHECK_FAILED: i32 = 1;
pub const EXIT_USAGE: i32 = 2;
pub const EXIT_NUMERICAL: i32 = 3;

/// Invalid flag values or fixtures.
#[derive(Debug)]
pub struct UsageError(pub String);

impl fmt::Display for UsageError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for UsageError {}

pub fn execute(cli: &Cli) -> anyhow::Result<Summary> {
    match &cli.command {
        Command::Lasso(f) => commands::lasso::run(f),
        Command::Nonlinear(f) => commands::nonlinear::run(f),
        Command::Ot(f) => commands::ot::run(f),
        Command::Certify(f) => commands::certify::run(f),
    }
}

/// Runs a parsed command, prints its summary and maps the outcome to an exit code.
pub fn run(cli: &Cli) -> i32 {
    match execute(cli) {
        Ok(summary) => {
            match serde_json::to_string_pretty(&summary) {
                Ok(text) => println!("{text}"),
                Err(e) => {
                    eprintln!("error: {e}");
                    return EXIT_NUMERICAL;
                }
            }
            for c in summary.checks.iter().filter(|c| !c.pass) {
                eprintln!("check failed: {}: {}", c.name, c.detail);
            }
            if summary.passed() {
                EXIT_PASS
            } else {
                EXIT_CHECK_FAILED
            }
        }
        Err(e) if e.downcast_ref::<UsageError>().is_some() => {
            eprintln!("error: {e}");
            EXIT_USAGE
        }
        Err(e) => {
            eprintln!("error: {e:#}");
            EXIT_NUMERICAL
        }
    }
}
