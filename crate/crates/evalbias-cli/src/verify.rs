use std::process::ExitCode;
use std::time::Instant;

use clap::{Args, ValueEnum};
use evalbias::checks::{fast_checks, full_checks};

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Level {
    /// Closed-form oracle and identity checks
    Fast,
    /// Adds the fitting, synthetic-network, and selection oracles
    Full,
}

#[derive(Debug, Args)]
pub struct VerifyArgs {
    #[arg(long, value_enum, default_value_t = Level::Fast)]
    pub level: Level,
}

pub fn run(args: VerifyArgs) -> ExitCode {
    let checks = match args.level {
        Level::Fast => fast_checks(),
        Level::Full => full_checks(),
    };
    let mut failures = 0usize;
    let started = Instant::now();
    for check in &checks {
        let check_started = Instant::now();
        match (check.run)() {
            Ok(detail) => println!(
                "PASS {} [{:.1?}]: {detail}",
                check.name,
                check_started.elapsed()
            ),
            Err(reason) => {
                failures += 1;
                println!(
                    "FAIL {} [{:.1?}]: {reason}",
                    check.name,
                    check_started.elapsed()
                );
            }
        }
    }
    println!(
        "{}/{} checks passed in {:.1?}",
        checks.len() - failures,
        checks.len(),
        started.elapsed()
    );
    if failures == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
