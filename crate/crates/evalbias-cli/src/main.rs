mod common;
mod fit;
mod gennet;
mod select;
mod solve;
mod verify;

use std::process::ExitCode;

use clap::{Parser, Subcommand};

/// Solver and simulation toolkit for entropy-constrained evaluation-bias
/// models: solve instances, fit parameters to observed densities, simulate
/// constrained selection, generate synthetic networks, and verify the build.
#[derive(Parser)]
#[command(name = "evalbias", version, about, args_override_self = true)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Solve one instance and emit the solution density
    Solve(solve::SolveArgs),
    /// Fit model and baseline parameters to grouped sample data
    Fit(fit::FitArgs),
    /// Simulate constrained top-k selection under interventions
    Select(select::SelectArgs),
    /// Generate a group-biased preferential-attachment network
    Gennet(gennet::GennetArgs),
    /// Run the verification checks
    Verify(verify::VerifyArgs),
}

fn main() -> ExitCode {
    // die quietly when a downstream pipe closes instead of panicking on EPIPE
    #[cfg(unix)]
    unsafe {
        libc::signal(libc::SIGPIPE, libc::SIG_DFL);
    }
    let argv = match expand_config_args(std::env::args().collect()) {
        Ok(v) => v,
        Err(e) => {
            eprintln!("error: {e:#}");
            return ExitCode::FAILURE;
        }
    };
    // keep exit code 2 reserved for infeasible entropy targets; clap's own
    // usage errors (which default to 2) report as plain errors instead
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) if e.use_stderr() => {
            let _ = e.print();
            return ExitCode::FAILURE;
        }
        Err(e) => {
            // --help / --version
            let _ = e.print();
            return ExitCode::SUCCESS;
        }
    };
    let result = match cli.command {
        Command::Solve(args) => solve::run(args),
        Command::Fit(args) => fit::run(args),
        Command::Select(args) => select::run(args),
        Command::Gennet(args) => gennet::run(args),
        Command::Verify(args) => return verify::run(args),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            if is_infeasible(&e) {
                ExitCode::from(2)
            } else {
                ExitCode::FAILURE
            }
        }
    }
}

fn is_infeasible(e: &anyhow::Error) -> bool {
    matches!(
        e.downcast_ref::<evalbias::Error>(),
        Some(evalbias::Error::InfeasibleTau { .. })
    )
}

/// Replace every `--config <file>` pair with the whitespace-separated tokens
/// of the file, so flags given on the command line after it take precedence.
fn expand_config_args(argv: Vec<String>) -> anyhow::Result<Vec<String>> {
    let mut out = Vec::with_capacity(argv.len());
    let mut iter = argv.into_iter();
    while let Some(arg) = iter.next() {
        if arg == "--config" {
            let path = iter
                .next()
                .ok_or_else(|| anyhow::anyhow!("--config needs a file path"))?;
            let text = std::fs::read_to_string(&path)
                .map_err(|e| anyhow::anyhow!("reading config {path}: {e}"))?;
            for line in text.lines() {
                let line = line.split('#').next().unwrap_or("");
                out.extend(line.split_whitespace().map(String::from));
            }
        } else {
            out.push(arg);
        }
    }
    Ok(out)
}
