use std::path::PathBuf;

use anyhow::Result;
use clap::Args;
use evalbias::io::write_atomic;
use evalbias::{energy_table, solve, LossSpec};

use crate::common::{FamilyArgs, LossKind};

#[derive(Debug, Args)]
pub struct SolveArgs {
    #[command(flatten)]
    pub family: FamilyArgs,

    /// Loss family
    #[arg(long, value_enum, default_value_t = LossKind::Squared)]
    pub loss: LossKind,

    /// Anchor of the absolute-deviation loss
    #[arg(long, default_value_t = 0.0)]
    pub anchor: f64,

    /// Risk parameter (> 0; values above 1 penalize overestimates)
    #[arg(long, default_value_t = 1.0)]
    pub alpha: f64,

    /// Entropy target
    #[arg(long)]
    pub tau: f64,

    /// Shift applied to the true value inside the loss
    #[arg(long, default_value_t = 0.0)]
    pub shift: f64,

    /// Write the solution (scalars plus density) as JSON
    #[arg(long)]
    pub out: Option<PathBuf>,

    /// Write the solution density as CSV (x,weight,mass)
    #[arg(long)]
    pub density_out: Option<PathBuf>,

    /// Additionally write the energy table as CSV (x,I)
    #[arg(long)]
    pub emit_energy: Option<PathBuf>,
}

pub fn run(args: SolveArgs) -> Result<()> {
    let (f_d, grid) = args.family.density()?;
    let loss = LossSpec::new(args.loss.family(args.anchor, &f_d), args.alpha, args.shift)?;
    let energy = energy_table(&loss, &f_d, &grid)?;
    if let Some(path) = &args.emit_energy {
        write_atomic(path, |out| energy.write_csv(out))?;
    }

    let solution = solve(&energy, args.tau)?;
    println!(
        "gamma_star = {:.12e}\nlog_partition = {:.12e}\nerr = {:.12e}\nentropy = {:.12}\nmean = {:.12}\nvariance = {:.12}",
        solution.gamma_star,
        solution.log_partition,
        solution.err,
        solution.achieved_entropy,
        solution.density.moments().mean,
        solution.density.moments().variance,
    );
    if solution.degenerate_argmin {
        eprintln!("warning: several grid points tie the minimum energy; the minimizer is not unique");
    }

    if let Some(path) = &args.out {
        let text = serde_json::to_string_pretty(&solution.to_json())?;
        write_atomic(path, |out| {
            use std::io::Write;
            writeln!(out, "{text}").map_err(Into::into)
        })?;
        println!("solution written to {}", path.display());
    }
    if let Some(path) = &args.density_out {
        write_atomic(path, |out| solution.density.write_csv(out))?;
        println!("density written to {}", path.display());
    }
    Ok(())
}
