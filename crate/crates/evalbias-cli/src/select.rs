use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use clap::Args;
use evalbias::io::{emit_plot_data, load_grouped_csv, CsvFilters, PlotData, SelectionCurveRow};
use evalbias::{
    energy_table, solve, Density, Grid, LossSpec, SelectionConfig,
};

use crate::common::{FamilyArgs, LossKind};

#[derive(Debug, Args)]
pub struct SelectArgs {
    #[command(flatten)]
    pub family: FamilyArgs,

    /// Build the true density from this grouped CSV instead of a family
    #[arg(long)]
    pub input: Option<PathBuf>,

    #[arg(long, default_value = "value")]
    pub value_col: String,

    #[arg(long, default_value = "group")]
    pub group_col: String,

    /// Group label whose samples define the true density (with --input)
    #[arg(long, default_value = "G1")]
    pub g1: String,

    /// Keep only rows with value >= this (with --input)
    #[arg(long)]
    pub min_value: Option<f64>,

    /// Loss family of the biased evaluation
    #[arg(long, value_enum, default_value_t = LossKind::Squared)]
    pub loss: LossKind,

    /// Anchor of the absolute-deviation loss
    #[arg(long, default_value_t = 0.0)]
    pub anchor: f64,

    /// Risk parameter of the biased evaluation
    #[arg(long)]
    pub alpha_prime: f64,

    /// Entropy target of the biased evaluation
    #[arg(long)]
    pub tau_prime: f64,

    /// Shift of the biased evaluation
    #[arg(long, default_value_t = 0.0)]
    pub shift_prime: f64,

    /// Relative reduction of the risk parameter (alpha' -> alpha' (1 - d))
    #[arg(long, default_value_t = 0.5, allow_negative_numbers = true)]
    pub delta_alpha: f64,

    /// Relative change of the entropy target (tau' -> tau' (1 + d));
    /// negative values decrease it
    #[arg(long, default_value_t = 0.5, allow_negative_numbers = true)]
    pub delta_tau: f64,

    /// Advantaged group size
    #[arg(long, default_value_t = 1000)]
    pub n1: usize,

    /// Disadvantaged group sizes (comma separated)
    #[arg(long, value_delimiter = ',', default_value = "500,1000,2000")]
    pub n2: Vec<usize>,

    #[arg(long, default_value_t = 50)]
    pub k_min: usize,
    #[arg(long, default_value_t = 1000)]
    pub k_max: usize,
    #[arg(long, default_value_t = 50)]
    pub k_step: usize,

    /// Reserve ceil(frac * k) selections for the disadvantaged group
    #[arg(long)]
    pub quota_frac: Option<f64>,

    #[arg(long, default_value_t = 100)]
    pub reps: usize,

    #[arg(long, default_value_t = 0)]
    pub seed: u64,

    /// Output CSV (k,intervention,mean_ratio,sem); one file per group size
    #[arg(long)]
    pub out: PathBuf,
}

pub fn run(args: SelectArgs) -> Result<()> {
    let f_d = match &args.input {
        Some(path) => {
            let filters = CsvFilters {
                min_value: args.min_value,
                max_value: None,
            };
            let samples = load_grouped_csv(path, &args.value_col, &args.group_col, filters)?;
            let values = samples
                .get(&args.g1)
                .with_context(|| format!("group {:?} not present", args.g1))?;
            let grid = Grid::discrete(&samples.all_values())?;
            Density::empirical(values, &grid)?
        }
        None => args.family.density()?.0,
    };

    if args.k_step == 0 || args.k_min == 0 || args.k_min > args.k_max {
        bail!("need 0 < k_min <= k_max and a positive k_step");
    }
    if !(0.0..=1.0).contains(&args.delta_alpha) {
        bail!("delta_alpha must be in [0, 1]");
    }
    if !(-1.0..=1.0).contains(&args.delta_tau) {
        bail!("delta_tau must be in [-1, 1]");
    }

    let solve_at = |alpha: f64, tau: f64| -> Result<Density> {
        let loss = LossSpec::new(args.loss.family(args.anchor, &f_d), alpha, args.shift_prime)?;
        let energy = energy_table(&loss, &f_d, f_d.grid())?;
        Ok(solve(&energy, tau)?.density)
    };
    let biased = solve_at(args.alpha_prime, args.tau_prime)?;
    let alpha_int = solve_at(args.alpha_prime * (1.0 - args.delta_alpha), args.tau_prime)?;
    let tau_int = solve_at(args.alpha_prime, args.tau_prime * (1.0 + args.delta_tau))?;

    for &n2 in &args.n2 {
        let mut rows: Vec<SelectionCurveRow> = Vec::new();
        let mut k = args.k_min;
        while k <= args.k_max {
            let quota = args.quota_frac.map(|f| (f * k as f64).ceil() as usize);
            let outcome = evalbias::run_selection(&SelectionConfig {
                n1: args.n1,
                n2,
                k,
                f_d: f_d.clone(),
                biased: biased.clone(),
                alpha_int: alpha_int.clone(),
                tau_int: tau_int.clone(),
                quota,
                repetitions: args.reps,
                seed: args.seed,
            })?;
            for stat in &outcome.stats {
                rows.push(SelectionCurveRow {
                    k,
                    intervention: stat.intervention,
                    mean_ratio: stat.mean_ratio,
                    sem: stat.sem,
                });
            }
            k += args.k_step;
        }
        let path = path_for_group_size(&args.out, n2, args.n2.len() > 1);
        emit_plot_data(&PlotData::SelectionCurves(&rows), &path)?;
        println!("curves for |G2| = {n2} written to {}", path.display());
    }
    Ok(())
}

/// Suffix the file stem with the group size when sweeping several sizes.
fn path_for_group_size(base: &Path, n2: usize, multi: bool) -> PathBuf {
    if !multi {
        return base.to_path_buf();
    }
    let stem = base
        .file_stem()
        .and_then(|s| s.to_str())
        .unwrap_or("curves");
    let ext = base.extension().and_then(|s| s.to_str()).unwrap_or("csv");
    base.with_file_name(format!("{stem}_g2-{n2}.{ext}"))
}
