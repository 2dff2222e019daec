use std::path::PathBuf;

use anyhow::{bail, Context, Result};
use clap::Args;
use evalbias::io::{emit_plot_data, load_grouped_csv, write_atomic, CsvFilters, PlotData};
use evalbias::math::{linspace, logspace};
use evalbias::{
    fit_baseline, fit_optprog_with_report, train_test_split, BaselineModel, BaselineSearch,
    Density, Grid, SearchSpace,
};

use crate::common::LossKind;

#[derive(Debug, Args)]
pub struct FitArgs {
    /// CSV file with one row per individual
    #[arg(long)]
    pub input: PathBuf,

    /// Column holding the utility value
    #[arg(long, default_value = "value")]
    pub value_col: String,

    /// Column holding the group label
    #[arg(long, default_value = "group")]
    pub group_col: String,

    /// Label of the advantaged group (defines the true density)
    #[arg(long)]
    pub g1: String,

    /// Label of the disadvantaged group (the fit target)
    #[arg(long)]
    pub g2: String,

    /// Loss family for the model fit
    #[arg(long, value_enum, default_value_t = LossKind::Squared)]
    pub loss: LossKind,

    /// Anchor of the absolute-deviation loss
    #[arg(long, default_value_t = 0.0)]
    pub anchor: f64,

    /// Keep only rows with value >= this
    #[arg(long)]
    pub min_value: Option<f64>,

    /// Keep only rows with value <= this
    #[arg(long)]
    pub max_value: Option<f64>,

    /// Train fraction for the train/test split
    #[arg(long, default_value_t = 0.8)]
    pub split: f64,

    /// Fit on all samples with no held-out set
    #[arg(long, default_value_t = false)]
    pub no_split: bool,

    /// Seed for the split shuffle
    #[arg(long, default_value_t = 0)]
    pub seed: u64,

    #[arg(long, default_value_t = 1e-4)]
    pub alpha_min: f64,
    #[arg(long, default_value_t = 1e2)]
    pub alpha_max: f64,
    #[arg(long, default_value_t = 50)]
    pub alpha_count: usize,

    #[arg(long, default_value_t = 0.1)]
    pub tau_min: f64,
    #[arg(long, default_value_t = 10.0)]
    pub tau_max: f64,
    #[arg(long, default_value_t = 50)]
    pub tau_count: usize,

    /// Take every n-th grid point as a shift candidate
    #[arg(long, default_value_t = 4)]
    pub shift_stride: usize,

    /// Re-search a finer local box around the coarse minimizer
    #[arg(long, default_value_t = false)]
    pub refine: bool,

    /// Write the five-column summary as JSON
    #[arg(long)]
    pub out: Option<PathBuf>,

    /// Write every evaluated (alpha, tau, shift, tv) row as CSV
    #[arg(long)]
    pub report: Option<PathBuf>,

    /// Write the fitted and target densities as plot data (x,f,g)
    #[arg(long)]
    pub overlay: Option<PathBuf>,
}

pub fn run(args: FitArgs) -> Result<()> {
    let filters = CsvFilters {
        min_value: args.min_value,
        max_value: args.max_value,
    };
    let samples = load_grouped_csv(&args.input, &args.value_col, &args.group_col, filters)?;
    if samples.skipped_rows > 0 {
        eprintln!("skipped {} unusable rows", samples.skipped_rows);
    }
    let g1 = samples
        .get(&args.g1)
        .with_context(|| format!("group {:?} not present", args.g1))?
        .to_vec();
    let g2 = samples
        .get(&args.g2)
        .with_context(|| format!("group {:?} not present", args.g2))?
        .to_vec();

    // the observed value set is the domain; the grid covers every sample so
    // train and test histograms live on the same support
    let grid = Grid::discrete(&samples.all_values())?;

    let ((g1_train, _), (g2_train, g2_test)) = if args.no_split {
        ((g1.clone(), Vec::new()), (g2.clone(), Vec::new()))
    } else {
        (
            train_test_split(&g1, args.split, args.seed)?,
            train_test_split(&g2, args.split, args.seed.wrapping_add(1))?,
        )
    };
    let f_d = Density::empirical(&g1_train, &grid)?;
    let target = Density::empirical(&g2_train, &grid)?;
    let test_target = if g2_test.is_empty() {
        None
    } else {
        Some(Density::empirical(&g2_test, &grid)?)
    };

    if args.alpha_count < 2 || args.tau_count < 2 {
        bail!("alpha_count and tau_count must be at least 2");
    }
    let shifts: Vec<f64> = grid
        .points()
        .iter()
        .copied()
        .step_by(args.shift_stride.max(1))
        .collect();
    let space = SearchSpace::defaults_for(&grid)
        .with_alphas(logspace(args.alpha_min, args.alpha_max, args.alpha_count))
        .with_taus(linspace(args.tau_min, args.tau_max, args.tau_count))
        .with_shifts(shifts)
        .with_refine(args.refine)
        .including(Some(1.0), Some(f_d.entropy()));

    let loss = args.loss.family(args.anchor, &f_d);
    let (full, report) =
        fit_optprog_with_report(&f_d, &target, &loss, &space, test_target.as_ref())?;

    let alpha_slice = SearchSpace {
        alpha_values: vec![1.0],
        refine: false,
        ..space.clone()
    };
    let (fit_alpha1, _) =
        fit_optprog_with_report(&f_d, &target, &loss, &alpha_slice, test_target.as_ref())?;
    let tau_slice = SearchSpace {
        tau_values: vec![f_d.entropy()],
        refine: false,
        ..space
    };
    let (fit_tau0, _) =
        fit_optprog_with_report(&f_d, &target, &loss, &tau_slice, test_target.as_ref())?;

    let mult = fit_baseline(
        BaselineModel::Multiplicative,
        &f_d,
        &target,
        &BaselineSearch::defaults_for(BaselineModel::Multiplicative, &grid),
        test_target.as_ref(),
    )?;
    let implicit = fit_baseline(
        BaselineModel::ImplicitVariance,
        &f_d,
        &target,
        &BaselineSearch::defaults_for(BaselineModel::ImplicitVariance, &grid),
        test_target.as_ref(),
    )?;

    let fmt = |tv: f64, test: Option<f64>| match test {
        Some(t) => format!("{tv:.4} (test {t:.4})"),
        None => format!("{tv:.4}"),
    };
    println!("model (vary alpha, tau):  {}", fmt(full.tv_train, full.tv_test));
    println!(
        "model (fix alpha = 1):    {}",
        fmt(fit_alpha1.tv_train, fit_alpha1.tv_test)
    );
    println!(
        "model (fix tau = Ent):    {}",
        fmt(fit_tau0.tv_train, fit_tau0.tv_test)
    );
    println!("multiplicative baseline:  {}", fmt(mult.tv_train, mult.tv_test));
    println!(
        "implicit-variance:        {}",
        fmt(implicit.tv_train, implicit.tv_test)
    );
    println!(
        "best fit: alpha = {:.6e}, tau = {:.6}, shift = {:.6}",
        full.alpha, full.tau, full.shift
    );

    if let Some(path) = &args.out {
        let json = serde_json::json!({
            "model": full.to_json(),
            "model_alpha1": fit_alpha1.to_json(),
            "model_tau_ent": fit_tau0.to_json(),
            "multiplicative": mult.to_json(),
            "implicit_variance": implicit.to_json(),
            "train_sizes": { "g1": g1_train.len(), "g2": g2_train.len() },
            "test_size_g2": g2_test.len(),
        });
        let text = serde_json::to_string_pretty(&json)?;
        write_atomic(path, |out| {
            use std::io::Write;
            writeln!(out, "{text}").map_err(Into::into)
        })?;
        println!("summary written to {}", path.display());
    }
    if let Some(path) = &args.report {
        emit_plot_data(&PlotData::FitReport(&report), path)?;
        println!("audit report written to {}", path.display());
    }
    if let Some(path) = &args.overlay {
        emit_plot_data(
            &PlotData::DensityOverlay {
                f: &full.fitted,
                g: &target,
            },
            path,
        )?;
        println!("density overlay written to {}", path.display());
    }
    Ok(())
}
