//! End-to-end verification checks against analytic oracles and exhaustive
//! searches. The `acceptance` integration test runs every check; the CLI
//! `verify` subcommand runs the fast tier (closed-form oracles) or the full
//! tier (adds the fitting, network, and selection oracles).
//!
//! Every tolerance is pinned here next to the check that uses it.

use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::closed_form::{analytic_alpha1, beta_for_entropy, implicit_variance_instance, pareto_limit_density};
use crate::energy::energy_table;
use crate::family::FamilyParams;
use crate::fit::{
    fit_baseline, fit_optprog_with_report, BaselineModel, BaselineSearch, SearchSpace,
    TV_TIE_TOLERANCE,
};
use crate::gibbs::{gibbs_density, point_utility_mean, solve, solve_point_utility};
use crate::grid::{Density, Grid};
use crate::loss::{LossFamily, LossSpec};
use crate::netgen::{generate_biased_ba, NetworkGenConfig};
use crate::selection::{
    constrained_topk, run_selection, Group, SelectionConfig, SelectionRule,
};

/// TV tolerance for solver output against a discretized analytic density on a
/// smooth (Gaussian / exponential / Laplace) default grid.
pub const SMOOTH_ORACLE_TV: f64 = 1e-3;

/// TV tolerance for the heavy-tailed Pareto oracles; the pdf-sampled left edge
/// converges only linearly in the cell width, so the tolerance is looser and
/// the check grids finer than the smooth-family defaults.
pub const PARETO_ORACLE_TV: f64 = 5e-3;

/// Tolerance on scalar identities derived from the solution (entropy,
/// partition function, and objective related through the temperature).
pub const IDENTITY_TOLERANCE: f64 = 1e-8;

/// Entropy residual every solve must achieve.
pub const SOLVED_ENTROPY_TOLERANCE: f64 = 1e-10;

/// Relative slack on the dispersion lower bounds, covering discretization.
pub const BOUND_SLACK: f64 = 1e-3;

/// Absolute tolerance on the single-individual mean formula.
pub const POINT_MEAN_TOLERANCE: f64 = 1e-3;

/// One verification check.
pub struct Check {
    pub name: &'static str,
    pub run: fn() -> Result<String, String>,
}

/// Closed-form and identity checks; each runs in at most a few seconds.
pub fn fast_checks() -> Vec<Check> {
    vec![
        Check {
            name: "gaussian closed form",
            run: gaussian_closed_form,
        },
        Check {
            name: "pareto closed form",
            run: pareto_closed_form,
        },
        Check {
            name: "exponential and laplace closed forms",
            run: exponential_laplace_closed_forms,
        },
        Check {
            name: "recovery loss returns the input density",
            run: recovery_loss,
        },
        Check {
            name: "gibbs identity",
            run: gibbs_identity,
        },
        Check {
            name: "single-individual mean",
            run: single_individual_mean,
        },
        Check {
            name: "monotonicity suite",
            run: monotonicity_suite,
        },
        Check {
            name: "dispersion lower bounds",
            run: dispersion_lower_bounds,
        },
        Check {
            name: "implicit-variance targets",
            run: implicit_variance_targets,
        },
        Check {
            name: "pareto limit density",
            run: pareto_limit,
        },
    ]
}

/// Fast checks plus the fitting, synthetic-network, and selection oracles.
pub fn full_checks() -> Vec<Check> {
    let mut checks = fast_checks();
    checks.push(Check {
        name: "fitting oracle",
        run: fitting_oracle,
    });
    checks.push(Check {
        name: "synthetic network pipeline",
        run: synthetic_network_pipeline,
    });
    checks.push(Check {
        name: "selection oracle",
        run: selection_oracle,
    });
    checks
}

fn fail(msg: String) -> Result<String, String> {
    Err(msg)
}

/// Gaussian input, squared loss, `alpha = 1`: the solution at
/// `tau = (1 + ln 2 pi) / 2` is the standard normal again, with variance
/// `e^(2 tau - 1) / (2 pi)`; a single solve finishes within a second.
pub fn gaussian_closed_form() -> Result<String, String> {
    let fam = FamilyParams::gaussian(0.0, 1.0).unwrap();
    let grid = fam.default_grid();
    let f_d = fam.discretize(&grid).map_err(|e| e.to_string())?;
    let tau = 0.5 * (1.0 + (2.0 * std::f64::consts::PI).ln());

    let started = Instant::now();
    let spec = LossSpec::unshifted(LossFamily::Squared, 1.0).unwrap();
    let energy = energy_table(&spec, &f_d, &grid).map_err(|e| e.to_string())?;
    let sol = solve(&energy, tau).map_err(|e| e.to_string())?;
    let elapsed = started.elapsed();

    let tv = sol.density.tv_distance(&f_d).map_err(|e| e.to_string())?;
    if tv > SMOOTH_ORACLE_TV {
        return fail(format!("tv {tv:.2e} > {SMOOTH_ORACLE_TV:.0e}"));
    }
    let variance = sol.density.moments().variance;
    let expect = (2.0 * tau - 1.0).exp() / (2.0 * std::f64::consts::PI);
    if (variance - expect).abs() > 1e-3 {
        return fail(format!("variance {variance} vs {expect}"));
    }
    if elapsed.as_secs_f64() >= 1.0 {
        return fail(format!("solve took {elapsed:.2?} (budget 1 s)"));
    }
    Ok(format!(
        "tv {tv:.1e}, variance {variance:.6}, {elapsed:.2?}"
    ))
}

/// Pareto input, log-ratio loss, `alpha = 1`: for entropy targets mapping to
/// tail parameters 1.5, 2, and 3, the solution is that Pareto density.
pub fn pareto_closed_form() -> Result<String, String> {
    let fam = FamilyParams::pareto(3.0).unwrap();
    let grid = Grid::continuum(1.0, 100.0, 12_001).unwrap();
    let f_d = fam.discretize(&grid).map_err(|e| e.to_string())?;
    let spec = LossSpec::unshifted(LossFamily::LogRatio, 1.0).unwrap();
    let energy = energy_table(&spec, &f_d, &grid).map_err(|e| e.to_string())?;
    let mut detail = Vec::new();
    for beta_t in [1.5f64, 2.0, 3.0] {
        let tau = 1.0 + 1.0 / beta_t - beta_t.ln();
        let sol = solve(&energy, tau).map_err(|e| e.to_string())?;
        let target = FamilyParams::pareto(beta_t)
            .unwrap()
            .discretize(&grid)
            .map_err(|e| e.to_string())?;
        let tv = sol.density.tv_distance(&target).map_err(|e| e.to_string())?;
        if tv > PARETO_ORACLE_TV {
            return fail(format!(
                "beta_tau {beta_t}: tv {tv:.2e} > {PARETO_ORACLE_TV:.0e}"
            ));
        }
        let recovered = beta_for_entropy(tau).map_err(|e| e.to_string())?;
        if (recovered - beta_t).abs() > 1e-8 {
            return fail(format!("entropy inversion {recovered} vs {beta_t}"));
        }
        detail.push(format!("b={beta_t}: tv {tv:.1e}"));
    }
    Ok(detail.join(", "))
}

/// Exponential (linear loss) and Laplace (absolute-deviation loss) inputs at
/// `alpha = 1` match their analytic solutions at three entropy targets each.
pub fn exponential_laplace_closed_forms() -> Result<String, String> {
    let cases: Vec<(FamilyParams, LossFamily, [f64; 3])> = vec![
        (
            FamilyParams::exponential(1.0).unwrap(),
            LossFamily::Linear,
            [0.6, 1.0, 1.4],
        ),
        (
            FamilyParams::laplace(0.0, 1.0).unwrap(),
            LossFamily::AbsDeviation { anchor: 0.0 },
            [1.3, 1.0 + std::f64::consts::LN_2, 2.1],
        ),
    ];
    let mut worst = 0.0f64;
    for (fam, loss, taus) in cases {
        let grid = fam.default_grid();
        let f_d = fam.discretize(&grid).map_err(|e| e.to_string())?;
        let spec = LossSpec::unshifted(loss, 1.0).unwrap();
        let energy = energy_table(&spec, &f_d, &grid).map_err(|e| e.to_string())?;
        for tau in taus {
            let sol = solve(&energy, tau).map_err(|e| e.to_string())?;
            let analytic = analytic_alpha1(&fam, tau).map_err(|e| e.to_string())?;
            let target = analytic
                .family
                .discretize(&grid)
                .map_err(|e| e.to_string())?;
            let tv = sol.density.tv_distance(&target).map_err(|e| e.to_string())?;
            if tv > SMOOTH_ORACLE_TV {
                return fail(format!("{fam:?} tau={tau}: tv {tv:.2e}"));
            }
            worst = worst.max(tv);
        }
    }
    Ok(format!("worst tv {worst:.1e}"))
}

/// The loss `ln f(v) - ln f(x)` at `alpha = 1`, `tau = Ent(f)` returns the
/// input density itself, for Gaussian and Pareto inputs.
pub fn recovery_loss() -> Result<String, String> {
    let families = [
        FamilyParams::gaussian(0.0, 1.0).unwrap(),
        FamilyParams::pareto(3.0).unwrap(),
    ];
    let mut detail = Vec::new();
    for fam in families {
        let grid = fam.default_grid();
        let f_d = fam.discretize(&grid).map_err(|e| e.to_string())?;
        let tau = f_d.entropy();
        let spec = LossSpec::unshifted(
            LossFamily::NegLogDensity {
                reference: f_d.clone(),
            },
            1.0,
        )
        .unwrap();
        let energy = energy_table(&spec, &f_d, &grid).map_err(|e| e.to_string())?;
        let sol = solve(&energy, tau).map_err(|e| e.to_string())?;
        let tv = sol.density.tv_distance(&f_d).map_err(|e| e.to_string())?;
        if tv > SMOOTH_ORACLE_TV {
            return fail(format!("{fam:?}: tv {tv:.2e}"));
        }
        detail.push(format!("{}: tv {tv:.1e}", family_tag(&fam)));
    }
    Ok(detail.join(", "))
}

fn family_tag(fam: &FamilyParams) -> &'static str {
    match fam {
        FamilyParams::Gaussian { .. } => "gaussian",
        FamilyParams::Pareto { .. } => "pareto",
        FamilyParams::Exponential { .. } => "exponential",
        FamilyParams::Laplace { .. } => "laplace",
    }
}

/// `tau = err / gamma* + ln Z*` on random instances spanning risk parameters
/// from 1e-3 to 10 and entropy targets across the feasible range.
pub fn gibbs_identity() -> Result<String, String> {
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let grid = Grid::continuum(-5.0, 5.0, 201).unwrap();
    let mut worst = 0.0f64;
    for case in 0..20 {
        let raw: Vec<f64> = (0..grid.len()).map(|_| rng.gen::<f64>() + 1e-3).collect();
        let f_d = Density::normalize(&raw, &grid).unwrap();
        let alpha = 10f64.powf(rng.gen::<f64>() * 4.0 - 3.0); // [1e-3, 10]
        let spec = LossSpec::unshifted(LossFamily::Squared, alpha).unwrap();
        let energy = energy_table(&spec, &f_d, &grid).map_err(|e| e.to_string())?;
        let tau = -1.5 + rng.gen::<f64>() * 3.5; // inside (ln 0.05, ln 10.05)
        let sol = solve(&energy, tau).map_err(|e| e.to_string())?;
        let residual =
            (sol.achieved_entropy - sol.err / sol.gamma_star - sol.log_partition).abs();
        if residual > IDENTITY_TOLERANCE {
            return fail(format!(
                "case {case} (alpha {alpha:.3e}, tau {tau:.3}): residual {residual:.2e}"
            ));
        }
        worst = worst.max(residual);
    }
    Ok(format!("worst residual {worst:.1e} over 20 instances"))
}

/// Point-utility solutions: the mean equals
/// `v - sqrt(gamma*/pi) (sqrt(a)-1)/sqrt(a)` for `a` in {1, 4, 9}.
pub fn single_individual_mean() -> Result<String, String> {
    let grid = Grid::continuum(-12.0, 12.0, 4001).unwrap();
    let mut detail = Vec::new();
    for alpha in [1.0, 4.0, 9.0] {
        let sol = solve_point_utility(0.0, alpha, 1.0, &grid).map_err(|e| e.to_string())?;
        let mean = sol.density.moments().mean;
        let predicted = point_utility_mean(0.0, alpha, sol.gamma_star);
        if (mean - predicted).abs() > POINT_MEAN_TOLERANCE {
            return fail(format!("alpha {alpha}: mean {mean} vs {predicted}"));
        }
        if alpha > 1.0 && mean >= 0.0 {
            return fail(format!("alpha {alpha}: mean {mean} not below the true value"));
        }
        detail.push(format!("a={alpha}: mean {mean:.4}"));
    }
    Ok(detail.join(", "))
}

/// Energy and objective are nondecreasing in the risk parameter, solved
/// entropy always hits the target, and entropy is strictly increasing in the
/// temperature on every tested energy.
pub fn monotonicity_suite() -> Result<String, String> {
    let fam = FamilyParams::gaussian(0.0, 1.0).unwrap();
    let grid = fam.default_grid();
    let alphas = [0.5, 1.0, 2.0, 4.0, 8.0];
    let tau = 1.0;

    let mut prev_energy: Option<Vec<f64>> = None;
    let mut prev_err = f64::NEG_INFINITY;
    let mut solves = 0usize;
    for &alpha in &alphas {
        let energy = fam
            .closed_energy_table(alpha, &grid)
            .map_err(|e| e.to_string())?;
        if let Some(prev) = &prev_energy {
            for (i, (lo, hi)) in prev.iter().zip(energy.values()).enumerate() {
                if hi < lo {
                    return fail(format!(
                        "energy not monotone in alpha at x = {} (alpha {alpha})",
                        grid.points()[i]
                    ));
                }
            }
        }
        prev_energy = Some(energy.values().to_vec());

        // entropy strictly increasing over 20 log-spaced temperatures
        let mut prev_h = f64::NEG_INFINITY;
        for i in 0..20 {
            let gamma = 10f64.powf(-4.0 + 8.0 * i as f64 / 19.0);
            let h = gibbs_density(&energy, gamma)
                .map_err(|e| e.to_string())?
                .entropy();
            if h <= prev_h {
                return fail(format!("entropy not increasing at gamma {gamma:.2e}"));
            }
            prev_h = h;
        }

        if alpha >= 1.0 {
            let sol = solve(&energy, tau).map_err(|e| e.to_string())?;
            if (sol.achieved_entropy - tau).abs() > SOLVED_ENTROPY_TOLERANCE {
                return fail(format!(
                    "entropy residual {:.2e} at alpha {alpha}",
                    (sol.achieved_entropy - tau).abs()
                ));
            }
            solves += 1;
            if sol.err < prev_err - 1e-9 {
                return fail(format!("objective decreased at alpha {alpha}"));
            }
            prev_err = sol.err.max(prev_err);
        }
    }
    Ok(format!(
        "{} alphas, {} solves, all residuals <= {SOLVED_ENTROPY_TOLERANCE:.0e}",
        alphas.len(),
        solves
    ))
}

/// Entropy forces dispersion: variance at least `e^(2 tau - 1) / (2 pi)` on
/// the real line, mean at least `e^(tau - 1)` on the half line.
pub fn dispersion_lower_bounds() -> Result<String, String> {
    // real-line instances: Gaussian input under the squared loss
    let fam = FamilyParams::gaussian(0.0, 1.0).unwrap();
    let grid = fam.default_grid();
    for alpha in [1.0, 2.0, 4.0] {
        let energy = fam
            .closed_energy_table(alpha, &grid)
            .map_err(|e| e.to_string())?;
        for i in 0..10 {
            let tau = -0.5 + 2.5 * i as f64 / 9.0;
            let sol = solve(&energy, tau).map_err(|e| e.to_string())?;
            let bound = (2.0 * tau - 1.0).exp() / (2.0 * std::f64::consts::PI);
            let variance = sol.density.moments().variance;
            if variance < bound * (1.0 - BOUND_SLACK) {
                return fail(format!(
                    "variance {variance:.6} below bound {bound:.6} at alpha {alpha}, tau {tau:.3}"
                ));
            }
        }
    }

    // half-line instances: exponential input under the linear loss. The fine
    // grid keeps the pdf-sampled edge deficit of the mean below the slack.
    let fam = FamilyParams::exponential(1.0).unwrap();
    let grid = Grid::continuum(0.0, 40.0, 100_001).unwrap();
    for alpha in [1.0, 1.5] {
        let energy = fam
            .closed_energy_table(alpha, &grid)
            .map_err(|e| e.to_string())?;
        for i in 0..10 {
            let tau = 0.3 + 1.8 * i as f64 / 9.0;
            let sol = solve(&energy, tau).map_err(|e| e.to_string())?;
            let bound = (tau - 1.0).exp();
            let mean = sol.density.moments().mean;
            if mean < bound * (1.0 - BOUND_SLACK) {
                return fail(format!(
                    "mean {mean:.6} below bound {bound:.6} at alpha {alpha}, tau {tau:.3}"
                ));
            }
        }
    }
    Ok("variance and mean bounds hold over both sweeps".into())
}

/// Solving at the paired entropy target reproduces the additive-noise model:
/// the output is Gaussian with the summed variance.
pub fn implicit_variance_targets() -> Result<String, String> {
    let mut detail = Vec::new();
    for (sigma0, sigma) in [(1.0, 1.0), (2.0, 1.0)] {
        let (_, tau2) = implicit_variance_instance(0.0, sigma0, sigma).map_err(|e| e.to_string())?;
        let fam = FamilyParams::gaussian(0.0, sigma0).unwrap();
        let grid = fam.default_grid();
        let f_d = fam.discretize(&grid).map_err(|e| e.to_string())?;
        let spec = LossSpec::unshifted(LossFamily::Squared, 1.0).unwrap();
        let energy = energy_table(&spec, &f_d, &grid).map_err(|e| e.to_string())?;
        let sol = solve(&energy, tau2).map_err(|e| e.to_string())?;
        let var_target = sigma0 * sigma0 + sigma * sigma;
        let target = FamilyParams::gaussian(0.0, var_target.sqrt())
            .unwrap()
            .discretize(&grid)
            .map_err(|e| e.to_string())?;
        let tv = sol.density.tv_distance(&target).map_err(|e| e.to_string())?;
        if tv > SMOOTH_ORACLE_TV {
            return fail(format!("(sigma0, sigma) = ({sigma0}, {sigma}): tv {tv:.2e}"));
        }
        let variance = sol.density.moments().variance;
        if (variance - var_target).abs() > 1e-3 {
            return fail(format!(
                "(sigma0, sigma) = ({sigma0}, {sigma}): variance {variance} vs {var_target}"
            ));
        }
        detail.push(format!("({sigma0},{sigma}): tv {tv:.1e}"));
    }
    Ok(detail.join(", "))
}

/// The large-risk limiting density for Pareto inputs: entropy matches the
/// target by construction and the mean stays below the input's.
pub fn pareto_limit() -> Result<String, String> {
    let mut detail = Vec::new();
    for beta in [1.5f64, 2.0, 3.0] {
        let tau = 1.0 + 1.0 / beta - beta.ln();
        let hi = (1e6f64).powf(1.0 / beta);
        let grid = Grid::continuum(1.0, hi, 200_001).unwrap();
        let g = pareto_limit_density(beta, tau, &grid).map_err(|e| e.to_string())?;
        let entropy_err = (g.entropy() - tau).abs();
        if entropy_err > IDENTITY_TOLERANCE {
            return fail(format!("beta {beta}: entropy residual {entropy_err:.2e}"));
        }
        let mean = g.moments().mean;
        let input_mean = beta / (beta - 1.0);
        if mean >= input_mean || mean.is_nan() {
            return fail(format!("beta {beta}: mean {mean} not below {input_mean}"));
        }
        detail.push(format!("b={beta}: mean {mean:.3} < {input_mean:.3}"));
    }
    Ok(detail.join(", "))
}

/// Search-space recovery: fitting a wider Gaussian against a standard normal
/// input lands on the known risk and entropy parameters; the full search is
/// never beaten by its restricted slices; a brute-force re-scan of the audit
/// report confirms the minimizer. The whole check must finish within five
/// minutes.
pub fn fitting_oracle() -> Result<String, String> {
    let started = Instant::now();
    let grid = Grid::continuum(-10.0, 10.0, 201).unwrap();
    let f_d = FamilyParams::gaussian(0.0, 1.0)
        .unwrap()
        .discretize(&grid)
        .map_err(|e| e.to_string())?;
    let target = FamilyParams::gaussian(0.0, 2f64.sqrt())
        .unwrap()
        .discretize(&grid)
        .map_err(|e| e.to_string())?;

    let space = SearchSpace::defaults_for(&grid).including(Some(1.0), Some(f_d.entropy()));
    let (fit, report) =
        fit_optprog_with_report(&f_d, &target, &LossFamily::Squared, &space, None)
            .map_err(|e| e.to_string())?;

    let alpha_step = (1e2f64 / 1e-4).powf(1.0 / 49.0);
    if !(fit.alpha >= 1.0 / alpha_step - 1e-12 && fit.alpha <= alpha_step + 1e-12) {
        return fail(format!("alpha {} outside one grid step of 1", fit.alpha));
    }
    let tau_star = 0.5 * (1.0 + (4.0 * std::f64::consts::PI).ln());
    let tau_step = (10.0 - 0.1) / 49.0;
    if (fit.tau - tau_star).abs() > tau_step + 1e-12 {
        return fail(format!(
            "tau {} outside one grid step of {tau_star:.4}",
            fit.tau
        ));
    }

    // brute-force re-scan of every evaluated triple
    let min = report
        .rows
        .iter()
        .map(|r| r.tv)
        .fold(f64::INFINITY, f64::min);
    if fit.tv_train > min + TV_TIE_TOLERANCE {
        return fail(format!("returned tv {} vs re-scanned min {min}", fit.tv_train));
    }

    // restricted slices are subsets of the full space and cannot win
    let alpha_slice = SearchSpace {
        alpha_values: vec![1.0],
        ..space.clone()
    };
    let (fit_alpha, _) =
        fit_optprog_with_report(&f_d, &target, &LossFamily::Squared, &alpha_slice, None)
            .map_err(|e| e.to_string())?;
    let tau_slice = SearchSpace {
        tau_values: vec![f_d.entropy()],
        ..space
    };
    let (fit_tau, _) =
        fit_optprog_with_report(&f_d, &target, &LossFamily::Squared, &tau_slice, None)
            .map_err(|e| e.to_string())?;
    if fit.tv_train > fit_alpha.tv_train + TV_TIE_TOLERANCE
        || fit.tv_train > fit_tau.tv_train + TV_TIE_TOLERANCE
    {
        return fail(format!(
            "full search {} beaten by a slice ({} / {})",
            fit.tv_train, fit_alpha.tv_train, fit_tau.tv_train
        ));
    }

    let elapsed = started.elapsed();
    if elapsed.as_secs_f64() >= 300.0 {
        return fail(format!("fitting took {elapsed:.1?} (budget 5 min)"));
    }
    Ok(format!(
        "alpha {:.4}, tau {:.4}, tv {:.4} (alpha-slice {:.4}, tau-slice {:.4}), {elapsed:.1?}",
        fit.alpha, fit.tau, fit.tv_train, fit_alpha.tv_train, fit_tau.tv_train
    ))
}

/// Generate biased networks over five seeds, fit all five model columns on
/// the group degree densities, and require the median TV of the full model to
/// beat both baselines. Distances to the reference medians
/// (0.03 / 0.05 / 0.22) are reported but not gated.
pub fn synthetic_network_pipeline() -> Result<String, String> {
    let mut ours = Vec::new();
    let mut mult = Vec::new();
    let mut implicit = Vec::new();
    for seed in 0..5u64 {
        let records = generate_biased_ba(&NetworkGenConfig {
            seed,
            ..Default::default()
        })
        .map_err(|e| e.to_string())?;
        let degrees = |g: Group| -> Vec<f64> {
            records
                .iter()
                .filter(|r| r.group == g)
                .map(|r| r.degree as f64)
                .collect()
        };
        let g1 = degrees(Group::Advantaged);
        let g2 = degrees(Group::Disadvantaged);
        let max_degree = records.iter().map(|r| r.degree).max().unwrap();
        let grid = Grid::discrete(&(1..=max_degree).map(|d| d as f64).collect::<Vec<_>>())
            .map_err(|e| e.to_string())?;
        let f_d = Density::empirical(&g1, &grid).map_err(|e| e.to_string())?;
        let target = Density::empirical(&g2, &grid).map_err(|e| e.to_string())?;

        let space = SearchSpace::defaults_for(&grid).including(Some(1.0), Some(f_d.entropy()));
        let (fit, _) = fit_optprog_with_report(&f_d, &target, &LossFamily::LogRatio, &space, None)
            .map_err(|e| e.to_string())?;
        ours.push(fit.tv_train);

        let search = BaselineSearch::defaults_for(BaselineModel::Multiplicative, &grid);
        let bm = fit_baseline(BaselineModel::Multiplicative, &f_d, &target, &search, None)
            .map_err(|e| e.to_string())?;
        mult.push(bm.tv_train);

        let search = BaselineSearch::defaults_for(BaselineModel::ImplicitVariance, &grid);
        let bi = fit_baseline(BaselineModel::ImplicitVariance, &f_d, &target, &search, None)
            .map_err(|e| e.to_string())?;
        implicit.push(bi.tv_train);
    }
    let med = |v: &mut Vec<f64>| -> f64 {
        v.sort_by(|a, b| a.total_cmp(b));
        v[v.len() / 2]
    };
    let (m_ours, m_mult, m_impl) = (med(&mut ours), med(&mut mult), med(&mut implicit));
    if m_ours > m_mult || m_ours > m_impl {
        return fail(format!(
            "median ordering violated: ours {m_ours:.4}, multiplicative {m_mult:.4}, implicit {m_impl:.4}"
        ));
    }
    // reference medians reported, not gated
    Ok(format!(
        "medians: ours {m_ours:.3}, multiplicative {m_mult:.3}, implicit {m_impl:.3} \
         (reference 0.030 / 0.050 / 0.220; deltas {:+.3} / {:+.3} / {:+.3})",
        m_ours - 0.03,
        m_mult - 0.05,
        m_impl - 0.22
    ))
}

/// Constrained selection equals exhaustive subset search on every instance up
/// to 12 candidates; unbiased runs give unit ratios; the two-group toy
/// instance under equal representation gives ratio 1.375 exactly.
pub fn selection_oracle() -> Result<String, String> {
    let mut rng = ChaCha8Rng::seed_from_u64(31);
    let mut compared = 0usize;
    for n in 2..=12usize {
        for _ in 0..3 {
            let estimates: Vec<f64> = (0..n).map(|_| rng.gen::<f64>() * 10.0).collect();
            let groups: Vec<Group> = (0..n)
                .map(|_| {
                    if rng.gen::<bool>() {
                        Group::Advantaged
                    } else {
                        Group::Disadvantaged
                    }
                })
                .collect();
            let n2 = groups
                .iter()
                .filter(|g| **g == Group::Disadvantaged)
                .count();
            for k in 1..=n {
                for rule in [
                    SelectionRule::None,
                    SelectionRule::EqualRepresentation,
                    SelectionRule::ProportionalRepresentation,
                    SelectionRule::Quota(n2.min(k)),
                    SelectionRule::Quota(n2.min(k) / 2),
                ] {
                    let got = constrained_topk(&estimates, &groups, k, rule);
                    let want = exhaustive_best(&estimates, &groups, k, rule);
                    match (got, want) {
                        (Ok(picked), Some(best)) => {
                            let util: f64 = picked.iter().map(|&i| estimates[i]).sum();
                            if (util - best).abs() > 1e-9 {
                                return fail(format!(
                                    "n={n} k={k} {rule:?}: greedy {util} vs exhaustive {best}"
                                ));
                            }
                            compared += 1;
                        }
                        (Err(_), None) => {}
                        (Ok(_), None) => {
                            return fail(format!("n={n} k={k} {rule:?}: oracle says infeasible"))
                        }
                        (Err(e), Some(_)) => {
                            return fail(format!("n={n} k={k} {rule:?}: unexpected error {e}"))
                        }
                    }
                }
            }
        }
    }

    // unbiased configuration: every intervention within twice its standard
    // error of 1 (few score levels, so constraints resolve inside tied levels)
    let grid = Grid::discrete(&[1.0, 2.0, 3.0]).unwrap();
    let f_d = Density::uniform(&grid);
    let outcome = run_selection(&SelectionConfig {
        n1: 100,
        n2: 100,
        k: 100,
        f_d: f_d.clone(),
        biased: f_d.clone(),
        alpha_int: f_d.clone(),
        tau_int: f_d,
        quota: Some(30),
        repetitions: 100,
        seed: 7,
    })
    .map_err(|e| e.to_string())?;
    for stat in &outcome.stats {
        if (stat.mean_ratio - 1.0).abs() > 2.0 * stat.sem.max(1e-12) {
            return fail(format!(
                "unbiased {} ratio {} (sem {})",
                stat.intervention, stat.mean_ratio, stat.sem
            ));
        }
    }

    // fixed-input toy instance
    let estimates = [3.0, 1.0, 0.5];
    let truth = [3.0, 1.0, 2.5];
    let groups = [Group::Advantaged, Group::Advantaged, Group::Disadvantaged];
    let er = constrained_topk(&estimates, &groups, 2, SelectionRule::EqualRepresentation)
        .map_err(|e| e.to_string())?;
    let none = constrained_topk(&estimates, &groups, 2, SelectionRule::None)
        .map_err(|e| e.to_string())?;
    let ratio: f64 = er.iter().map(|&i| truth[i]).sum::<f64>()
        / none.iter().map(|&i| truth[i]).sum::<f64>();
    if ratio != 1.375 {
        return fail(format!("toy ratio {ratio} != 1.375"));
    }
    Ok(format!(
        "{compared} exhaustive comparisons, unbiased ratios within 2 sem, toy ratio 1.375"
    ))
}

fn exhaustive_best(
    estimates: &[f64],
    groups: &[Group],
    k: usize,
    rule: SelectionRule,
) -> Option<f64> {
    let n = estimates.len();
    if k > n {
        return None;
    }
    let n2 = groups
        .iter()
        .filter(|g| **g == Group::Disadvantaged)
        .count();
    let n1 = n - n2;
    let mut best: Option<f64> = None;
    for mask in 0u32..(1 << n) {
        if mask.count_ones() as usize != k {
            continue;
        }
        let chosen: Vec<usize> = (0..n).filter(|i| mask >> i & 1 == 1).collect();
        let c2 = chosen
            .iter()
            .filter(|&&i| groups[i] == Group::Disadvantaged)
            .count();
        let c1 = k - c2;
        let feasible = match rule {
            SelectionRule::None => true,
            SelectionRule::EqualRepresentation => c1 >= k / 2 && c2 >= k / 2,
            SelectionRule::ProportionalRepresentation => c1 >= k * n1 / n && c2 >= k * n2 / n,
            SelectionRule::Quota(q) => c2 >= q,
        };
        if !feasible {
            continue;
        }
        let util: f64 = chosen.iter().map(|&i| estimates[i]).sum();
        best = Some(best.map_or(util, |b: f64| b.max(util)));
    }
    best
}
