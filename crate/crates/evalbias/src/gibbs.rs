//! The entropy-constrained solver: given an energy table and a target entropy
//! `tau`, find the Gibbs density `f*(x) ∝ exp(-I(x)/gamma*)` whose entropy
//! equals `tau`. Entropy is strictly increasing in the temperature, so the
//! unique `gamma*` is found by geometric bracketing plus bisection.

use crate::energy::{energy_table, EnergyTable};
use crate::error::{Error, Result};
use crate::grid::{Density, Grid};
use crate::loss::{LossFamily, LossSpec};
use crate::math::log_sum_exp;

/// Entropy residual at which the temperature bisection stops.
pub const ENTROPY_TOLERANCE: f64 = 1e-10;

/// Margin below the maximum (and above the minimum) attainable entropy that a
/// target must respect to count as feasible.
pub const FEASIBILITY_MARGIN: f64 = 1e-9;

const BRACKET_LO: f64 = 1e-8;
const BRACKET_HI: f64 = 1e8;
const MAX_BRACKET_DOUBLINGS: usize = 120;
const MAX_BISECT_ITERS: usize = 200;

/// Solution of the entropy-constrained program.
#[derive(Debug, Clone)]
pub struct GibbsSolution {
    /// The optimal output density `f*`.
    pub density: Density,
    /// Temperature: the positive dual variable of the entropy constraint.
    pub gamma_star: f64,
    /// `ln Z*`, the log of the partition function.
    pub log_partition: f64,
    /// Achieved objective `sum_i I(x_i) p*_i`.
    pub err: f64,
    /// Entropy of `density`; equals the requested `tau` within
    /// [`ENTROPY_TOLERANCE`] except in the degenerate constant-energy case.
    pub achieved_entropy: f64,
    /// Dual variable of the normalization constraint, `gamma* (ln Z* - 1)`.
    pub phi_star: f64,
    /// True when several grid points tie the minimum energy; uniqueness of the
    /// minimizer is then not guaranteed by the usual assumptions.
    pub degenerate_argmin: bool,
}

impl GibbsSolution {
    /// JSON view: scalars plus the density as inline arrays.
    pub fn to_json(&self) -> serde_json::Value {
        serde_json::json!({
            "gamma_star": self.gamma_star,
            "log_partition": self.log_partition,
            "err": self.err,
            "entropy": self.achieved_entropy,
            "phi_star": self.phi_star,
            "degenerate_argmin": self.degenerate_argmin,
            "density": {
                "x": self.density.grid().points(),
                "weight": self.density.grid().weights(),
                "mass": self.density.masses(),
            },
        })
    }

    /// Largest residual of the stationarity condition
    /// `I(x) + gamma*(1 + ln f*(x)) + phi* = 0` over points with nonvanishing mass.
    pub fn optimality_residual(&self, energy: &EnergyTable) -> f64 {
        let mut worst = 0.0f64;
        for (i, &iv) in energy.values().iter().enumerate() {
            let f = self.density.value_at(i);
            if f <= 1e-300 {
                continue;
            }
            let r = iv + self.gamma_star * (1.0 + f.ln()) + self.phi_star;
            worst = worst.max(r.abs());
        }
        worst
    }
}

/// A full problem instance: true density, loss, and target entropy.
///
/// The energy is evaluated on `eval_grid` when given, else on the grid of `f_d`.
#[derive(Debug, Clone)]
pub struct InstanceSpec {
    pub f_d: Density,
    pub loss: LossSpec,
    pub tau: f64,
    pub eval_grid: Option<Grid>,
}

/// The Gibbs density of an energy at a fixed temperature:
/// `p_i ∝ w_i exp(-(I_i - min I)/gamma)`, computed in the log domain.
pub fn gibbs_density(energy: &EnergyTable, gamma: f64) -> Result<Density> {
    if gamma <= 0.0 || !gamma.is_finite() {
        return Err(Error::NonPositiveGamma(gamma));
    }
    let grid = energy.grid();
    let min = energy.min_value();
    let scores: Vec<f64> = energy
        .values()
        .iter()
        .zip(grid.weights())
        .map(|(&iv, &w)| w.ln() - (iv - min) / gamma)
        .collect();
    let lse = log_sum_exp(&scores);
    let masses: Vec<f64> = scores.iter().map(|&s| (s - lse).exp()).collect();
    Density::normalize(&masses, grid)
}

fn entropy_at(energy: &EnergyTable, gamma: f64) -> f64 {
    gibbs_density(energy, gamma)
        .expect("gamma is validated positive")
        .entropy()
}

/// Solve for the temperature at which the Gibbs density has entropy `tau`.
pub fn solve(energy: &EnergyTable, tau: f64) -> Result<GibbsSolution> {
    let grid = energy.grid();
    let h_max = grid.max_entropy();
    let ties = energy.argmin_ties();
    let degenerate_argmin = ties.len() > 1;

    // Entropy floor: as gamma -> 0 all mass collapses onto the tied minima,
    // split in proportion to their reference weights.
    let tied_weight: f64 = ties.iter().map(|&i| grid.weights()[i]).sum();
    let h_min = tied_weight.ln();

    let range = energy.values()[max_index(energy)] - energy.min_value();
    if range <= 1e-12 {
        // Constant energy: every density attains the same objective and the
        // Gibbs family collapses to the uniform density at every temperature.
        // The entropy constraint is slack, so return the uniform solution.
        if tau >= h_max - FEASIBILITY_MARGIN {
            return Err(Error::InfeasibleTau {
                tau,
                h_min,
                h_max,
            });
        }
        return Ok(finish(energy, 1.0, degenerate_argmin));
    }

    if tau.is_nan() || tau <= h_min + FEASIBILITY_MARGIN || tau >= h_max - FEASIBILITY_MARGIN {
        return Err(Error::InfeasibleTau { tau, h_min, h_max });
    }

    // Geometric bracket expansion.
    let mut lo = BRACKET_LO;
    let mut hi = BRACKET_HI;
    let mut n = 0;
    while entropy_at(energy, lo) > tau {
        lo /= 2.0;
        n += 1;
        if n > MAX_BRACKET_DOUBLINGS {
            return Err(Error::BracketNotFound(MAX_BRACKET_DOUBLINGS));
        }
    }
    n = 0;
    while entropy_at(energy, hi) < tau {
        hi *= 2.0;
        n += 1;
        if n > MAX_BRACKET_DOUBLINGS {
            return Err(Error::BracketNotFound(MAX_BRACKET_DOUBLINGS));
        }
    }

    // Bisection at the geometric midpoint; entropy is strictly increasing in gamma.
    let mut gamma = (lo * hi).sqrt();
    for _ in 0..MAX_BISECT_ITERS {
        gamma = (lo * hi).sqrt();
        let h = entropy_at(energy, gamma);
        if (h - tau).abs() <= ENTROPY_TOLERANCE {
            break;
        }
        if h < tau {
            lo = gamma;
        } else {
            hi = gamma;
        }
    }
    Ok(finish(energy, gamma, degenerate_argmin))
}

fn max_index(energy: &EnergyTable) -> usize {
    let mut m = 0;
    for (i, v) in energy.values().iter().enumerate() {
        if *v > energy.values()[m] {
            m = i;
        }
    }
    m
}

fn finish(energy: &EnergyTable, gamma: f64, degenerate_argmin: bool) -> GibbsSolution {
    let grid = energy.grid();
    let min = energy.min_value();
    let density = gibbs_density(energy, gamma).expect("gamma positive");
    let err: f64 = energy
        .values()
        .iter()
        .zip(density.masses())
        .map(|(&iv, &p)| iv * p)
        .sum();
    let scores: Vec<f64> = energy
        .values()
        .iter()
        .zip(grid.weights())
        .map(|(&iv, &w)| w.ln() - (iv - min) / gamma)
        .collect();
    let log_partition = log_sum_exp(&scores) - min / gamma;
    let achieved_entropy = density.entropy();
    GibbsSolution {
        density,
        gamma_star: gamma,
        log_partition,
        err,
        achieved_entropy,
        phi_star: gamma * (log_partition - 1.0),
        degenerate_argmin,
    }
}

/// Build the energy for an instance and solve it.
pub fn solve_instance(inst: &InstanceSpec) -> Result<GibbsSolution> {
    let eval_grid = inst.eval_grid.as_ref().unwrap_or_else(|| inst.f_d.grid());
    let energy = energy_table(&inst.loss, &inst.f_d, eval_grid)?;
    solve(&energy, inst.tau)
}

/// Solve for a single individual with true utility `v` under the squared loss.
///
/// The energy is the exact two-sided parabola `alpha (x-v)^2` for `x >= v`,
/// `(x-v)^2` below; the mean of the solution is
/// `v - sqrt(gamma*/pi) (sqrt(alpha)-1)/sqrt(alpha)`.
pub fn solve_point_utility(v: f64, alpha: f64, tau: f64, grid: &Grid) -> Result<GibbsSolution> {
    if alpha <= 0.0 || !alpha.is_finite() {
        return Err(Error::InvalidLoss(format!(
            "alpha must be positive and finite, got {alpha}"
        )));
    }
    let values: Vec<f64> = grid
        .points()
        .iter()
        .map(|&x| {
            let d2 = (x - v) * (x - v);
            if x >= v {
                alpha * d2
            } else {
                d2
            }
        })
        .collect();
    let energy = EnergyTable::new(grid.clone(), values)?;
    solve(&energy, tau)
}

/// Mean predicted for [`solve_point_utility`] solutions.
pub fn point_utility_mean(v: f64, alpha: f64, gamma_star: f64) -> f64 {
    v - (gamma_star / std::f64::consts::PI).sqrt() * (alpha.sqrt() - 1.0) / alpha.sqrt()
}

/// Convenience: solve from a loss spec and true density on the shared grid.
pub fn solve_with_loss(
    f_d: &Density,
    family: LossFamily,
    alpha: f64,
    shift: f64,
    tau: f64,
) -> Result<GibbsSolution> {
    let inst = InstanceSpec {
        f_d: f_d.clone(),
        loss: LossSpec::new(family, alpha, shift)?,
        tau,
        eval_grid: None,
    };
    solve_instance(&inst)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::family::FamilyParams;
    use approx::assert_relative_eq;

    fn parabola_energy(grid: &Grid) -> EnergyTable {
        let values: Vec<f64> = grid.points().iter().map(|&x| x * x).collect();
        EnergyTable::new(grid.clone(), values).unwrap()
    }

    #[test]
    fn constant_energy_gives_uniform() {
        let grid = Grid::discrete(&[1.0, 2.0, 3.0]).unwrap();
        let e = EnergyTable::new(grid.clone(), vec![4.0, 4.0, 4.0]).unwrap();
        for gamma in [0.1, 1.0, 100.0] {
            let d = gibbs_density(&e, gamma).unwrap();
            let u = Density::uniform(&grid);
            assert!(d.tv_distance(&u).unwrap() < 1e-14);
        }
        assert!(gibbs_density(&e, 0.0).is_err());
        assert!(gibbs_density(&e, -1.0).is_err());
    }

    #[test]
    fn parabola_energy_at_gamma_two_is_standard_normal() {
        let grid = Grid::continuum(-10.0, 10.0, 2001).unwrap();
        let e = parabola_energy(&grid);
        let d = gibbs_density(&e, 2.0).unwrap();
        let normal = FamilyParams::gaussian(0.0, 1.0)
            .unwrap()
            .discretize(&grid)
            .unwrap();
        assert!(d.tv_distance(&normal).unwrap() <= 1e-3);
    }

    #[test]
    fn zero_temperature_concentrates_at_argmin() {
        let grid = Grid::continuum(-10.0, 10.0, 2001).unwrap();
        let e = parabola_energy(&grid);
        let d = gibbs_density(&e, 1e-8).unwrap();
        assert!(d.masses()[e.argmin_index()] >= 1.0 - 1e-6);
    }

    #[test]
    fn entropy_strictly_increasing_in_gamma() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(3);
        let grid = Grid::continuum(-2.0, 2.0, 101).unwrap();
        for _ in 0..5 {
            let values: Vec<f64> = grid.points().iter().map(|_| rng.gen::<f64>() * 5.0).collect();
            let e = EnergyTable::new(grid.clone(), values).unwrap();
            let mut prev = f64::NEG_INFINITY;
            for i in 0..20 {
                let gamma = 10f64.powf(-3.0 + 6.0 * i as f64 / 19.0);
                let h = gibbs_density(&e, gamma).unwrap().entropy();
                assert!(h > prev, "entropy not increasing at gamma = {gamma}");
                prev = h;
            }
        }
    }

    #[test]
    fn solve_gaussian_instance_recovers_input() {
        let fam = FamilyParams::gaussian(0.0, 1.0).unwrap();
        let grid = fam.default_grid();
        let f_d = fam.discretize(&grid).unwrap();
        let sol = solve_with_loss(&f_d, LossFamily::Squared, 1.0, 0.0, fam.entropy()).unwrap();
        assert!(sol.density.tv_distance(&f_d).unwrap() <= 1e-3);
        let m = sol.density.moments();
        assert!((m.variance - 1.0).abs() <= 1e-3);
        assert!((sol.achieved_entropy - fam.entropy()).abs() <= ENTROPY_TOLERANCE);
    }

    #[test]
    fn near_uniform_when_tau_approaches_max() {
        let grid = Grid::discrete(&[0.0, 1.0, 2.0, 3.0, 4.0, 5.0, 6.0, 7.0, 8.0, 9.0]).unwrap();
        // tiny energy spread keeps every temperature's density close to uniform
        let values: Vec<f64> = (0..10).map(|i| 1e-6 * i as f64).collect();
        let e = EnergyTable::new(grid.clone(), values).unwrap();
        let tau = 10f64.ln() - 1e-3;
        let sol = solve(&e, tau).unwrap();
        let u = Density::uniform(&grid);
        // an entropy deficit of 1e-3 against uniform allows tv up to
        // sqrt(deficit / 2) by Pinsker, about 0.022
        assert!(sol.density.tv_distance(&u).unwrap() <= 0.03);
        assert!((sol.achieved_entropy - tau).abs() <= ENTROPY_TOLERANCE);
    }

    #[test]
    fn exactly_constant_energy_returns_uniform() {
        let grid = Grid::discrete(&(0..10).map(|i| i as f64).collect::<Vec<_>>()).unwrap();
        let e = EnergyTable::new(grid.clone(), vec![2.0; 10]).unwrap();
        let sol = solve(&e, 10f64.ln() - 1e-3).unwrap();
        assert!(sol.degenerate_argmin);
        assert!(sol
            .density
            .tv_distance(&Density::uniform(&grid))
            .unwrap()
            < 1e-14);
        // at tau >= max entropy the instance is infeasible even here
        assert!(matches!(
            solve(&e, 10f64.ln()),
            Err(Error::InfeasibleTau { .. })
        ));
    }

    #[test]
    fn infeasible_tau_is_rejected() {
        let grid = Grid::discrete(&(0..10).map(|i| i as f64).collect::<Vec<_>>()).unwrap();
        let e = EnergyTable::new(grid.clone(), (0..10).map(|i| i as f64).collect()).unwrap();
        // above the uniform entropy
        assert!(matches!(
            solve(&e, 3.0),
            Err(Error::InfeasibleTau { .. })
        ));
        // at or below the concentration floor (counting grid: 0)
        assert!(matches!(
            solve(&e, 0.0),
            Err(Error::InfeasibleTau { .. })
        ));
        assert!(matches!(
            solve(&e, -1.0),
            Err(Error::InfeasibleTau { .. })
        ));
        // well inside the range works
        assert!(solve(&e, 1.0).is_ok());
    }

    #[test]
    fn gibbs_identity_and_optimality_residual() {
        let fam = FamilyParams::gaussian(0.0, 1.0).unwrap();
        let grid = fam.default_grid();
        for alpha in [0.5, 1.0, 4.0] {
            let e = fam.closed_energy_table(alpha, &grid).unwrap();
            for tau in [-0.5, 0.5, 1.4, 2.2] {
                let sol = solve(&e, tau).unwrap();
                let identity =
                    sol.achieved_entropy - sol.err / sol.gamma_star - sol.log_partition;
                assert!(identity.abs() <= 1e-8, "identity residual {identity}");
                assert!(sol.optimality_residual(&e) <= 1e-6);
                // partition function consistency: Z* = e^(1 + phi*/gamma*)
                assert_relative_eq!(
                    sol.log_partition,
                    1.0 + sol.phi_star / sol.gamma_star,
                    epsilon = 1e-9
                );
            }
        }
    }

    #[test]
    fn solution_beats_feasible_perturbations() {
        use rand::{Rng, SeedableRng};
        let fam = FamilyParams::gaussian(0.0, 1.0).unwrap();
        let grid = fam.default_grid();
        let e = fam.closed_energy_table(2.0, &grid).unwrap();
        let tau = 1.0;
        let sol = solve(&e, tau).unwrap();
        let uniform = Density::uniform(&grid);
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(17);
        for _ in 0..50 {
            // mixing toward uniform keeps entropy above tau (entropy is concave)
            let t: f64 = rng.gen::<f64>() * 0.9 + 0.05;
            let raw: Vec<f64> = sol
                .density
                .masses()
                .iter()
                .zip(uniform.masses())
                .map(|(&a, &b)| (1.0 - t) * a + t * b)
                .collect();
            let g = Density::normalize(&raw, &grid).unwrap();
            assert!(g.entropy() >= tau - 1e-9);
            let obj: f64 = e
                .values()
                .iter()
                .zip(g.masses())
                .map(|(&iv, &p)| iv * p)
                .sum();
            assert!(obj >= sol.err - 1e-9);
        }
    }

    #[test]
    fn concentration_as_tau_decreases() {
        // far below the minimizer the density becomes negligible once tau <= -3
        let fam = FamilyParams::gaussian(0.0, 1.0).unwrap();
        let grid = fam.default_grid();
        let e = fam.closed_energy_table(1.0, &grid).unwrap();
        let sol = solve(&e, -3.0).unwrap();
        let istar = e.argmin_index();
        let ioff = grid.nearest_index(grid.points()[istar] + 1.0);
        let ratio = sol.density.masses()[ioff] / sol.density.masses()[istar];
        assert!(ratio < 0.01, "ratio {ratio}");
    }

    #[test]
    fn err_monotone_in_alpha_at_fixed_tau() {
        let fam = FamilyParams::gaussian(0.0, 1.0).unwrap();
        let grid = fam.default_grid();
        let mut prev = f64::NEG_INFINITY;
        for alpha in [1.0, 2.0, 4.0, 8.0] {
            let e = fam.closed_energy_table(alpha, &grid).unwrap();
            let sol = solve(&e, 1.0).unwrap();
            assert!(sol.err >= prev - 1e-9);
            prev = sol.err;
        }
    }

    #[test]
    fn point_utility_energy_matches_point_mass_quadrature() {
        // the direct two-sided parabola equals the quadrature route through a
        // point-mass density whenever the utility sits on a grid point
        use crate::energy::energy_table;
        use crate::loss::{LossFamily, LossSpec};
        let grid = Grid::continuum(-4.0, 4.0, 161).unwrap();
        let v = 1.5;
        let alpha = 3.0;
        let direct = solve_point_utility(v, alpha, 0.5, &grid).unwrap();
        let f_d = Density::point_mass(&grid, v);
        let spec = LossSpec::unshifted(LossFamily::Squared, alpha).unwrap();
        let energy = energy_table(&spec, &f_d, &grid).unwrap();
        let via_quadrature = solve(&energy, 0.5).unwrap();
        assert!(direct
            .density
            .tv_distance(&via_quadrature.density)
            .unwrap()
            <= 1e-12);
        assert_relative_eq!(
            direct.gamma_star,
            via_quadrature.gamma_star,
            max_relative = 1e-9
        );
    }

    #[test]
    fn instance_solves_on_a_separate_evaluation_grid() {
        let fam = FamilyParams::gaussian(0.0, 1.0).unwrap();
        let f_d = fam.discretize(&fam.default_grid()).unwrap();
        let eval_grid = Grid::continuum(-8.0, 8.0, 801).unwrap();
        let inst = InstanceSpec {
            f_d,
            loss: crate::loss::LossSpec::unshifted(crate::loss::LossFamily::Squared, 1.0).unwrap(),
            tau: 1.0,
            eval_grid: Some(eval_grid.clone()),
        };
        let sol = solve_instance(&inst).unwrap();
        assert_eq!(sol.density.grid(), &eval_grid);
        assert!((sol.achieved_entropy - 1.0).abs() <= ENTROPY_TOLERANCE);
    }

    #[test]
    fn exponential_instance_mean_tracks_entropy_target() {
        // at tau = 1 the solution is the unit-mean exponential; the grid must
        // be fine enough that the pdf-sampled edge at zero costs < 1e-3 mean
        let fam = FamilyParams::exponential(1.0).unwrap();
        let grid = fam.grid_with_points(20_001);
        let energy = fam.closed_energy_table(1.0, &grid).unwrap();
        let sol = solve(&energy, 1.0).unwrap();
        assert!((sol.density.moments().mean - 1.0).abs() <= 1e-3);
    }

    #[test]
    fn point_utility_means() {
        let grid = Grid::continuum(-12.0, 12.0, 4001).unwrap();
        // symmetric case: mean equals the true value
        let sol = solve_point_utility(0.0, 1.0, 1.0, &grid).unwrap();
        assert!(sol.density.moments().mean.abs() <= 1e-9);
        // risk-averse case: mean drops below the true value by the predicted amount
        let sol = solve_point_utility(0.0, 4.0, 1.0, &grid).unwrap();
        let mean = sol.density.moments().mean;
        assert!(mean < 0.0);
        let predicted = point_utility_mean(0.0, 4.0, sol.gamma_star);
        assert!((mean - predicted).abs() <= 1e-3);
    }
}
