//! Expected-loss energy `I(x)`: the quadrature of a risk-weighted loss against
//! a true-utility density, tabulated on an evaluation grid. The optimal output
//! density is the Gibbs density of this energy.

use std::io::Write;

use crate::error::{Error, Result};
use crate::grid::{Density, Grid};
use crate::loss::LossSpec;

/// Two energies within this of each other count as tied at the argmin.
pub const ARGMIN_TIE_TOLERANCE: f64 = 1e-12;

/// `I(x)` sampled on a grid, with its minimizer.
#[derive(Debug, Clone)]
pub struct EnergyTable {
    grid: Grid,
    values: Vec<f64>,
    argmin_index: usize,
}

impl EnergyTable {
    /// Wrap precomputed energy values; every value must be finite.
    pub fn new(grid: Grid, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::DegenerateGrid(format!(
                "energy vector length {} does not match grid size {}",
                values.len(),
                grid.len()
            )));
        }
        let mut argmin = 0usize;
        for (i, &v) in values.iter().enumerate() {
            if !v.is_finite() {
                return Err(Error::NonFiniteEnergy {
                    x: grid.points()[i],
                    value: v,
                });
            }
            if v < values[argmin] {
                argmin = i;
            }
        }
        Ok(Self {
            grid,
            values,
            argmin_index: argmin,
        })
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn argmin_index(&self) -> usize {
        self.argmin_index
    }

    pub fn min_value(&self) -> f64 {
        self.values[self.argmin_index]
    }

    /// Indices whose energy ties the minimum within [`ARGMIN_TIE_TOLERANCE`].
    pub fn argmin_ties(&self) -> Vec<usize> {
        let min = self.min_value();
        self.values
            .iter()
            .enumerate()
            .filter(|(_, &v)| v - min <= ARGMIN_TIE_TOLERANCE)
            .map(|(i, _)| i)
            .collect()
    }

    /// Write as CSV `x,I` for plotting.
    pub fn write_csv<W: Write>(&self, mut out: W) -> Result<()> {
        writeln!(out, "x,I")?;
        for (x, v) in self.grid.points().iter().zip(&self.values) {
            writeln!(out, "{x:.16e},{v:.16e}")?;
        }
        Ok(())
    }
}

/// Tabulate `I(x) = sum_v loss_alpha(x, v) p_D(v)` over an evaluation grid.
///
/// Ties at the minimum resolve to the lowest index. Domain violations in the
/// loss (for any evaluated pair) propagate as errors.
pub fn energy_table(spec: &LossSpec, f_d: &Density, eval_grid: &Grid) -> Result<EnergyTable> {
    let v_points = f_d.grid().points();
    let masses = f_d.masses();
    let mut values = Vec::with_capacity(eval_grid.len());
    for &x in eval_grid.points() {
        let mut acc = 0.0;
        for (&v, &p) in v_points.iter().zip(masses) {
            if p == 0.0 {
                continue;
            }
            acc += spec.eval(x, v)? * p;
        }
        values.push(acc);
    }
    EnergyTable::new(eval_grid.clone(), values)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::family::FamilyParams;
    use crate::loss::LossFamily;
    use approx::assert_relative_eq;

    #[test]
    fn point_mass_squared_energy_is_parabola() {
        let grid = Grid::continuum(-5.0, 5.0, 101).unwrap();
        let f_d = Density::point_mass(&grid, 0.0);
        let spec = LossSpec::unshifted(LossFamily::Squared, 1.0).unwrap();
        let table = energy_table(&spec, &f_d, &grid).unwrap();
        for (&x, &v) in grid.points().iter().zip(table.values()) {
            assert_relative_eq!(v, x * x, max_relative = 1e-12, epsilon = 1e-12);
        }
        assert_eq!(table.argmin_index(), 50);
    }

    #[test]
    fn point_mass_energy_is_two_sided_parabola() {
        let grid = Grid::continuum(-4.0, 4.0, 81).unwrap();
        let f_d = Density::point_mass(&grid, 1.0);
        let alpha = 3.0;
        let spec = LossSpec::unshifted(LossFamily::Squared, alpha).unwrap();
        let table = energy_table(&spec, &f_d, &grid).unwrap();
        for (&x, &v) in grid.points().iter().zip(table.values()) {
            let expect = if x >= 1.0 {
                alpha * (x - 1.0) * (x - 1.0)
            } else {
                (x - 1.0) * (x - 1.0)
            };
            assert_relative_eq!(v, expect, max_relative = 1e-12, epsilon = 1e-12);
        }
    }

    #[test]
    fn gaussian_quadrature_matches_shifted_parabola() {
        let fam = FamilyParams::gaussian(0.0, 1.0).unwrap();
        let grid = fam.default_grid();
        let f_d = fam.discretize(&grid).unwrap();
        let spec = LossSpec::unshifted(LossFamily::Squared, 1.0).unwrap();
        // Evaluate on a sparse view to keep the n^2 quadrature cheap.
        let eval = Grid::continuum(-8.0, 8.0, 33).unwrap();
        let table = energy_table(&spec, &f_d, &eval).unwrap();
        for (&x, &v) in eval.points().iter().zip(table.values()) {
            assert!((v - (x * x + 1.0)).abs() <= 1e-3, "x={x} I={v}");
        }
    }

    // Quadrature against a finely discretized family agrees with the closed
    // forms. The true-utility grids are finer than the defaults because the
    // pdf-sampled Pareto/exponential edges converge only linearly in the cell
    // width.
    #[test]
    fn quadrature_matches_closed_forms() {
        let cases: Vec<(FamilyParams, LossFamily, usize)> = vec![
            (
                FamilyParams::gaussian(0.0, 1.0).unwrap(),
                LossFamily::Squared,
                4001,
            ),
            (
                FamilyParams::pareto(3.0).unwrap(),
                LossFamily::LogRatio,
                200_001,
            ),
            (
                FamilyParams::exponential(1.0).unwrap(),
                LossFamily::Linear,
                200_001,
            ),
            (
                FamilyParams::laplace(0.0, 1.0).unwrap(),
                LossFamily::AbsDeviation { anchor: 0.0 },
                20_001,
            ),
        ];
        for (fam, loss, n_quad) in cases {
            let fine = fam.grid_with_points(n_quad);
            let f_d = fam.discretize(&fine).unwrap();
            for alpha in [1.0, 2.0] {
                let spec = LossSpec::unshifted(loss.clone(), alpha).unwrap();
                let (lo, hi) = fam.truncation_bounds();
                // stay inside the truncation region where tail error is negligible
                let eval = Grid::continuum(lo, lo + 0.8 * (hi - lo), 41).unwrap();
                let table = energy_table(&spec, &f_d, &eval).unwrap();
                for (&x, &got) in eval.points().iter().zip(table.values()) {
                    let want = fam.closed_energy(alpha, x).unwrap();
                    assert!(
                        (got - want).abs() <= 1e-3,
                        "{fam:?} alpha={alpha} x={x}: quadrature {got} vs closed {want}"
                    );
                }
            }
        }
    }

    #[test]
    fn energy_monotone_in_alpha_pointwise() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(5);
        let grid = Grid::continuum(-3.0, 3.0, 41).unwrap();
        for _ in 0..10 {
            let raw: Vec<f64> = (0..grid.len()).map(|_| rng.gen::<f64>()).collect();
            let f_d = Density::normalize(&raw, &grid).unwrap();
            let mut prev: Option<Vec<f64>> = None;
            for alpha in [0.5, 1.0, 2.0, 4.0] {
                let spec = LossSpec::unshifted(LossFamily::Squared, alpha).unwrap();
                let table = energy_table(&spec, &f_d, &grid).unwrap();
                if let Some(p) = &prev {
                    for (lo, hi) in p.iter().zip(table.values()) {
                        assert!(hi >= lo);
                    }
                }
                prev = Some(table.values().to_vec());
            }
        }
    }

    #[test]
    fn squared_energy_is_unimodal() {
        // decreasing to the argmin, then increasing
        let fam = FamilyParams::gaussian(0.0, 1.0).unwrap();
        let grid = Grid::continuum(-10.0, 10.0, 401).unwrap();
        let f_d = fam.discretize(&grid).unwrap();
        let spec = LossSpec::unshifted(LossFamily::Squared, 2.5).unwrap();
        let table = energy_table(&spec, &f_d, &grid).unwrap();
        let m = table.argmin_index();
        let v = table.values();
        for i in 1..=m {
            assert!(v[i - 1] > v[i], "not strictly decreasing at {i}");
        }
        for i in m + 1..v.len() {
            assert!(v[i] > v[i - 1], "not strictly increasing at {i}");
        }
    }

    #[test]
    fn log_ratio_energy_is_strictly_increasing() {
        let fam = FamilyParams::pareto(2.0).unwrap();
        let grid = Grid::continuum(1.0, 30.0, 301).unwrap();
        let f_d = fam.discretize(&grid).unwrap();
        for alpha in [1.0, 3.0] {
            let spec = LossSpec::unshifted(LossFamily::LogRatio, alpha).unwrap();
            let table = energy_table(&spec, &f_d, &grid).unwrap();
            let v = table.values();
            for i in 1..v.len() {
                assert!(v[i] > v[i - 1]);
            }
            assert_eq!(table.argmin_index(), 0);
        }
    }

    #[test]
    fn argmin_ties_break_low_and_are_reported() {
        let grid = Grid::discrete(&[0.0, 1.0, 2.0]).unwrap();
        let table = EnergyTable::new(grid, vec![5.0, 3.0, 3.0]).unwrap();
        assert_eq!(table.argmin_index(), 1);
        assert_eq!(table.argmin_ties(), vec![1, 2]);
    }

    #[test]
    fn non_finite_energy_rejected() {
        let grid = Grid::discrete(&[0.0, 1.0]).unwrap();
        assert!(EnergyTable::new(grid, vec![1.0, f64::INFINITY]).is_err());
    }

    #[test]
    fn domain_violation_propagates() {
        let grid = Grid::continuum(1.0, 10.0, 10).unwrap();
        let f_d = Density::uniform(&grid);
        // a shift of -2 drags v + v0 below zero for the log-ratio loss
        let spec = LossSpec::new(LossFamily::LogRatio, 1.0, -2.0).unwrap();
        assert!(energy_table(&spec, &f_d, &grid).is_err());
    }
}
