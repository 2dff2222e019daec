//! Risk-weighted loss functions: a base loss `l(x, v)` is scaled by `alpha`
//! whenever the estimate `x` lands at or above the (shifted) true value.

use crate::error::{Error, Result};
use crate::grid::{Density, Grid};

/// Base loss family.
#[derive(Debug, Clone)]
pub enum LossFamily {
    /// `(x - v)^2`
    Squared,
    /// `ln x - ln v`; both arguments must stay positive.
    LogRatio,
    /// `x - v`
    Linear,
    /// `|x - a| - |v - a|` around a fixed anchor.
    AbsDeviation { anchor: f64 },
    /// `ln f(v) - ln f(x)` against a reference density; recovers the reference
    /// as the optimal output at `alpha = 1`, `tau = Ent(f)`.
    NegLogDensity { reference: Density },
    /// Dense loss matrix over the grid product, row-major `[x_index][v_index]`.
    Custom { grid: Grid, table: Vec<f64> },
}

/// A loss family plus the risk parameter `alpha` and the shift `v0`.
///
/// `alpha >= 1` penalizes overestimation (risk averse); `alpha` in `(0, 1)` is
/// the risk-eager regime. The shift replaces `v` by `v + v0` inside the loss.
#[derive(Debug, Clone)]
pub struct LossSpec {
    pub family: LossFamily,
    pub alpha: f64,
    pub shift: f64,
}

impl LossSpec {
    pub fn new(family: LossFamily, alpha: f64, shift: f64) -> Result<Self> {
        if alpha <= 0.0 || !alpha.is_finite() {
            return Err(Error::InvalidLoss(format!(
                "alpha must be positive and finite, got {alpha}"
            )));
        }
        if !shift.is_finite() {
            return Err(Error::InvalidLoss(format!("shift must be finite, got {shift}")));
        }
        if let LossFamily::Custom { grid, table } = &family {
            if table.len() != grid.len() * grid.len() {
                return Err(Error::InvalidLoss(format!(
                    "custom table needs {} entries for a {}-point grid, got {}",
                    grid.len() * grid.len(),
                    grid.len(),
                    table.len()
                )));
            }
        }
        Ok(Self {
            family,
            alpha,
            shift,
        })
    }

    /// Convenience constructor without shift.
    pub fn unshifted(family: LossFamily, alpha: f64) -> Result<Self> {
        Self::new(family, alpha, 0.0)
    }

    /// Evaluate the risk-weighted loss at estimate `x` and true value `v`.
    ///
    /// The shift is applied first (`v -> v + v0`); the `alpha` multiplier kicks
    /// in when `x >= v + v0`.
    pub fn eval(&self, x: f64, v: f64) -> Result<f64> {
        let v = v + self.shift;
        let base = self.base_loss(x, v)?;
        Ok(if x >= v { self.alpha * base } else { base })
    }

    fn base_loss(&self, x: f64, v: f64) -> Result<f64> {
        match &self.family {
            LossFamily::Squared => Ok((x - v) * (x - v)),
            LossFamily::LogRatio => {
                if x <= 0.0 || v <= 0.0 {
                    return Err(Error::LossDomain(format!(
                        "log-ratio needs positive arguments, got x = {x}, shifted v = {v}"
                    )));
                }
                Ok(x.ln() - v.ln())
            }
            LossFamily::Linear => Ok(x - v),
            LossFamily::AbsDeviation { anchor } => Ok((x - anchor).abs() - (v - anchor).abs()),
            LossFamily::NegLogDensity { reference } => {
                Ok(log_density_at(reference, v)? - log_density_at(reference, x)?)
            }
            LossFamily::Custom { grid, table } => {
                let n = grid.len();
                let xi = grid.nearest_index(x);
                let vi = grid.nearest_index(v);
                Ok(table[xi * n + vi])
            }
        }
    }
}

/// Log of the reference density value at the grid point nearest `t`.
fn log_density_at(reference: &Density, t: f64) -> Result<f64> {
    let i = reference.grid().nearest_index(t);
    let f = reference.value_at(i);
    if f <= 0.0 {
        return Err(Error::LossDomain(format!(
            "reference density vanishes at {t} (grid point {})",
            reference.grid().points()[i]
        )));
    }
    Ok(f.ln())
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn squared_examples() {
        let spec = LossSpec::unshifted(LossFamily::Squared, 2.0).unwrap();
        assert_relative_eq!(spec.eval(3.0, 1.0).unwrap(), 8.0);
        // the loss vanishes on the diagonal for any alpha
        for alpha in [0.5, 1.0, 3.0] {
            let spec = LossSpec::unshifted(LossFamily::Squared, alpha).unwrap();
            assert_eq!(spec.eval(2.5, 2.5).unwrap(), 0.0);
        }
        // below the true value the multiplier does not apply
        let spec = LossSpec::unshifted(LossFamily::Squared, 2.0).unwrap();
        assert_relative_eq!(spec.eval(0.0, 1.0).unwrap(), 1.0);
    }

    #[test]
    fn log_ratio_examples() {
        let spec = LossSpec::unshifted(LossFamily::LogRatio, 1.0).unwrap();
        assert_relative_eq!(
            spec.eval(std::f64::consts::E, 1.0).unwrap(),
            1.0,
            max_relative = 1e-15
        );
        assert!(spec.eval(-1.0, 1.0).is_err());
        assert!(spec.eval(1.0, 0.0).is_err());
    }

    #[test]
    fn shift_moves_the_true_value() {
        let spec = LossSpec::new(LossFamily::Squared, 3.0, 1.0).unwrap();
        // v + v0 = 2, x = 2 -> at the boundary, multiplier applies, loss 0
        assert_eq!(spec.eval(2.0, 1.0).unwrap(), 0.0);
        // x = 3 >= 2 -> 3 * (3-2)^2
        assert_relative_eq!(spec.eval(3.0, 1.0).unwrap(), 3.0);
        // x = 0 < 2 -> (0-2)^2
        assert_relative_eq!(spec.eval(0.0, 1.0).unwrap(), 4.0);
        // shifted log-ratio can cross zero
        let spec = LossSpec::new(LossFamily::LogRatio, 1.0, -2.0).unwrap();
        assert!(spec.eval(1.0, 1.0).is_err());
    }

    #[test]
    fn abs_deviation_and_linear() {
        let spec = LossSpec::unshifted(LossFamily::AbsDeviation { anchor: 1.0 }, 1.0).unwrap();
        assert_relative_eq!(spec.eval(4.0, 2.0).unwrap(), 2.0);
        let spec = LossSpec::unshifted(LossFamily::Linear, 2.0).unwrap();
        assert_relative_eq!(spec.eval(3.0, 1.0).unwrap(), 4.0);
        assert_relative_eq!(spec.eval(0.0, 1.0).unwrap(), -1.0);
    }

    #[test]
    fn neg_log_density_recovers_log_ratio_of_reference() {
        let g = Grid::discrete(&[1.0, 2.0, 3.0]).unwrap();
        let reference = Density::normalize(&[0.5, 0.3, 0.2], &g).unwrap();
        let spec = LossSpec::unshifted(
            LossFamily::NegLogDensity {
                reference: reference.clone(),
            },
            1.0,
        )
        .unwrap();
        let got = spec.eval(1.0, 3.0).unwrap();
        assert_relative_eq!(got, (0.2f64).ln() - (0.5f64).ln(), max_relative = 1e-15);

        let zeros = Density::normalize(&[1.0, 0.0, 1.0], &g).unwrap();
        let spec = LossSpec::unshifted(LossFamily::NegLogDensity { reference: zeros }, 1.0).unwrap();
        assert!(spec.eval(2.0, 1.0).is_err());
    }

    #[test]
    fn custom_table_lookup() {
        let g = Grid::discrete(&[0.0, 1.0]).unwrap();
        let table = vec![0.0, 1.0, 2.0, 3.0];
        let spec = LossSpec::unshifted(
            LossFamily::Custom {
                grid: g.clone(),
                table,
            },
            1.0,
        )
        .unwrap();
        assert_eq!(spec.eval(0.0, 1.0).unwrap(), 1.0);
        assert_eq!(spec.eval(1.0, 0.0).unwrap(), 2.0);
        // wrong table size is rejected up front
        assert!(LossSpec::unshifted(
            LossFamily::Custom {
                grid: g,
                table: vec![0.0; 3]
            },
            1.0
        )
        .is_err());
    }

    #[test]
    fn invalid_alpha_rejected() {
        assert!(LossSpec::unshifted(LossFamily::Squared, 0.0).is_err());
        assert!(LossSpec::unshifted(LossFamily::Squared, -1.0).is_err());
        assert!(LossSpec::unshifted(LossFamily::Squared, f64::NAN).is_err());
        // small positive alpha is allowed (risk-eager regime)
        assert!(LossSpec::unshifted(LossFamily::Squared, 3e-4).is_ok());
    }
}
