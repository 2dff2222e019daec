//! The four analytic input families (Gaussian, Pareto, Exponential, Laplace):
//! pdfs, closed-form expected-loss energies under their paired losses,
//! analytic entropies, and default truncation grids.

use crate::energy::EnergyTable;
use crate::error::{Error, Result};
use crate::grid::{Density, Grid};
use crate::math::{normal_cdf, normal_pdf};

/// Tail mass dropped when truncating an unbounded family to a finite grid.
pub const TRUNCATION_TAIL_MASS: f64 = 1e-6;

/// Default number of points for continuum grids.
pub const DEFAULT_GRID_POINTS: usize = 2001;

/// Parameters of one of the four analytic families.
///
/// Each family is paired with the loss under which its expected-loss energy
/// has a closed form: squared for Gaussian, log-ratio for Pareto, linear for
/// Exponential, and absolute deviation about the location for Laplace.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize)]
pub enum FamilyParams {
    Gaussian { mean: f64, sigma: f64 },
    Pareto { beta: f64 },
    Exponential { rate: f64 },
    Laplace { location: f64, scale: f64 },
}

impl FamilyParams {
    pub fn gaussian(mean: f64, sigma: f64) -> Result<Self> {
        if sigma <= 0.0 || !sigma.is_finite() || !mean.is_finite() {
            return Err(Error::InvalidFamily(format!(
                "gaussian needs finite mean and sigma > 0, got ({mean}, {sigma})"
            )));
        }
        Ok(Self::Gaussian { mean, sigma })
    }

    pub fn pareto(beta: f64) -> Result<Self> {
        if beta <= 1.0 || !beta.is_finite() {
            return Err(Error::InvalidFamily(format!(
                "pareto needs beta > 1, got {beta}"
            )));
        }
        Ok(Self::Pareto { beta })
    }

    pub fn exponential(rate: f64) -> Result<Self> {
        if rate <= 0.0 || !rate.is_finite() {
            return Err(Error::InvalidFamily(format!(
                "exponential needs rate > 0, got {rate}"
            )));
        }
        Ok(Self::Exponential { rate })
    }

    pub fn laplace(location: f64, scale: f64) -> Result<Self> {
        if scale <= 0.0 || !scale.is_finite() || !location.is_finite() {
            return Err(Error::InvalidFamily(format!(
                "laplace needs finite location and scale > 0, got ({location}, {scale})"
            )));
        }
        Ok(Self::Laplace { location, scale })
    }

    /// Probability density at `x` (zero outside the family domain).
    pub fn pdf(&self, x: f64) -> f64 {
        match *self {
            Self::Gaussian { mean, sigma } => normal_pdf((x - mean) / sigma) / sigma,
            Self::Pareto { beta } => {
                if x < 1.0 {
                    0.0
                } else {
                    beta * x.powf(-beta - 1.0)
                }
            }
            Self::Exponential { rate } => {
                if x < 0.0 {
                    0.0
                } else {
                    rate * (-rate * x).exp()
                }
            }
            Self::Laplace { location, scale } => {
                (-(x - location).abs() / scale).exp() / (2.0 * scale)
            }
        }
    }

    /// Differential entropy of the (untruncated) family.
    pub fn entropy(&self) -> f64 {
        use std::f64::consts::PI;
        match *self {
            Self::Gaussian { sigma, .. } => 0.5 + 0.5 * (2.0 * PI * sigma * sigma).ln(),
            Self::Pareto { beta } => 1.0 + 1.0 / beta - beta.ln(),
            Self::Exponential { rate } => 1.0 - rate.ln(),
            Self::Laplace { scale, .. } => 1.0 + (2.0 * scale).ln(),
        }
    }

    /// Mean of the (untruncated) family.
    pub fn mean(&self) -> f64 {
        match *self {
            Self::Gaussian { mean, .. } => mean,
            Self::Pareto { beta } => beta / (beta - 1.0),
            Self::Exponential { rate } => 1.0 / rate,
            Self::Laplace { location, .. } => location,
        }
    }

    /// Truncation bounds leaving at most [`TRUNCATION_TAIL_MASS`] outside.
    ///
    /// Gaussian families are cut at ten standard deviations.
    pub fn truncation_bounds(&self) -> (f64, f64) {
        let t = -TRUNCATION_TAIL_MASS.ln(); // ln(1e6)
        match *self {
            Self::Gaussian { mean, sigma } => (mean - 10.0 * sigma, mean + 10.0 * sigma),
            Self::Pareto { beta } => (1.0, (1.0 / TRUNCATION_TAIL_MASS).powf(1.0 / beta)),
            Self::Exponential { rate } => (0.0, t / rate),
            Self::Laplace { location, scale } => (location - t * scale, location + t * scale),
        }
    }

    /// Default continuum grid for this family.
    pub fn default_grid(&self) -> Grid {
        self.grid_with_points(DEFAULT_GRID_POINTS)
    }

    /// Continuum grid over the truncation bounds with a chosen resolution.
    pub fn grid_with_points(&self, count: usize) -> Grid {
        let (lo, hi) = self.truncation_bounds();
        Grid::continuum(lo, hi, count).expect("family truncation bounds are non-degenerate")
    }

    /// Discretize onto a grid: pdf sampled at the points, weighted, normalized.
    pub fn discretize(&self, grid: &Grid) -> Result<Density> {
        let raw: Vec<f64> = grid
            .points()
            .iter()
            .zip(grid.weights())
            .map(|(&x, &w)| self.pdf(x) * w)
            .collect();
        Density::normalize(&raw, grid)
    }

    /// Closed-form expected loss when the estimate is `x`, under the family's
    /// paired loss and risk parameter `alpha`.
    pub fn closed_energy(&self, alpha: f64, x: f64) -> Result<f64> {
        if alpha <= 0.0 || !alpha.is_finite() {
            return Err(Error::InvalidLoss(format!(
                "alpha must be positive and finite, got {alpha}"
            )));
        }
        match *self {
            Self::Gaussian { mean, sigma } => {
                let w = (x - mean) / sigma;
                let s2 = sigma * sigma;
                // the overestimation term is a truncated second moment; far in
                // the left tail its two parts cancel and rounding can leave a
                // tiny negative value, so clamp at the exact lower bound
                let over = ((w * w + 1.0) * normal_cdf(w) + w * normal_pdf(w)).max(0.0);
                Ok((alpha - 1.0) * s2 * over + s2 * (w * w + 1.0))
            }
            Self::Pareto { beta } => {
                if x < 1.0 {
                    return Err(Error::FamilyDomain {
                        x,
                        domain: "[1, inf)",
                    });
                }
                Ok(alpha * x.ln() + (alpha - 1.0) / (beta * x.powf(beta)) - alpha / beta)
            }
            Self::Exponential { rate } => {
                if x < 0.0 {
                    return Err(Error::FamilyDomain {
                        x,
                        domain: "[0, inf)",
                    });
                }
                Ok((alpha * (rate * x - 1.0) + (alpha - 1.0) * (-rate * x).exp()) / rate)
            }
            Self::Laplace { location, scale } => {
                let w = (x - location) / scale;
                Ok(if x >= location {
                    alpha * scale * (w - 1.0) + scale * (alpha - 1.0) / 2.0 * (-w).exp()
                } else {
                    -scale * (w + 1.0) + scale * (1.0 - alpha) / 2.0 * w.exp()
                })
            }
        }
    }

    /// Energy table from the closed form, sampled on `grid`.
    pub fn closed_energy_table(&self, alpha: f64, grid: &Grid) -> Result<EnergyTable> {
        let values = grid
            .points()
            .iter()
            .map(|&x| self.closed_energy(alpha, x))
            .collect::<Result<Vec<_>>>()?;
        EnergyTable::new(grid.clone(), values)
    }
}
