//! Shared flag groups: family selection, explicit grids, and loss families.

use anyhow::{Context, Result};
use clap::{Args, ValueEnum};
use evalbias::{Density, FamilyParams, Grid, LossFamily};

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum FamilyKind {
    Gaussian,
    Pareto,
    Exponential,
    Laplace,
}

/// Analytic input-density selection with its parameters and grid overrides.
#[derive(Debug, Args)]
pub struct FamilyArgs {
    /// Input density family (omit when --input provides samples)
    #[arg(long, value_enum)]
    pub family: Option<FamilyKind>,

    /// Gaussian mean
    #[arg(long, default_value_t = 0.0)]
    pub m: f64,

    /// Gaussian standard deviation
    #[arg(long, default_value_t = 1.0)]
    pub sigma: f64,

    /// Pareto tail parameter (> 1)
    #[arg(long, default_value_t = 3.0)]
    pub beta: f64,

    /// Exponential rate (> 0)
    #[arg(long, default_value_t = 1.0)]
    pub lambda: f64,

    /// Laplace location
    #[arg(long, default_value_t = 0.0)]
    pub a: f64,

    /// Laplace scale (> 0)
    #[arg(long, default_value_t = 1.0)]
    pub b: f64,

    /// Grid lower bound (default: family truncation)
    #[arg(long)]
    pub grid_lo: Option<f64>,

    /// Grid upper bound (default: family truncation)
    #[arg(long)]
    pub grid_hi: Option<f64>,

    /// Grid resolution
    #[arg(long, default_value_t = 2001)]
    pub grid_points: usize,
}

impl FamilyArgs {
    pub fn family_params(&self) -> Result<FamilyParams> {
        let kind = self
            .family
            .context("--family is required when no sample input is given")?;
        Ok(match kind {
            FamilyKind::Gaussian => FamilyParams::gaussian(self.m, self.sigma)?,
            FamilyKind::Pareto => FamilyParams::pareto(self.beta)?,
            FamilyKind::Exponential => FamilyParams::exponential(self.lambda)?,
            FamilyKind::Laplace => FamilyParams::laplace(self.a, self.b)?,
        })
    }

    /// Discretized input density on the configured grid.
    pub fn density(&self) -> Result<(Density, Grid)> {
        let params = self.family_params()?;
        let (default_lo, default_hi) = params.truncation_bounds();
        let lo = self.grid_lo.unwrap_or(default_lo);
        let hi = self.grid_hi.unwrap_or(default_hi);
        let grid = Grid::continuum(lo, hi, self.grid_points)?;
        let density = params.discretize(&grid)?;
        Ok((density, grid))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum LossKind {
    Squared,
    LogRatio,
    Linear,
    AbsDeviation,
    /// Recovery loss against the input density itself
    NegLogDensity,
}

impl LossKind {
    /// Build the loss family; `reference` feeds the recovery loss.
    pub fn family(self, anchor: f64, reference: &Density) -> LossFamily {
        match self {
            Self::Squared => LossFamily::Squared,
            Self::LogRatio => LossFamily::LogRatio,
            Self::Linear => LossFamily::Linear,
            Self::AbsDeviation => LossFamily::AbsDeviation { anchor },
            Self::NegLogDensity => LossFamily::NegLogDensity {
                reference: reference.clone(),
            },
        }
    }
}

