//! Analytic solutions at `alpha = 1` for the four families, the pair of
//! entropy targets that reproduces the implicit-variance model, and the
//! limiting Pareto output density as the risk parameter grows.

use crate::energy::EnergyTable;
use crate::error::{Error, Result};
use crate::family::FamilyParams;
use crate::gibbs::{solve, GibbsSolution};
use crate::grid::{Density, Grid};

/// Analytic output family for an `alpha = 1` instance.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize)]
pub struct AnalyticSolution {
    pub family: FamilyParams,
    pub tau_used: f64,
}

/// Closed-form optimal output at `alpha = 1` for each family under its paired
/// loss: Gaussian keeps its mean with variance `e^(2 tau - 1) / (2 pi)`;
/// Pareto maps to the tail parameter solving `1 + 1/b - ln b = tau`;
/// Exponential gets mean `e^(tau - 1)`; Laplace keeps its location with scale
/// `e^(tau - 1) / 2`.
pub fn analytic_alpha1(family: &FamilyParams, tau: f64) -> Result<AnalyticSolution> {
    let out = match *family {
        FamilyParams::Gaussian { mean, .. } => {
            let variance = (2.0 * tau - 1.0).exp() / (2.0 * std::f64::consts::PI);
            FamilyParams::gaussian(mean, variance.sqrt())?
        }
        FamilyParams::Pareto { .. } => FamilyParams::pareto(beta_for_entropy(tau)?)?,
        FamilyParams::Exponential { .. } => FamilyParams::exponential((1.0 - tau).exp())?,
        FamilyParams::Laplace { location, .. } => {
            FamilyParams::laplace(location, (tau - 1.0).exp() / 2.0)?
        }
    };
    Ok(AnalyticSolution {
        family: out,
        tau_used: tau,
    })
}

const BETA_BRACKET_LO: f64 = 1.0 + 1e-9;
const BETA_BRACKET_HI: f64 = 1e9;

/// Invert the Pareto entropy map: find `b > 1` with `1 + 1/b - ln b = tau`.
///
/// The map is strictly decreasing on the bracket, so bisection converges to
/// the unique root whenever `tau` lies between the endpoint values.
pub fn beta_for_entropy(tau: f64) -> Result<f64> {
    let f = |b: f64| 1.0 + 1.0 / b - b.ln() - tau;
    let (mut lo, mut hi) = (BETA_BRACKET_LO, BETA_BRACKET_HI);
    if f(lo) < 0.0 || f(hi) > 0.0 {
        return Err(Error::ParetoRootNotBracketed { tau, lo, hi });
    }
    for _ in 0..200 {
        let mid = (lo * hi).sqrt();
        if f(mid) > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok((lo * hi).sqrt())
}

/// Entropy targets whose solutions reproduce the implicit-variance model:
/// the first yields `N(mu, sigma0^2)`, the second `N(mu, sigma0^2 + sigma^2)`.
pub fn implicit_variance_instance(mu: f64, sigma0: f64, sigma: f64) -> Result<(f64, f64)> {
    if sigma0 <= 0.0 || !sigma0.is_finite() {
        return Err(Error::InvalidFamily(format!(
            "sigma0 must be positive, got {sigma0}"
        )));
    }
    if sigma < 0.0 || !sigma.is_finite() {
        return Err(Error::InvalidFamily(format!(
            "sigma must be non-negative, got {sigma}"
        )));
    }
    let _ = mu; // the targets do not depend on the common mean
    use std::f64::consts::PI;
    let tau1 = 0.5 * (1.0 + (2.0 * PI * sigma0 * sigma0).ln());
    let tau2 = 0.5 * (1.0 + (2.0 * PI * (sigma0 * sigma0 + sigma * sigma)).ln());
    Ok((tau1, tau2))
}

/// The limiting output density for a Pareto input as the risk parameter grows:
/// `g*(x) ∝ exp(-C (ln x + 1/(beta x^beta)))` with `C` pinned by requiring
/// entropy `tau`.
pub fn pareto_limit_density(beta: f64, tau: f64, grid: &Grid) -> Result<Density> {
    if beta <= 1.0 || !beta.is_finite() {
        return Err(Error::InvalidFamily(format!(
            "pareto limit needs beta > 1, got {beta}"
        )));
    }
    if grid.lo() < 1.0 {
        return Err(Error::FamilyDomain {
            x: grid.lo(),
            domain: "[1, inf)",
        });
    }
    let values: Vec<f64> = grid
        .points()
        .iter()
        .map(|&x| x.ln() + 1.0 / (beta * x.powf(beta)))
        .collect();
    let energy = EnergyTable::new(grid.clone(), values)?;
    let sol: GibbsSolution = solve(&energy, tau)?;
    Ok(sol.density)
}
