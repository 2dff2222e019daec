//! Grid-search fitting: find the model parameters `(alpha, tau, v0)` whose
//! output density is closest in total variation to an observed density, plus
//! the multiplicative-bias and additive-noise baseline models fitted the same
//! way for comparison.

use std::io::Write;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::energy::energy_table;
use crate::error::{Error, Result};
use crate::gibbs::solve;
use crate::grid::{Density, Grid};
use crate::loss::{LossFamily, LossSpec};
use crate::math::{linspace, logspace, normal_pdf};

/// Two TV values within this of each other count as tied; ties resolve to the
/// lexicographically smallest `(alpha, tau, shift)`.
pub const TV_TIE_TOLERANCE: f64 = 1e-12;

/// Width of the truncated Gaussian kernel used by the additive-noise
/// transform, in standard deviations.
const NOISE_KERNEL_HALF_WIDTH: f64 = 8.0;

/// Parameter grid for the model search.
#[derive(Debug, Clone)]
pub struct SearchSpace {
    /// Risk parameters, sorted ascending (default: 50 log-spaced over [1e-4, 1e2]).
    pub alpha_values: Vec<f64>,
    /// Entropy targets, sorted ascending (default: 50 linear over [0.1, 10]).
    pub tau_values: Vec<f64>,
    /// Shift candidates (default: every 4th grid point).
    pub shift_values: Vec<f64>,
    /// Re-search a finer local box around the coarse minimizer.
    pub refine: bool,
}

impl SearchSpace {
    pub fn defaults_for(grid: &Grid) -> Self {
        Self {
            alpha_values: logspace(1e-4, 1e2, 50),
            tau_values: linspace(0.1, 10.0, 50),
            shift_values: default_shifts(grid),
            refine: false,
        }
    }

    pub fn with_alphas(mut self, alphas: Vec<f64>) -> Self {
        self.alpha_values = alphas;
        self
    }

    pub fn with_taus(mut self, taus: Vec<f64>) -> Self {
        self.tau_values = taus;
        self
    }

    pub fn with_shifts(mut self, shifts: Vec<f64>) -> Self {
        self.shift_values = shifts;
        self
    }

    pub fn with_refine(mut self, refine: bool) -> Self {
        self.refine = refine;
        self
    }

    /// Insert extra values, keeping the lists sorted and deduplicated. Used to
    /// make restricted-slice searches literal subsets of the full search.
    pub fn including(mut self, alpha: Option<f64>, tau: Option<f64>) -> Self {
        if let Some(a) = alpha {
            insert_sorted(&mut self.alpha_values, a);
        }
        if let Some(t) = tau {
            insert_sorted(&mut self.tau_values, t);
        }
        self
    }

    fn validate(&self) -> Result<()> {
        for (name, list) in [
            ("alpha_values", &self.alpha_values),
            ("tau_values", &self.tau_values),
            ("shift_values", &self.shift_values),
        ] {
            if list.is_empty() {
                return Err(Error::InvalidSearchSpace(format!("{name} is empty")));
            }
            if list.iter().any(|v| !v.is_finite()) {
                return Err(Error::InvalidSearchSpace(format!(
                    "{name} contains a non-finite value"
                )));
            }
            if list.windows(2).any(|w| w[0] > w[1]) {
                return Err(Error::InvalidSearchSpace(format!("{name} is not sorted")));
            }
        }
        if self.alpha_values.iter().any(|&a| a <= 0.0) {
            return Err(Error::InvalidSearchSpace(
                "alpha_values must be positive".into(),
            ));
        }
        Ok(())
    }
}

fn insert_sorted(list: &mut Vec<f64>, value: f64) {
    match list.binary_search_by(|v| v.total_cmp(&value)) {
        Ok(_) => {}
        Err(pos) => list.insert(pos, value),
    }
}

fn default_shifts(grid: &Grid) -> Vec<f64> {
    grid.points().iter().copied().step_by(4).collect()
}

/// Best-fit model parameters with the fitted density.
#[derive(Debug, Clone, PartialEq)]
pub struct FitResult {
    pub alpha: f64,
    pub tau: f64,
    pub shift: f64,
    pub tv_train: f64,
    pub tv_test: Option<f64>,
    pub fitted: Density,
}

impl FitResult {
    pub fn to_json(&self) -> serde_json::Value {
        serde_json::json!({
            "alpha": self.alpha,
            "tau": self.tau,
            "shift": self.shift,
            "tv_train": self.tv_train,
            "tv_test": self.tv_test,
        })
    }
}

/// One evaluated parameter triple.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FitRow {
    pub alpha: f64,
    pub tau: f64,
    pub shift: f64,
    pub tv: f64,
}

/// Every evaluated triple with its TV distance, for audit.
#[derive(Debug, Clone, Default)]
pub struct FitReport {
    pub rows: Vec<FitRow>,
}

impl FitReport {
    pub fn write_csv<W: Write>(&self, mut out: W) -> Result<()> {
        writeln!(out, "alpha,tau,shift,tv")?;
        for r in &self.rows {
            writeln!(
                out,
                "{:.16e},{:.16e},{:.16e},{:.16e}",
                r.alpha, r.tau, r.shift, r.tv
            )?;
        }
        Ok(())
    }

    fn best(&self) -> Option<FitRow> {
        let min = self
            .rows
            .iter()
            .map(|r| r.tv)
            .fold(f64::INFINITY, f64::min);
        self.rows
            .iter()
            .filter(|r| r.tv <= min + TV_TIE_TOLERANCE)
            .min_by(|a, b| {
                (a.alpha, a.tau, a.shift)
                    .partial_cmp(&(b.alpha, b.tau, b.shift))
                    .expect("finite parameters")
            })
            .copied()
    }
}

/// Exhaustive search over the parameter grid for the model output closest to
/// `target` in TV distance. Infeasible or domain-violating triples are skipped.
pub fn fit_optprog(
    f_d: &Density,
    target: &Density,
    loss_family: &LossFamily,
    space: &SearchSpace,
    test_target: Option<&Density>,
) -> Result<FitResult> {
    fit_optprog_with_report(f_d, target, loss_family, space, test_target).map(|(fit, _)| fit)
}

/// As [`fit_optprog`], also returning the full audit report.
pub fn fit_optprog_with_report(
    f_d: &Density,
    target: &Density,
    loss_family: &LossFamily,
    space: &SearchSpace,
    test_target: Option<&Density>,
) -> Result<(FitResult, FitReport)> {
    space.validate()?;
    if f_d.grid() != target.grid() {
        return Err(Error::GridMismatch);
    }
    let mut report = FitReport::default();
    scan(
        f_d,
        target,
        loss_family,
        &space.alpha_values,
        &space.tau_values,
        &space.shift_values,
        &mut report,
    )?;
    if space.refine {
        if let Some(best) = report.best() {
            let alphas = refine_log(&space.alpha_values, best.alpha);
            let taus = refine_linear(&space.tau_values, best.tau);
            let shifts = refine_shifts(f_d.grid(), &space.shift_values, best.shift);
            scan(f_d, target, loss_family, &alphas, &taus, &shifts, &mut report)?;
        }
    }
    let best = report.best().ok_or(Error::EmptyFeasibleSet)?;
    let fitted = solve_triple(f_d, loss_family, best.alpha, best.shift, best.tau)?
        .expect("best row was solvable during the scan");
    let tv_test = match test_target {
        Some(t) => Some(fitted.tv_distance(t)?),
        None => None,
    };
    Ok((
        FitResult {
            alpha: best.alpha,
            tau: best.tau,
            shift: best.shift,
            tv_train: best.tv,
            tv_test,
            fitted,
        },
        report,
    ))
}

fn scan(
    f_d: &Density,
    target: &Density,
    loss_family: &LossFamily,
    alphas: &[f64],
    taus: &[f64],
    shifts: &[f64],
    report: &mut FitReport,
) -> Result<()> {
    for &alpha in alphas {
        for &shift in shifts {
            let spec = LossSpec::new(loss_family.clone(), alpha, shift)?;
            // the energy does not depend on tau; build it once per (alpha, shift)
            let energy = match energy_table(&spec, f_d, f_d.grid()) {
                Ok(e) => e,
                Err(Error::LossDomain(_)) => continue,
                Err(e) => return Err(e),
            };
            for &tau in taus {
                let sol = match solve(&energy, tau) {
                    Ok(s) => s,
                    Err(Error::InfeasibleTau { .. }) | Err(Error::BracketNotFound(_)) => continue,
                    Err(e) => return Err(e),
                };
                let tv = sol.density.tv_distance(target)?;
                report.rows.push(FitRow {
                    alpha,
                    tau,
                    shift,
                    tv,
                });
            }
        }
    }
    Ok(())
}

fn solve_triple(
    f_d: &Density,
    loss_family: &LossFamily,
    alpha: f64,
    shift: f64,
    tau: f64,
) -> Result<Option<Density>> {
    let spec = LossSpec::new(loss_family.clone(), alpha, shift)?;
    let energy = match energy_table(&spec, f_d, f_d.grid()) {
        Ok(e) => e,
        Err(Error::LossDomain(_)) => return Ok(None),
        Err(e) => return Err(e),
    };
    match solve(&energy, tau) {
        Ok(s) => Ok(Some(s.density)),
        Err(Error::InfeasibleTau { .. }) | Err(Error::BracketNotFound(_)) => Ok(None),
        Err(e) => Err(e),
    }
}

/// 5x finer log-spaced points between the coarse neighbors of `center`.
fn refine_log(sorted: &[f64], center: f64) -> Vec<f64> {
    let (lo, hi) = neighbors(sorted, center);
    logspace(lo, hi, 11)
}

fn refine_linear(sorted: &[f64], center: f64) -> Vec<f64> {
    let (lo, hi) = neighbors(sorted, center);
    linspace(lo, hi, 11)
}

/// All grid points between the coarse shift neighbors of `center`.
fn refine_shifts(grid: &Grid, sorted_shifts: &[f64], center: f64) -> Vec<f64> {
    let (lo, hi) = neighbors(sorted_shifts, center);
    let pts: Vec<f64> = grid
        .points()
        .iter()
        .copied()
        .filter(|&p| p >= lo && p <= hi)
        .collect();
    if pts.is_empty() {
        vec![center]
    } else {
        pts
    }
}

fn neighbors(sorted: &[f64], center: f64) -> (f64, f64) {
    let i = sorted.partition_point(|&v| v < center);
    let lo = if i == 0 { sorted[0] } else { sorted[i - 1] };
    let hi = *sorted.get(i + 1).unwrap_or(sorted.last().unwrap());
    if lo < hi {
        (lo, hi)
    } else {
        (center, center.max(lo))
    }
}

/// Baseline model selector.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BaselineModel {
    /// Observed utility is `rho * v + shift` with `rho` in (0, 1].
    Multiplicative,
    /// Observed utility is `v + shift + sigma * z` for standard normal `z`.
    ImplicitVariance,
}

/// Fitted baseline parameters.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum BaselineParams {
    Multiplicative { rho: f64, shift: f64 },
    ImplicitVariance { sigma: f64, shift: f64 },
}

/// Best-fit baseline with its TV distances.
#[derive(Debug, Clone, PartialEq)]
pub struct BaselineFit {
    pub params: BaselineParams,
    pub tv_train: f64,
    pub tv_test: Option<f64>,
    pub fitted: Density,
}

impl BaselineFit {
    pub fn to_json(&self) -> serde_json::Value {
        let (model, primary, shift) = match self.params {
            BaselineParams::Multiplicative { rho, shift } => ("multiplicative", rho, shift),
            BaselineParams::ImplicitVariance { sigma, shift } => ("implicit-variance", sigma, shift),
        };
        serde_json::json!({
            "model": model,
            "parameter": primary,
            "shift": shift,
            "tv_train": self.tv_train,
            "tv_test": self.tv_test,
        })
    }
}

/// Parameter lists for a baseline search.
#[derive(Debug, Clone)]
pub struct BaselineSearch {
    /// `rho` (multiplicative) or `sigma` (implicit variance) candidates, sorted.
    pub primary_values: Vec<f64>,
    pub shift_values: Vec<f64>,
}

impl BaselineSearch {
    pub fn defaults_for(model: BaselineModel, grid: &Grid) -> Self {
        let primary_values = match model {
            BaselineModel::Multiplicative => linspace(0.02, 1.0, 50),
            BaselineModel::ImplicitVariance => logspace(1e-2, 10.0, 50),
        };
        Self {
            primary_values,
            shift_values: default_shifts(grid),
        }
    }
}

/// Push each support point through `v -> rho v + shift` and re-bin its mass to
/// the nearest target grid point. Mass leaving the grid range is dropped and
/// the remainder renormalized; losing everything is an error.
pub fn transform_multiplicative(
    f_d: &Density,
    rho: f64,
    shift: f64,
    target_grid: &Grid,
) -> Result<Density> {
    if rho <= 0.0 || !rho.is_finite() {
        return Err(Error::InvalidTransform(format!(
            "rho must be positive, got {rho}"
        )));
    }
    let mut raw = vec![0.0; target_grid.len()];
    let (lo, hi) = (target_grid.lo(), target_grid.hi());
    let mut kept = 0.0;
    for (&v, &p) in f_d.grid().points().iter().zip(f_d.masses()) {
        let y = rho * v + shift;
        if y < lo || y > hi {
            continue;
        }
        raw[target_grid.nearest_index(y)] += p;
        kept += p;
    }
    if kept <= 0.0 {
        return Err(Error::AllMassOutsideGrid);
    }
    Density::normalize(&raw, target_grid)
}

/// Shift then blur with a discretized centered Gaussian kernel of standard
/// deviation `sigma`, truncated at eight standard deviations and re-binned to
/// the target grid. `sigma = 0` degenerates to a pure shift.
pub fn transform_implicit(
    f_d: &Density,
    sigma: f64,
    shift: f64,
    target_grid: &Grid,
) -> Result<Density> {
    if sigma < 0.0 || !sigma.is_finite() {
        return Err(Error::InvalidTransform(format!(
            "sigma must be non-negative, got {sigma}"
        )));
    }
    let pts = target_grid.points();
    let weights = target_grid.weights();
    let (lo, hi) = (target_grid.lo(), target_grid.hi());
    let mut raw = vec![0.0; target_grid.len()];
    let mut kept = 0.0;
    for (&v, &p) in f_d.grid().points().iter().zip(f_d.masses()) {
        if p == 0.0 {
            continue;
        }
        let center = v + shift;
        let half = NOISE_KERNEL_HALF_WIDTH * sigma;
        let a = pts.partition_point(|&x| x < center - half);
        let b = pts.partition_point(|&x| x <= center + half);
        if sigma > 0.0 && b > a {
            let mut kernel = Vec::with_capacity(b - a);
            let mut total = 0.0;
            for i in a..b {
                let k = normal_pdf((pts[i] - center) / sigma) * weights[i];
                kernel.push(k);
                total += k;
            }
            if total > 0.0 {
                for (off, k) in kernel.into_iter().enumerate() {
                    raw[a + off] += p * k / total;
                }
                kept += p;
                continue;
            }
        }
        // zero-noise path, or a kernel window too narrow to contain any point
        if center < lo || center > hi {
            continue;
        }
        raw[target_grid.nearest_index(center)] += p;
        kept += p;
    }
    if kept <= 0.0 {
        return Err(Error::AllMassOutsideGrid);
    }
    Density::normalize(&raw, target_grid)
}

/// Grid search over `(rho | sigma) x shift` for the baseline closest to `target`.
pub fn fit_baseline(
    model: BaselineModel,
    f_d: &Density,
    target: &Density,
    search: &BaselineSearch,
    test_target: Option<&Density>,
) -> Result<BaselineFit> {
    if search.primary_values.is_empty() || search.shift_values.is_empty() {
        return Err(Error::InvalidSearchSpace("empty baseline search".into()));
    }
    let mut best: Option<(f64, f64, f64, Density)> = None;
    for &primary in &search.primary_values {
        for &shift in &search.shift_values {
            let fitted = match model {
                BaselineModel::Multiplicative => {
                    transform_multiplicative(f_d, primary, shift, target.grid())
                }
                BaselineModel::ImplicitVariance => {
                    transform_implicit(f_d, primary, shift, target.grid())
                }
            };
            let fitted = match fitted {
                Ok(d) => d,
                Err(Error::AllMassOutsideGrid) => continue,
                Err(e) => return Err(e),
            };
            let tv = fitted.tv_distance(target)?;
            let better = match &best {
                None => true,
                Some((btv, bp, bs, _)) => {
                    tv < btv - TV_TIE_TOLERANCE
                        || (tv <= btv + TV_TIE_TOLERANCE && (primary, shift) < (*bp, *bs))
                }
            };
            if better {
                best = Some((tv, primary, shift, fitted));
            }
        }
    }
    let (tv_train, primary, shift, fitted) = best.ok_or(Error::EmptyFeasibleSet)?;
    let tv_test = match test_target {
        Some(t) => Some(fitted.tv_distance(t)?),
        None => None,
    };
    let params = match model {
        BaselineModel::Multiplicative => BaselineParams::Multiplicative {
            rho: primary,
            shift,
        },
        BaselineModel::ImplicitVariance => BaselineParams::ImplicitVariance {
            sigma: primary,
            shift,
        },
    };
    Ok(BaselineFit {
        params,
        tv_train,
        tv_test,
        fitted,
    })
}

/// Deterministic shuffled split: the first `ceil(fraction * n)` shuffled
/// samples form the training set.
pub fn train_test_split(
    samples: &[f64],
    fraction: f64,
    seed: u64,
) -> Result<(Vec<f64>, Vec<f64>)> {
    if samples.len() < 2 {
        return Err(Error::InvalidSplit(format!(
            "need at least 2 samples, got {}",
            samples.len()
        )));
    }
    if fraction.is_nan() || fraction <= 0.0 || fraction >= 1.0 {
        return Err(Error::InvalidSplit(format!(
            "fraction must be in (0, 1), got {fraction}"
        )));
    }
    let mut shuffled = samples.to_vec();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    shuffled.shuffle(&mut rng);
    let train_len = ((fraction * samples.len() as f64).ceil() as usize).min(samples.len());
    let test = shuffled.split_off(train_len);
    Ok((shuffled, test))
}
