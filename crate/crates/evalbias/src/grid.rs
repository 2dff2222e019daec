//! Finite-support densities: grids with reference weights, probability masses,
//! entropy/moments, CDF/quantile machinery, and total-variation distance.
//!
//! A [`Grid`] carries per-point reference weights so the same representation
//! serves both discretized continuous densities (weight = cell width, entropy
//! is differential) and discrete score sets (weight = 1, entropy is Shannon).

use std::io::{BufRead, BufReader, Read, Write};
use std::sync::Arc;

use crate::error::{Error, Result};

/// Mass tolerance: a density's masses must sum to 1 within this.
pub const MASS_TOLERANCE: f64 = 1e-12;

/// What the reference weights mean.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub enum GridKind {
    /// Truncated continuum; weights are cell widths.
    Continuum,
    /// Explicit value set under counting measure; weights are 1.
    Discrete,
}

#[derive(Debug)]
struct GridData {
    points: Vec<f64>,
    weights: Vec<f64>,
    kind: GridKind,
}

/// Ordered support points with positive reference weights.
#[derive(Debug, Clone)]
pub struct Grid(Arc<GridData>);

impl PartialEq for Grid {
    fn eq(&self, other: &Self) -> bool {
        Arc::ptr_eq(&self.0, &other.0)
            || (self.0.kind == other.0.kind
                && self.0.points == other.0.points
                && self.0.weights == other.0.weights)
    }
}

impl Grid {
    /// Uniformly spaced grid over `[lo, hi]`; every point carries the spacing as weight.
    pub fn continuum(lo: f64, hi: f64, count: usize) -> Result<Self> {
        if !(lo.is_finite() && hi.is_finite() && lo < hi) {
            return Err(Error::DegenerateGrid(format!(
                "continuum bounds must be finite with lo < hi, got [{lo}, {hi}]"
            )));
        }
        if count < 2 {
            return Err(Error::DegenerateGrid(format!(
                "continuum grid needs at least 2 points, got {count}"
            )));
        }
        let step = (hi - lo) / (count - 1) as f64;
        let points = crate::math::linspace(lo, hi, count);
        let weights = vec![step; count];
        Ok(Self(Arc::new(GridData {
            points,
            weights,
            kind: GridKind::Continuum,
        })))
    }

    /// Counting-measure grid on an explicit value set (sorted, deduplicated).
    pub fn discrete(values: &[f64]) -> Result<Self> {
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::DegenerateGrid("non-finite support point".into()));
        }
        let mut points = values.to_vec();
        points.sort_by(|a, b| a.total_cmp(b));
        points.dedup();
        if points.len() < 2 {
            return Err(Error::DegenerateGrid(format!(
                "discrete grid needs at least 2 distinct points, got {}",
                points.len()
            )));
        }
        let weights = vec![1.0; points.len()];
        Ok(Self(Arc::new(GridData {
            points,
            weights,
            kind: GridKind::Discrete,
        })))
    }

    /// Grid from explicit points and weights (points strictly increasing, weights positive).
    pub fn from_parts(points: Vec<f64>, weights: Vec<f64>, kind: GridKind) -> Result<Self> {
        if points.len() < 2 || points.len() != weights.len() {
            return Err(Error::DegenerateGrid(format!(
                "need >= 2 points and matching weights, got {} points / {} weights",
                points.len(),
                weights.len()
            )));
        }
        if points.windows(2).any(|w| w[0] >= w[1]) || points.iter().any(|p| !p.is_finite()) {
            return Err(Error::DegenerateGrid(
                "points must be finite and strictly increasing".into(),
            ));
        }
        if weights.iter().any(|&w| w <= 0.0 || !w.is_finite()) {
            return Err(Error::DegenerateGrid(
                "weights must be positive and finite".into(),
            ));
        }
        Ok(Self(Arc::new(GridData {
            points,
            weights,
            kind,
        })))
    }

    pub fn points(&self) -> &[f64] {
        &self.0.points
    }

    pub fn weights(&self) -> &[f64] {
        &self.0.weights
    }

    pub fn kind(&self) -> GridKind {
        self.0.kind
    }

    pub fn len(&self) -> usize {
        self.0.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.points.is_empty()
    }

    pub fn lo(&self) -> f64 {
        self.0.points[0]
    }

    pub fn hi(&self) -> f64 {
        *self.0.points.last().unwrap()
    }

    /// Total reference measure.
    pub fn weight_sum(&self) -> f64 {
        self.0.weights.iter().sum()
    }

    /// Entropy of the uniform density on this grid: the largest achievable entropy.
    pub fn max_entropy(&self) -> f64 {
        self.weight_sum().ln()
    }

    /// Index of the grid point nearest to `x`; exact midpoints go to the lower index.
    pub fn nearest_index(&self, x: f64) -> usize {
        let pts = self.points();
        let i = pts.partition_point(|&p| p < x);
        if i == 0 {
            return 0;
        }
        if i == pts.len() {
            return pts.len() - 1;
        }
        // distance tie -> lower index
        if (x - pts[i - 1]) <= (pts[i] - x) {
            i - 1
        } else {
            i
        }
    }
}

/// Mean, variance, and entropy of a density.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize)]
pub struct MomentSummary {
    pub mean: f64,
    pub variance: f64,
    pub entropy: f64,
}

/// A probability density on a [`Grid`]: per-point masses summing to one.
#[derive(Debug, Clone, PartialEq)]
pub struct Density {
    grid: Grid,
    masses: Vec<f64>,
}

impl Density {
    /// Normalize a non-negative raw mass vector into a density.
    pub fn normalize(raw: &[f64], grid: &Grid) -> Result<Self> {
        if raw.len() != grid.len() {
            return Err(Error::DegenerateGrid(format!(
                "mass vector length {} does not match grid size {}",
                raw.len(),
                grid.len()
            )));
        }
        if raw.iter().any(|v| !v.is_finite() || *v < 0.0) {
            return Err(Error::InvalidMasses);
        }
        let total: f64 = raw.iter().sum();
        if total <= 0.0 {
            return Err(Error::InvalidMasses);
        }
        let masses = raw.iter().map(|v| v / total).collect();
        Ok(Self {
            grid: grid.clone(),
            masses,
        })
    }

    /// The maximum-entropy density: mass proportional to the reference weights.
    pub fn uniform(grid: &Grid) -> Self {
        Self::normalize(grid.weights(), grid).expect("weights are positive")
    }

    /// All mass on the grid point nearest to `x`.
    pub fn point_mass(grid: &Grid, x: f64) -> Self {
        let mut raw = vec![0.0; grid.len()];
        raw[grid.nearest_index(x)] = 1.0;
        Self {
            grid: grid.clone(),
            masses: raw,
        }
    }

    /// Histogram of samples by nearest grid point (midpoint ties to the lower index).
    ///
    /// Samples outside `[lo, hi]` are an error reporting their count.
    pub fn empirical(samples: &[f64], grid: &Grid) -> Result<Self> {
        if samples.is_empty() {
            return Err(Error::EmptySamples);
        }
        let (lo, hi) = (grid.lo(), grid.hi());
        let out_of_range = samples.iter().filter(|&&s| s < lo || s > hi).count();
        if out_of_range > 0 {
            return Err(Error::OutOfRangeSamples {
                count: out_of_range,
                lo,
                hi,
            });
        }
        let mut raw = vec![0.0; grid.len()];
        for &s in samples {
            raw[grid.nearest_index(s)] += 1.0;
        }
        Self::normalize(&raw, grid)
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn masses(&self) -> &[f64] {
        &self.masses
    }

    /// Density value at index `i` with respect to the reference measure: `p_i / w_i`.
    pub fn value_at(&self, i: usize) -> f64 {
        self.masses[i] / self.grid.weights()[i]
    }

    /// Entropy with respect to the reference weights: `-sum p ln(p/w)` with `0 ln 0 = 0`.
    ///
    /// Differential entropy on continuum grids, Shannon entropy on counting grids.
    pub fn entropy(&self) -> f64 {
        let w = self.grid.weights();
        self.masses
            .iter()
            .zip(w)
            .filter(|(&p, _)| p > 0.0)
            .map(|(&p, &w)| -p * (p / w).ln())
            .sum()
    }

    pub fn moments(&self) -> MomentSummary {
        let pts = self.grid.points();
        let mean: f64 = self.masses.iter().zip(pts).map(|(&p, &x)| p * x).sum();
        let variance: f64 = self
            .masses
            .iter()
            .zip(pts)
            .map(|(&p, &x)| p * (x - mean) * (x - mean))
            .sum();
        MomentSummary {
            mean,
            variance,
            entropy: self.entropy(),
        }
    }

    /// Total-variation distance to another density on the same grid.
    pub fn tv_distance(&self, other: &Density) -> Result<f64> {
        if self.grid != other.grid {
            return Err(Error::GridMismatch);
        }
        Ok(self
            .masses
            .iter()
            .zip(&other.masses)
            .map(|(p, q)| (p - q).abs())
            .sum::<f64>()
            / 2.0)
    }

    /// Cumulative table for quantile lookups.
    pub fn cdf(&self) -> Cdf {
        let mut cumulative = Vec::with_capacity(self.masses.len());
        let mut acc = 0.0;
        for &p in &self.masses {
            acc += p;
            // rounding in the running sum may overshoot 1 by an ulp
            cumulative.push(acc.min(1.0));
        }
        Cdf {
            grid: self.grid.clone(),
            masses: self.masses.clone(),
            cumulative,
        }
    }
}

/// Cumulative distribution of a [`Density`] with quantile lookup.
#[derive(Debug, Clone)]
pub struct Cdf {
    grid: Grid,
    masses: Vec<f64>,
    cumulative: Vec<f64>,
}

impl Cdf {
    /// Cumulative mass up to and including support point `i`.
    pub fn table(&self) -> &[f64] {
        &self.cumulative
    }

    /// Smallest support point whose cumulative mass reaches `u`.
    pub fn quantile(&self, u: f64) -> Result<f64> {
        if !(0.0..=1.0).contains(&u) || u.is_nan() {
            return Err(Error::QuantileOutOfRange(u));
        }
        let i = self.cumulative.partition_point(|&c| c < u);
        let i = i.min(self.grid.len() - 1);
        Ok(self.grid.points()[i])
    }

    /// CDF at support point `i` under the midpoint convention `F_i - p_i / 2`,
    /// the level at which coupled draws sit.
    pub fn at_midpoint(&self, i: usize) -> f64 {
        self.cumulative[i] - self.masses[i] / 2.0
    }
}

const CSV_HEADER: &str = "x,weight,mass";

impl Density {
    /// Write as CSV (`x,weight,mass`) with 17 significant digits, enough for an
    /// exact binary round-trip.
    pub fn write_csv<W: Write>(&self, mut out: W) -> Result<()> {
        writeln!(out, "{CSV_HEADER}")?;
        for i in 0..self.grid.len() {
            writeln!(
                out,
                "{:.16e},{:.16e},{:.16e}",
                self.grid.points()[i],
                self.grid.weights()[i],
                self.masses[i]
            )?;
        }
        Ok(())
    }

    /// Read a density written by [`Density::write_csv`].
    ///
    /// The grid kind is inferred: all-unit weights read back as a counting grid.
    pub fn read_csv<R: Read>(input: R) -> Result<Self> {
        let reader = BufReader::new(input);
        let mut lines = reader.lines();
        match lines.next() {
            Some(Ok(h)) if h.trim() == CSV_HEADER => {}
            Some(Ok(h)) => {
                return Err(Error::MalformedDensityCsv(format!(
                    "expected header {CSV_HEADER:?}, got {h:?}"
                )))
            }
            Some(Err(e)) => return Err(e.into()),
            None => return Err(Error::MalformedDensityCsv("empty file".into())),
        }
        let mut points = Vec::new();
        let mut weights = Vec::new();
        let mut masses = Vec::new();
        for (lineno, line) in lines.enumerate() {
            let line = line?;
            if line.trim().is_empty() {
                continue;
            }
            let mut fields = line.split(',');
            let mut next = |name: &str| -> Result<f64> {
                fields
                    .next()
                    .ok_or_else(|| {
                        Error::MalformedDensityCsv(format!("row {}: missing {name}", lineno + 2))
                    })?
                    .trim()
                    .parse::<f64>()
                    .map_err(|e| {
                        Error::MalformedDensityCsv(format!("row {}: {name}: {e}", lineno + 2))
                    })
            };
            points.push(next("x")?);
            weights.push(next("weight")?);
            masses.push(next("mass")?);
        }
        let kind = if weights.iter().all(|&w| w == 1.0) {
            GridKind::Discrete
        } else {
            GridKind::Continuum
        };
        let grid = Grid::from_parts(points, weights, kind)?;
        let total: f64 = masses.iter().sum();
        if (total - 1.0).abs() > 1e-9 {
            return Err(Error::MalformedDensityCsv(format!(
                "masses sum to {total}, expected 1"
            )));
        }
        Ok(Self { grid, masses })
    }
}
