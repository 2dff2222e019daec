//! CSV ingestion of grouped utility samples and emission of plot-ready data
//! files. Output files are written atomically (temp file + rename).

use std::collections::BTreeMap;
use std::fs::File;
use std::io::Write;
use std::path::Path;

use crate::error::{Error, Result};
use crate::fit::FitReport;
use crate::grid::Density;
use crate::netgen::DegreeRecord;
use crate::selection::{Group, Intervention};

/// Samples keyed by group label, with a count of rows skipped during loading.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct GroupedSamples {
    pub groups: BTreeMap<String, Vec<f64>>,
    pub skipped_rows: usize,
}

impl GroupedSamples {
    pub fn get(&self, label: &str) -> Option<&[f64]> {
        self.groups.get(label).map(Vec::as_slice)
    }

    /// All sample values across groups.
    pub fn all_values(&self) -> Vec<f64> {
        self.groups.values().flatten().copied().collect()
    }
}

/// Row filters applied while loading.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct CsvFilters {
    /// Keep only rows with value >= this.
    pub min_value: Option<f64>,
    /// Keep only rows with value <= this.
    pub max_value: Option<f64>,
}

/// Load a CSV with named header columns into per-group sample lists.
///
/// Non-numeric values and rows failing the filters are counted and skipped.
pub fn load_grouped_csv(
    path: &Path,
    value_column: &str,
    group_column: &str,
    filters: CsvFilters,
) -> Result<GroupedSamples> {
    let mut reader = csv::Reader::from_path(path)?;
    let headers = reader.headers()?.clone();
    let value_idx = headers
        .iter()
        .position(|h| h == value_column)
        .ok_or_else(|| Error::MissingColumn(value_column.to_string()))?;
    let group_idx = headers
        .iter()
        .position(|h| h == group_column)
        .ok_or_else(|| Error::MissingColumn(group_column.to_string()))?;

    let mut out = GroupedSamples::default();
    for record in reader.records() {
        let record = record?;
        let value = record.get(value_idx).and_then(|v| v.trim().parse::<f64>().ok());
        let group = record.get(group_idx).map(str::trim);
        let (value, group) = match (value, group) {
            (Some(v), Some(g)) if v.is_finite() && !g.is_empty() => (v, g),
            _ => {
                out.skipped_rows += 1;
                continue;
            }
        };
        if filters.min_value.is_some_and(|m| value < m)
            || filters.max_value.is_some_and(|m| value > m)
        {
            out.skipped_rows += 1;
            continue;
        }
        out.groups.entry(group.to_string()).or_default().push(value);
    }
    if out.groups.is_empty() {
        return Err(Error::NoUsableRows {
            skipped: out.skipped_rows,
        });
    }
    Ok(out)
}

/// Write grouped samples back out with the given column names.
pub fn write_grouped_csv(
    path: &Path,
    samples: &GroupedSamples,
    value_column: &str,
    group_column: &str,
) -> Result<()> {
    write_atomic(path, |out| {
        writeln!(out, "{value_column},{group_column}")?;
        for (label, values) in &samples.groups {
            for v in values {
                writeln!(out, "{v:.16e},{label}")?;
            }
        }
        Ok(())
    })
}

/// Write network degrees as a grouped sample CSV (`degree,group`).
pub fn write_degree_csv(path: &Path, records: &[DegreeRecord]) -> Result<()> {
    write_atomic(path, |out| {
        writeln!(out, "vertex,group,degree")?;
        for r in records {
            let label = match r.group {
                Group::Advantaged => "G1",
                Group::Disadvantaged => "G2",
            };
            writeln!(out, "{},{label},{}", r.vertex, r.degree)?;
        }
        Ok(())
    })
}

/// One point of a selection curve.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize)]
pub struct SelectionCurveRow {
    pub k: usize,
    pub intervention: Intervention,
    pub mean_ratio: f64,
    pub sem: f64,
}

/// Plot-ready datasets with fixed column layouts.
#[derive(Debug)]
pub enum PlotData<'a> {
    /// Columns `x,f,g`: two densities on a shared grid.
    DensityOverlay { f: &'a Density, g: &'a Density },
    /// Columns `alpha,tau,shift,tv`: one row per evaluated triple.
    FitReport(&'a FitReport),
    /// Columns `k,intervention,mean_ratio,sem`.
    SelectionCurves(&'a [SelectionCurveRow]),
}

/// Emit a plot-data CSV with deterministic row order.
pub fn emit_plot_data(data: &PlotData<'_>, path: &Path) -> Result<()> {
    match data {
        PlotData::DensityOverlay { f, g } => {
            if f.grid() != g.grid() {
                return Err(Error::GridMismatch);
            }
            write_atomic(path, |out| {
                writeln!(out, "x,f,g")?;
                for (i, &x) in f.grid().points().iter().enumerate() {
                    writeln!(out, "{x:.16e},{:.16e},{:.16e}", f.value_at(i), g.value_at(i))?;
                }
                Ok(())
            })
        }
        PlotData::FitReport(report) => write_atomic(path, |out| report.write_csv(out)),
        PlotData::SelectionCurves(rows) => write_atomic(path, |out| {
            writeln!(out, "k,intervention,mean_ratio,sem")?;
            for r in *rows {
                writeln!(
                    out,
                    "{},{},{:.16e},{:.16e}",
                    r.k, r.intervention, r.mean_ratio, r.sem
                )?;
            }
            Ok(())
        }),
    }
}

/// Write through a temp file in the destination directory, then rename.
pub fn write_atomic(path: &Path, write: impl FnOnce(&mut File) -> Result<()>) -> Result<()> {
    let name = format!(
        ".{}.tmp",
        path.file_name().and_then(|n| n.to_str()).unwrap_or("out")
    );
    let tmp_path = match path.parent().filter(|p| !p.as_os_str().is_empty()) {
        Some(d) => d.join(name),
        None => std::path::PathBuf::from(name),
    };
    let mut file = File::create(&tmp_path)?;
    match write(&mut file).and_then(|()| file.flush().map_err(Into::into)) {
        Ok(()) => {
            drop(file);
            std::fs::rename(&tmp_path, path)?;
            Ok(())
        }
        Err(e) => {
            drop(file);
            let _ = std::fs::remove_file(&tmp_path);
            Err(e)
        }
    }
}
