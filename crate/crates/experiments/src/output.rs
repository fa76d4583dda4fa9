//! File formats shared with the plotting tools.
//!
//! - time series: CSV with a header row, every value in scientific notation
//!   with nine digits after the decimal point, blank cells for values not
//!   evaluated;
//! - metadata: JSON next to the CSV, echoing the scenario;
//! - density matrices: first line `shape,D,D`, then one line per row holding
//!   `re,im` pairs;
//! - Wigner grids: long format `x,p,w`.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use kerrfilter::metrics::WignerGrid;
use kerrfilter::{DensityMatrix, C64};
use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{ExperimentError, Result};
use crate::presets::DERIVED_NOTE;
use crate::runner::Summary;
use crate::scenario::Scenario;

/// Rows of a recorded run; `None` marks a value not evaluated at that row.
#[derive(Debug, Clone, PartialEq)]
pub struct TimeSeriesRecord {
    columns: Vec<String>,
    rows: Vec<Vec<Option<f64>>>,
}

impl TimeSeriesRecord {
    pub fn new(columns: Vec<String>) -> Self {
        TimeSeriesRecord {
            columns,
            rows: Vec::new(),
        }
    }

    /// Panics if the row width differs from the header.
    pub fn push(&mut self, row: Vec<Option<f64>>) {
        assert_eq!(row.len(), self.columns.len(), "row width");
        self.rows.push(row);
    }

    pub fn columns(&self) -> &[String] {
        &self.columns
    }

    pub fn rows(&self) -> &[Vec<Option<f64>>] {
        &self.rows
    }

    pub fn column_index(&self, name: &str) -> Option<usize> {
        self.columns.iter().position(|c| c == name)
    }

    /// Values of one column, skipping blanks.
    pub fn column(&self, name: &str) -> Option<Vec<f64>> {
        let i = self.column_index(name)?;
        Some(self.rows.iter().filter_map(|r| r[i]).collect())
    }
}

fn format_value(v: Option<f64>) -> String {
    v.map(|x| format!("{x:.9e}")).unwrap_or_default()
}

pub fn write_timeseries(rec: &TimeSeriesRecord, path: &Path) -> Result<()> {
    let file = File::create(path).map_err(|e| ExperimentError::io(path, e))?;
    let mut w = csv::Writer::from_writer(BufWriter::new(file));
    let csv_err = |e: csv::Error| ExperimentError::format(path, e);
    w.write_record(&rec.columns).map_err(csv_err)?;
    for row in &rec.rows {
        w.write_record(row.iter().map(|v| format_value(*v))).map_err(csv_err)?;
    }
    w.flush().map_err(|e| ExperimentError::io(path, e))
}

pub fn read_timeseries(path: &Path) -> Result<TimeSeriesRecord> {
    let mut r = csv::Reader::from_path(path).map_err(|e| ExperimentError::format(path, e))?;
    let columns: Vec<String> = r
        .headers()
        .map_err(|e| ExperimentError::format(path, e))?
        .iter()
        .map(String::from)
        .collect();
    let mut rec = TimeSeriesRecord::new(columns);
    for (i, line) in r.records().enumerate() {
        let line = line.map_err(|e| ExperimentError::format(path, e))?;
        let row = line
            .iter()
            .enumerate()
            .map(|(j, cell)| {
                if cell.is_empty() {
                    Ok(None)
                } else {
                    cell.parse::<f64>().map(Some).map_err(|e| {
                        ExperimentError::format(path, format!("row {}, column `{}`: {e}", i + 1, rec.columns[j]))
                    })
                }
            })
            .collect::<Result<Vec<_>>>()?;
        rec.push(row);
    }
    Ok(rec)
}

/// Companion JSON of a time series.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Metadata {
    pub scenario: Scenario,
    pub version: String,
    pub runtime_seconds: f64,
    /// Parameters chosen for this preset rather than taken from a figure.
    pub derived: bool,
    pub summary: Summary,
}

impl Metadata {
    pub fn new(scenario: &Scenario, runtime_seconds: f64, summary: Summary) -> Self {
        Metadata {
            scenario: scenario.clone(),
            version: env!("CARGO_PKG_VERSION").to_string(),
            runtime_seconds,
            derived: scenario.notes.contains_key(DERIVED_NOTE),
            summary,
        }
    }
}

pub fn write_metadata(meta: &Metadata, path: &Path) -> Result<()> {
    let text = serde_json::to_string_pretty(meta).map_err(|e| ExperimentError::format(path, e))?;
    std::fs::write(path, text + "\n").map_err(|e| ExperimentError::io(path, e))
}

pub fn read_metadata(path: &Path) -> Result<serde_json::Value> {
    let text = std::fs::read_to_string(path).map_err(|e| ExperimentError::io(path, e))?;
    serde_json::from_str(&text).map_err(|e| ExperimentError::format(path, e))
}

/// Shortest representation that parses back to the same `f64`.
fn exact(x: f64) -> String {
    format!("{x:e}")
}

pub fn write_density(rho: &DensityMatrix, path: &Path) -> Result<()> {
    let file = File::create(path).map_err(|e| ExperimentError::io(path, e))?;
    let mut w = BufWriter::new(file);
    let d = rho.dim();
    let io = |e| ExperimentError::io(path, e);
    writeln!(w, "shape,{d},{d}").map_err(io)?;
    for r in 0..d {
        let line: Vec<String> = (0..d)
            .flat_map(|c| {
                let z = rho.get(r, c);
                [exact(z.re), exact(z.im)]
            })
            .collect();
        writeln!(w, "{}", line.join(",")).map_err(io)?;
    }
    w.flush().map_err(io)
}

pub fn read_density(path: &Path) -> Result<DensityMatrix> {
    let file = File::open(path).map_err(|e| ExperimentError::io(path, e))?;
    let mut lines = BufReader::new(file).lines();
    let bad = |m: String| ExperimentError::format(path, m);
    let header = lines
        .next()
        .ok_or_else(|| bad("empty file".into()))?
        .map_err(|e| ExperimentError::io(path, e))?;
    let dims: Vec<&str> = header.trim().split(',').collect();
    let d = match dims.as_slice() {
        ["shape", a, b] if a == b => a.parse::<usize>().map_err(|e| bad(format!("shape: {e}")))?,
        _ => return Err(bad(format!("expected `shape,D,D`, found `{header}`"))),
    };
    let mut entries = DMatrix::zeros(d, d);
    for r in 0..d {
        let line = lines
            .next()
            .ok_or_else(|| bad(format!("expected {d} rows, found {r}")))?
            .map_err(|e| ExperimentError::io(path, e))?;
        let vals = line
            .trim()
            .split(',')
            .map(|v| v.parse::<f64>())
            .collect::<std::result::Result<Vec<_>, _>>()
            .map_err(|e| bad(format!("row {}: {e}", r + 1)))?;
        if vals.len() != 2 * d {
            return Err(bad(format!("row {}: expected {} values, found {}", r + 1, 2 * d, vals.len())));
        }
        for c in 0..d {
            entries[(r, c)] = C64::new(vals[2 * c], vals[2 * c + 1]);
        }
    }
    DensityMatrix::new(entries).map_err(|e| bad(e.to_string()))
}

pub fn write_wigner(grid: &WignerGrid, path: &Path) -> Result<()> {
    let file = File::create(path).map_err(|e| ExperimentError::io(path, e))?;
    let mut w = csv::Writer::from_writer(BufWriter::new(file));
    let csv_err = |e: csv::Error| ExperimentError::format(path, e);
    w.write_record(["x", "p", "w"]).map_err(csv_err)?;
    for (ip, p) in grid.ps.iter().enumerate() {
        for (ix, x) in grid.xs.iter().enumerate() {
            let w_val = grid.values[ip][ix];
            w.write_record([format_value(Some(*x)), format_value(Some(*p)), format_value(Some(w_val))])
                .map_err(csv_err)?;
        }
    }
    w.flush().map_err(|e| ExperimentError::io(path, e))
}
