// SPDX-License-Identifier: MIT OR Apache-2.0

//! Multivariate ROI time series: the in-memory matrix type, CSV I/O, row
//! standardization and the synthetic cohort generator.

mod synth;

pub use synth::{generate_synthetic, GroundTruth, SubjectTruth, SyntheticCohortSpec};

use std::fmt::Write as _;
use std::path::Path;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Real m×T matrix of region signals, ROIs as rows and time points as columns.
///
/// Whole series carry T ≥ 2; blocks cut out of a series may be a single column.
#[derive(Debug, Clone, PartialEq)]
pub struct RoiTimeSeries {
    values: DMatrix<f64>,
}

impl RoiTimeSeries {
    pub fn new(values: DMatrix<f64>) -> Result<Self> {
        if values.nrows() == 0 || values.ncols() == 0 {
            return Err(Error::EmptyInput);
        }
        if let Some(pos) = values.iter().position(|v| !v.is_finite()) {
            let (row, col) = (pos % values.nrows(), pos / values.nrows());
            return Err(Error::Numerical(format!("non-finite value at roi {}, time {}", row + 1, col + 1)));
        }
        Ok(RoiTimeSeries { values })
    }

    /// Builds a series from per-ROI rows.
    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let m = rows.len();
        let t = rows.first().map_or(0, Vec::len);
        if let Some(i) = rows.iter().position(|r| r.len() != t) {
            return Err(Error::Format { row: i + 1, expected: t, found: rows[i].len() });
        }
        Self::new(DMatrix::from_fn(m, t, |i, j| rows[i][j]))
    }

    pub fn roi_count(&self) -> usize {
        self.values.nrows()
    }

    pub fn len(&self) -> usize {
        self.values.ncols()
    }

    pub fn is_empty(&self) -> bool {
        self.values.ncols() == 0
    }

    pub fn values(&self) -> &DMatrix<f64> {
        &self.values
    }

    pub fn into_values(self) -> DMatrix<f64> {
        self.values
    }

    /// Columns `[start, end)` as a new series (0-based, half open).
    pub fn columns(&self, start: usize, end: usize) -> RoiTimeSeries {
        RoiTimeSeries { values: self.values.columns(start, end - start).into_owned() }
    }

    pub fn scaled(&self, factor: f64) -> RoiTimeSeries {
        RoiTimeSeries { values: &self.values * factor }
    }
}

/// How ROIs are laid out in a series CSV.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Orientation {
    #[default]
    Rows,
    Cols,
}

impl std::str::FromStr for Orientation {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "rows" => Ok(Orientation::Rows),
            "cols" => Ok(Orientation::Cols),
            other => Err(Error::Config(format!("orientation must be `rows` or `cols`, got {other:?}"))),
        }
    }
}

/// Parses series CSV text. A first row in which no cell parses as a number is a header.
pub fn parse_series(text: &str, orientation: Orientation) -> Result<RoiTimeSeries> {
    let mut reader =
        csv::ReaderBuilder::new().has_headers(false).flexible(true).trim(csv::Trim::All).from_reader(text.as_bytes());

    let mut rows: Vec<Vec<f64>> = Vec::new();
    let mut width = None;
    for (i, record) in reader.records().enumerate() {
        let record = record.map_err(|e| Error::Spec(format!("malformed csv: {e}")))?;
        let file_row = i + 1;
        if record.iter().all(str::is_empty) {
            continue;
        }
        if i == 0 && record.iter().all(|c| c.parse::<f64>().is_err()) {
            continue;
        }
        let expected = *width.get_or_insert(record.len());
        if record.len() != expected {
            return Err(Error::Format { row: file_row, expected, found: record.len() });
        }
        let row = record
            .iter()
            .enumerate()
            .map(|(j, cell)| match cell.parse::<f64>() {
                Ok(v) if v.is_finite() => Ok(v),
                _ => Err(Error::Parse { row: file_row, col: j + 1, text: cell.to_string() }),
            })
            .collect::<Result<Vec<_>>>()?;
        rows.push(row);
    }
    if rows.is_empty() {
        return Err(Error::EmptyInput);
    }
    let series = RoiTimeSeries::from_rows(&rows)?;
    Ok(match orientation {
        Orientation::Rows => series,
        Orientation::Cols => RoiTimeSeries { values: series.values.transpose() },
    })
}

pub fn load_series(path: impl AsRef<Path>, orientation: Orientation) -> Result<RoiTimeSeries> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_series(&text, orientation)
}

/// Renders the series as CSV, one ROI per line, using shortest round-trip decimals.
pub fn format_series(series: &RoiTimeSeries) -> String {
    let mut out = String::new();
    for row in series.values.row_iter() {
        for (j, v) in row.iter().enumerate() {
            if j > 0 {
                out.push(',');
            }
            write!(out, "{v}").unwrap();
        }
        out.push('\n');
    }
    out
}

pub fn save_series(path: impl AsRef<Path>, series: &RoiTimeSeries) -> Result<()> {
    let path = path.as_ref();
    std::fs::write(path, format_series(series)).map_err(|e| Error::io(path, e))
}

/// Z-scores every ROI row (sample standard deviation). Zero-variance rows become zeros.
pub fn standardize(series: &RoiTimeSeries) -> Result<RoiTimeSeries> {
    if series.len() < 2 {
        return Err(Error::Dimension(format!("standardize needs at least 2 time points, got {}", series.len())));
    }
    Ok(standardize_rows(series))
}

/// Row z-scoring that also accepts single-column blocks (mapped to zeros).
pub(crate) fn standardize_rows(series: &RoiTimeSeries) -> RoiTimeSeries {
    let t = series.len();
    let mut values = series.values.clone();
    for mut row in values.row_iter_mut() {
        let mean = row.iter().sum::<f64>() / t as f64;
        row.iter_mut().for_each(|v| *v -= mean);
        let ss: f64 = row.iter().map(|v| v * v).sum();
        let sd = if t > 1 { (ss / (t - 1) as f64).sqrt() } else { 0.0 };
        if sd > 0.0 && sd.is_finite() {
            row.iter_mut().for_each(|v| *v /= sd);
        } else {
            row.fill(0.0);
        }
    }
    RoiTimeSeries { values }
}
