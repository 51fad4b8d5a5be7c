//! Multichannel series ingestion and the shared frequency grid.

use std::collections::HashSet;
use std::fs::File;
use std::io::{Read, Write};
use std::path::Path;

use nalgebra::DMatrix;

use crate::error::{Error, Result};

/// An N×k block of observations, one column per channel.
#[derive(Debug, Clone, PartialEq)]
pub struct MultivariateSeries {
    names: Vec<String>,
    values: DMatrix<f64>,
    sampling_interval: f64,
}

impl MultivariateSeries {
    pub fn new(names: Vec<String>, values: DMatrix<f64>, sampling_interval: f64) -> Result<Self> {
        if values.nrows() == 0 {
            return Err(Error::NoData);
        }
        if values.ncols() == 0 {
            return Err(Error::Invalid("series has no channels".into()));
        }
        if names.len() != values.ncols() {
            return Err(Error::DimensionMismatch {
                what: "channel names",
                expected: values.ncols(),
                found: names.len(),
            });
        }
        let mut seen = HashSet::new();
        for name in &names {
            if !seen.insert(name.as_str()) {
                return Err(Error::Invalid(format!("duplicate channel name {name:?}")));
            }
        }
        if let Some(idx) = values.iter().position(|v| !v.is_finite()) {
            let (row, col) = (idx % values.nrows(), idx / values.nrows());
            return Err(Error::Invalid(format!(
                "non-finite value at row {}, column {}",
                row + 1,
                col + 1
            )));
        }
        if !(sampling_interval.is_finite() && sampling_interval > 0.0) {
            return Err(Error::Invalid(format!(
                "sampling interval must be positive, got {sampling_interval}"
            )));
        }
        Ok(Self {
            names,
            values,
            sampling_interval,
        })
    }

    /// Builds a series with generated names `x1..xk` and unit sampling interval.
    pub fn from_matrix(values: DMatrix<f64>) -> Result<Self> {
        let names = default_names(values.ncols());
        Self::new(names, values, 1.0)
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn values(&self) -> &DMatrix<f64> {
        &self.values
    }

    pub fn sampling_interval(&self) -> f64 {
        self.sampling_interval
    }

    /// Number of time steps.
    pub fn len(&self) -> usize {
        self.values.nrows()
    }

    pub fn is_empty(&self) -> bool {
        self.values.nrows() == 0
    }

    /// Number of channels.
    pub fn channels(&self) -> usize {
        self.values.ncols()
    }

    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut writer = csv::Writer::from_writer(out);
        let io_err = |e: csv::Error| Error::Invalid(format!("csv write failed: {e}"));
        writer.write_record(&self.names).map_err(io_err)?;
        for row in self.values.row_iter() {
            writer
                .write_record(row.iter().map(|v| format!("{v:?}")))
                .map_err(io_err)?;
        }
        writer
            .flush()
            .map_err(|e| Error::Invalid(format!("csv write failed: {e}")))?;
        Ok(())
    }
}

pub(crate) fn default_names(k: usize) -> Vec<String> {
    (1..=k).map(|i| format!("x{i}")).collect()
}

/// Reads a comma-separated file with one row per time step.
///
/// Row numbers in errors are 1-based line numbers of the file.
pub fn load_csv(path: impl AsRef<Path>, has_header: bool, sampling_interval: f64) -> Result<MultivariateSeries> {
    let path = path.as_ref();
    let mut text = String::new();
    File::open(path)
        .and_then(|mut f| f.read_to_string(&mut text))
        .map_err(|source| Error::Io {
            path: path.to_path_buf(),
            source,
        })?;
    parse_csv(&text, has_header, sampling_interval)
}

/// Parses CSV text; see [`load_csv`].
pub fn parse_csv(text: &str, has_header: bool, sampling_interval: f64) -> Result<MultivariateSeries> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(text.as_bytes());

    let mut names: Option<Vec<String>> = None;
    let mut width: Option<usize> = None;
    let mut data: Vec<f64> = Vec::new();
    let mut rows = 0usize;

    for (i, record) in reader.records().enumerate() {
        let record = record.map_err(|e| Error::Invalid(format!("csv parse failed: {e}")))?;
        let line = record.position().map(|p| p.line() as usize).unwrap_or(i + 1);
        if record.iter().all(str::is_empty) {
            continue;
        }
        if has_header && names.is_none() {
            names = Some(record.iter().map(str::to_owned).collect());
            width = Some(record.len());
            continue;
        }
        let expected = *width.get_or_insert(record.len());
        if record.len() != expected {
            return Err(Error::RaggedRow {
                row: line,
                expected,
                found: record.len(),
            });
        }
        for (j, cell) in record.iter().enumerate() {
            let value: f64 = cell.parse().map_err(|_| Error::NonNumeric {
                row: line,
                col: j + 1,
                value: cell.to_owned(),
            })?;
            if !value.is_finite() {
                return Err(Error::NonNumeric {
                    row: line,
                    col: j + 1,
                    value: cell.to_owned(),
                });
            }
            data.push(value);
        }
        rows += 1;
    }

    let k = width.unwrap_or(0);
    if rows == 0 {
        return Err(Error::NoData);
    }
    if k == 0 {
        return Err(Error::Invalid("no columns".into()));
    }
    let values = DMatrix::from_row_slice(rows, k, &data);
    let names = names.unwrap_or_else(|| default_names(k));
    MultivariateSeries::new(names, values, sampling_interval)
}

/// Subtracts each column's sample mean.
pub fn demean(series: &MultivariateSeries) -> MultivariateSeries {
    let mut values = series.values.clone();
    let n = values.nrows() as f64;
    for mut col in values.column_iter_mut() {
        let mean = col.iter().sum::<f64>() / n;
        col.iter_mut().for_each(|v| *v -= mean);
    }
    MultivariateSeries {
        names: series.names.clone(),
        values,
        sampling_interval: series.sampling_interval,
    }
}

/// Ascending frequencies in cycles/sample, all within [0, 0.5].
#[derive(Debug, Clone, PartialEq)]
pub struct FrequencyGrid {
    points: Vec<f64>,
}

impl FrequencyGrid {
    pub fn new(points: Vec<f64>) -> Result<Self> {
        if points.is_empty() {
            return Err(Error::Invalid("frequency grid is empty".into()));
        }
        if points.iter().any(|f| !(0.0..=0.5).contains(f)) {
            return Err(Error::Invalid("grid frequencies must lie in [0, 0.5]".into()));
        }
        if points.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::Invalid("grid frequencies must be strictly increasing".into()));
        }
        Ok(Self { points })
    }

    pub fn points(&self) -> &[f64] {
        &self.points
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }
}

/// Uniform grid of `n_points` frequencies from 0 to `f_max` inclusive.
pub fn make_grid(n_points: usize, f_max: f64) -> Result<FrequencyGrid> {
    if n_points < 2 {
        return Err(Error::Invalid(format!("grid needs at least 2 points, got {n_points}")));
    }
    if !(f_max > 0.0 && f_max <= 0.5) {
        return Err(Error::Invalid(format!("f_max must lie in (0, 0.5], got {f_max}")));
    }
    let step = f_max / (n_points - 1) as f64;
    let mut points: Vec<f64> = (0..n_points).map(|i| i as f64 * step).collect();
    points[n_points - 1] = f_max;
    FrequencyGrid::new(points)
}
