//! Loading, cleaning, and standardizing multivariate time-series panels.
//!
//! A panel is an `N x T` matrix of real observations: one row per series,
//! one column per time point. Downstream estimators expect rows that are
//! stationary, zero-mean, and unit-variance; this module provides the
//! transforms that get raw data into that shape.

use std::fmt;
use std::fs;
use std::path::Path;

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::scalar::Real;

/// Which way a CSV file is laid out.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Orientation {
    /// Each CSV row is one series; the first column holds series labels.
    RowsAreSeries,
    /// Each CSV column is one series; the header holds series labels and an
    /// optional first column carries timestamps.
    ColumnsAreSeries,
}

/// Stationarity transform applied to a single series.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum TransformSpec {
    /// Leave the series untouched.
    #[default]
    None,
    /// First difference `x[t] - x[t-1]`.
    FirstDifference,
    /// First difference of logarithms (growth rates); requires positive input.
    LogFirstDifference,
    /// Second difference of logarithms (changes in growth rates).
    LogSecondDifference,
}

impl TransformSpec {
    /// Number of observations consumed by the differencing.
    pub fn order(self) -> usize {
        match self {
            TransformSpec::None => 0,
            TransformSpec::FirstDifference | TransformSpec::LogFirstDifference => 1,
            TransformSpec::LogSecondDifference => 2,
        }
    }

    /// Parses the names used in CLI flags and config files.
    pub fn parse(name: &str) -> Result<Self> {
        match name {
            "none" => Ok(TransformSpec::None),
            "first-difference" | "diff" => Ok(TransformSpec::FirstDifference),
            "log-first-difference" | "log-diff" => Ok(TransformSpec::LogFirstDifference),
            "log-second-difference" | "log-diff2" => Ok(TransformSpec::LogSecondDifference),
            other => Err(Error::InvalidParameter {
                context: format!("unknown transform '{other}'"),
            }),
        }
    }
}

impl fmt::Display for TransformSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let name = match self {
            TransformSpec::None => "none",
            TransformSpec::FirstDifference => "first-difference",
            TransformSpec::LogFirstDifference => "log-first-difference",
            TransformSpec::LogSecondDifference => "log-second-difference",
        };
        f.write_str(name)
    }
}

/// Labeled `N x T` panel of real observations.
#[derive(Debug, Clone, PartialEq)]
pub struct TimePanel<T: Real> {
    labels: Vec<String>,
    values: DMatrix<T>,
    time_index: Option<Vec<String>>,
}

impl<T: Real> TimePanel<T> {
    /// Builds a panel from per-series rows. All rows must share one length.
    pub fn from_rows(labels: Vec<String>, rows: Vec<Vec<T>>) -> Result<Self> {
        if rows.is_empty() || rows[0].is_empty() {
            return Err(Error::InvalidParameter {
                context: "panel must contain at least one series and one observation".into(),
            });
        }
        if labels.len() != rows.len() {
            return Err(Error::DimensionMismatch {
                context: format!("{} labels for {} rows", labels.len(), rows.len()),
            });
        }
        let t = rows[0].len();
        for (i, row) in rows.iter().enumerate() {
            if row.len() != t {
                return Err(Error::Ragged { row: i + 1, found: row.len(), expected: t });
            }
        }
        let values = DMatrix::from_fn(rows.len(), t, |i, j| rows[i][j]);
        Ok(Self { labels, values, time_index: None })
    }

    /// Builds a panel directly from a matrix (rows are series).
    pub fn from_matrix(labels: Vec<String>, values: DMatrix<T>) -> Result<Self> {
        if labels.len() != values.nrows() {
            return Err(Error::DimensionMismatch {
                context: format!("{} labels for {} rows", labels.len(), values.nrows()),
            });
        }
        if values.ncols() == 0 || values.nrows() == 0 {
            return Err(Error::InvalidParameter { context: "empty panel".into() });
        }
        Ok(Self { labels, values, time_index: None })
    }

    /// Attaches a time index (one entry per column).
    pub fn with_time_index(mut self, index: Vec<String>) -> Result<Self> {
        if index.len() != self.len() {
            return Err(Error::DimensionMismatch {
                context: format!("{} timestamps for {} observations", index.len(), self.len()),
            });
        }
        self.time_index = Some(index);
        Ok(self)
    }

    /// Number of series `N`.
    pub fn n_series(&self) -> usize {
        self.values.nrows()
    }

    /// Number of observations `T`.
    pub fn len(&self) -> usize {
        self.values.ncols()
    }

    pub fn is_empty(&self) -> bool {
        self.values.ncols() == 0
    }

    /// Rectangularity ratio `N / T`.
    pub fn ratio(&self) -> T {
        T::from_count(self.n_series()) / T::from_count(self.len())
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn time_index(&self) -> Option<&[String]> {
        self.time_index.as_deref()
    }

    pub fn values(&self) -> &DMatrix<T> {
        &self.values
    }

    /// One series as a plain vector.
    pub fn row(&self, i: usize) -> Vec<T> {
        self.values.row(i).iter().copied().collect()
    }

    /// Restricts the panel to the time window `[start, start + len)`.
    pub fn window(&self, start: usize, len: usize) -> Result<Self> {
        if start + len > self.len() || len == 0 {
            return Err(Error::LagOutOfRange { lag: start, len: self.len() });
        }
        let values = self.values.columns(start, len).into_owned();
        let time_index = self
            .time_index
            .as_ref()
            .map(|idx| idx[start..start + len].to_vec());
        Ok(Self { labels: self.labels.clone(), values, time_index })
    }

    /// Returns true if every entry is finite.
    pub fn is_finite(&self) -> bool {
        self.values.iter().all(|x| x.is_finite())
    }
}

/// Differences, log-differences, or passes through one series.
///
/// The output is shorter than the input by the differencing order.
pub fn transform_series<T: Real>(series: &[T], spec: TransformSpec) -> Result<Vec<T>> {
    transform_series_labeled(series, spec, "series")
}

fn transform_series_labeled<T: Real>(
    series: &[T],
    spec: TransformSpec,
    label: &str,
) -> Result<Vec<T>> {
    let min_len = spec.order().max(1) + 1;
    if series.len() < min_len {
        return Err(Error::TooShort { label: label.into(), len: series.len(), min: min_len });
    }
    let check_positive = |xs: &[T]| -> Result<()> {
        for (i, &x) in xs.iter().enumerate() {
            if x <= T::zero() {
                return Err(Error::NonPositiveLog {
                    label: label.into(),
                    index: i,
                    value: x.to_f64().unwrap_or(f64::NAN),
                });
            }
        }
        Ok(())
    };
    match spec {
        TransformSpec::None => Ok(series.to_vec()),
        TransformSpec::FirstDifference => {
            Ok(series.windows(2).map(|w| w[1] - w[0]).collect())
        }
        TransformSpec::LogFirstDifference => {
            check_positive(series)?;
            Ok(series.windows(2).map(|w| w[1].ln() - w[0].ln()).collect())
        }
        TransformSpec::LogSecondDifference => {
            check_positive(series)?;
            let logs: Vec<T> = series.iter().map(|x| x.ln()).collect();
            let first: Vec<T> = logs.windows(2).map(|w| w[1] - w[0]).collect();
            Ok(first.windows(2).map(|w| w[1] - w[0]).collect())
        }
    }
}

/// Replaces entries farther than `k` interquartile ranges from the median.
///
/// Outliers are replaced by the sample median (keeping the panel rectangular)
/// and their indices reported. With a degenerate `IQR = 0`, only values equal
/// to the median survive.
pub fn remove_outliers<T: Real>(series: &[T], k: T) -> Result<(Vec<T>, Vec<usize>)> {
    if series.len() < 4 {
        return Err(Error::TooShort { label: "series".into(), len: series.len(), min: 4 });
    }
    let median = quantile(series, T::cast(0.5));
    let q1 = quantile(series, T::cast(0.25));
    let q3 = quantile(series, T::cast(0.75));
    let bound = k * (q3 - q1);

    let mut cleaned = series.to_vec();
    let mut replaced = Vec::new();
    for (i, x) in cleaned.iter_mut().enumerate() {
        if (*x - median).abs() > bound {
            *x = median;
            replaced.push(i);
        }
    }
    Ok((cleaned, replaced))
}

/// Linear-interpolation sample quantile (the common "type 7" rule).
pub fn quantile<T: Real>(values: &[T], p: T) -> T {
    let mut sorted = values.to_vec();
    sorted.sort_by(|a, b| a.partial_cmp(b).expect("finite values"));
    let n = sorted.len();
    if n == 1 {
        return sorted[0];
    }
    let pos = p * T::from_count(n - 1);
    let lo = pos.floor();
    let idx = lo.to_usize().unwrap_or(0).min(n - 2);
    let frac = pos - lo;
    sorted[idx] * (T::one() - frac) + sorted[idx + 1] * frac
}

/// Rescales every row to zero mean and unit variance (divisor `T`).
pub fn standardize<T: Real>(panel: &TimePanel<T>) -> Result<TimePanel<T>> {
    let t = panel.len();
    if t < 2 {
        return Err(Error::TooShort { label: "panel".into(), len: t, min: 2 });
    }
    let tf = T::from_count(t);
    let mut values = panel.values.clone();
    for (i, label) in panel.labels.iter().enumerate() {
        let mean = values.row(i).iter().copied().sum::<T>() / tf;
        let var = values
            .row(i)
            .iter()
            .map(|&x| (x - mean) * (x - mean))
            .sum::<T>()
            / tf;
        if var <= T::zero() {
            return Err(Error::ConstantSeries { label: label.clone() });
        }
        let inv_sd = T::one() / var.sqrt();
        for j in 0..t {
            values[(i, j)] = (values[(i, j)] - mean) * inv_sd;
        }
    }
    Ok(TimePanel { labels: panel.labels.clone(), values, time_index: panel.time_index.clone() })
}

/// Per-series cleaning plan used by [`prepare_panel`].
#[derive(Debug, Clone)]
pub struct CleaningPlan {
    /// Transform applied when no per-series override exists.
    pub default_transform: TransformSpec,
    /// Per-series overrides, by label.
    pub overrides: Vec<(String, TransformSpec)>,
    /// Outlier multiplier; `None` skips outlier replacement.
    pub outlier_k: Option<f64>,
    /// Standardize rows at the end.
    pub standardize: bool,
}

impl Default for CleaningPlan {
    fn default() -> Self {
        Self {
            default_transform: TransformSpec::None,
            overrides: Vec::new(),
            outlier_k: Some(6.0),
            standardize: true,
        }
    }
}

/// Report of what [`prepare_panel`] changed.
#[derive(Debug, Clone, Default)]
pub struct CleaningReport {
    /// `(label, indices replaced by the median)` for each touched series.
    pub replaced_outliers: Vec<(String, Vec<usize>)>,
    /// Observations remaining after transforms truncated to a common window.
    pub common_len: usize,
}

/// Applies transforms, outlier replacement, and standardization to a panel.
///
/// Differencing shortens series, so all rows are truncated to the shortest
/// common length (keeping the most recent observations) before assembly.
pub fn prepare_panel<T: Real>(
    panel: &TimePanel<T>,
    plan: &CleaningPlan,
) -> Result<(TimePanel<T>, CleaningReport)> {
    let spec_for = |label: &str| -> TransformSpec {
        plan.overrides
            .iter()
            .find(|(l, _)| l == label)
            .map(|(_, s)| *s)
            .unwrap_or(plan.default_transform)
    };

    let mut report = CleaningReport::default();
    let mut rows: Vec<Vec<T>> = Vec::with_capacity(panel.n_series());
    let mut common_len = usize::MAX;
    for (i, label) in panel.labels.iter().enumerate() {
        let transformed = transform_series_labeled(&panel.row(i), spec_for(label), label)?;
        common_len = common_len.min(transformed.len());
        rows.push(transformed);
    }
    for row in &mut rows {
        let excess = row.len() - common_len;
        row.drain(..excess);
    }
    report.common_len = common_len;

    if let Some(k) = plan.outlier_k {
        for (row, label) in rows.iter_mut().zip(&panel.labels) {
            let (cleaned, replaced) = remove_outliers(row, T::cast(k))?;
            if !replaced.is_empty() {
                report.replaced_outliers.push((label.clone(), replaced));
            }
            *row = cleaned;
        }
    }

    let mut out = TimePanel::from_rows(panel.labels.clone(), rows)?;
    if let Some(index) = &panel.time_index {
        let tail = index[index.len() - common_len..].to_vec();
        out = out.with_time_index(tail)?;
    }
    if plan.standardize {
        out = standardize(&out)?;
    }
    Ok((out, report))
}

/// Loads a panel from CSV.
///
/// Format: UTF-8, comma-separated, decimal point, first row is a header.
/// With [`Orientation::RowsAreSeries`] the first column holds series labels.
/// With [`Orientation::ColumnsAreSeries`] the header holds series labels and
/// the first column is treated as a time index when it is non-numeric.
pub fn load_csv<T: Real>(path: &Path, orientation: Orientation) -> Result<TimePanel<T>> {
    let text = fs::read_to_string(path)?;
    parse_csv(&text, orientation)
}

/// Parses panel CSV text; see [`load_csv`] for the format.
pub fn parse_csv<T: Real>(text: &str, orientation: Orientation) -> Result<TimePanel<T>> {
    let mut lines = text
        .lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(i, l)| (i + 1, l))
        .peekable();

    let (_, header) = lines.next().ok_or(Error::Parse {
        row: 1,
        col: 1,
        reason: "empty file".into(),
    })?;
    let header: Vec<String> = header.split(',').map(|c| c.trim().to_string()).collect();
    let width = header.len();

    let mut cells: Vec<Vec<String>> = Vec::new();
    let mut file_rows: Vec<usize> = Vec::new();
    for (file_row, line) in lines {
        let row: Vec<String> = line.split(',').map(|c| c.trim().to_string()).collect();
        if row.len() != width {
            return Err(Error::Ragged { row: file_row, found: row.len(), expected: width });
        }
        file_rows.push(file_row);
        cells.push(row);
    }
    if cells.is_empty() {
        return Err(Error::Parse { row: 2, col: 1, reason: "no data rows".into() });
    }

    let parse_cell = |raw: &str, row: usize, col: usize| -> Result<T> {
        if raw.is_empty() {
            return Err(Error::Parse { row, col, reason: "missing cell".into() });
        }
        raw.parse::<f64>()
            .map(T::cast)
            .map_err(|e| Error::Parse { row, col, reason: format!("'{raw}': {e}") })
    };

    match orientation {
        Orientation::RowsAreSeries => {
            if width < 2 {
                return Err(Error::Parse {
                    row: 1,
                    col: 1,
                    reason: "rows-are-series files need a label column and data".into(),
                });
            }
            let mut labels = Vec::with_capacity(cells.len());
            let mut rows = Vec::with_capacity(cells.len());
            for (row_cells, &file_row) in cells.iter().zip(&file_rows) {
                labels.push(row_cells[0].clone());
                let mut row = Vec::with_capacity(width - 1);
                for (j, raw) in row_cells[1..].iter().enumerate() {
                    row.push(parse_cell(raw, file_row, j + 2)?);
                }
                rows.push(row);
            }
            let mut panel = TimePanel::from_rows(labels, rows)?;
            let time_labels = &header[1..];
            if time_labels.iter().all(|l| looks_like_month(l)) {
                panel = panel.with_time_index(time_labels.to_vec())?;
            }
            Ok(panel)
        }
        Orientation::ColumnsAreSeries => {
            let first_col_is_time = cells
                .iter()
                .any(|row| row[0].parse::<f64>().is_err());
            let data_start = usize::from(first_col_is_time);
            if width <= data_start {
                return Err(Error::Parse {
                    row: 1,
                    col: 1,
                    reason: "no data columns".into(),
                });
            }
            let labels: Vec<String> = header[data_start..].to_vec();
            let n = labels.len();
            let t = cells.len();
            let mut rows = vec![Vec::with_capacity(t); n];
            for (row_cells, &file_row) in cells.iter().zip(&file_rows) {
                for j in 0..n {
                    let raw = &row_cells[data_start + j];
                    rows[j].push(parse_cell(raw, file_row, data_start + j + 1)?);
                }
            }
            let mut panel = TimePanel::from_rows(labels, rows)?;
            if first_col_is_time {
                let index: Vec<String> = cells.iter().map(|r| r[0].clone()).collect();
                panel = panel.with_time_index(index)?;
            }
            Ok(panel)
        }
    }
}

/// Writes a panel as rows-are-series CSV; the inverse of [`load_csv`].
///
/// Values print in shortest round-trip form, so `load_csv(save_csv(p)) == p`
/// bitwise for the same scalar type.
pub fn save_csv<T: Real>(panel: &TimePanel<T>, path: &Path) -> Result<()> {
    fs::write(path, render_csv(panel))?;
    Ok(())
}

/// Renders a panel in the rows-are-series CSV format.
pub fn render_csv<T: Real>(panel: &TimePanel<T>) -> String {
    let mut out = String::new();
    out.push_str("series");
    match panel.time_index() {
        Some(index) => {
            for stamp in index {
                out.push(',');
                out.push_str(stamp);
            }
        }
        None => {
            for j in 0..panel.len() {
                out.push_str(&format!(",t{j}"));
            }
        }
    }
    out.push('\n');
    for (i, label) in panel.labels().iter().enumerate() {
        out.push_str(label);
        for j in 0..panel.len() {
            out.push(',');
            let v = panel.values()[(i, j)].to_f64().expect("scalar converts to f64");
            out.push_str(&format!("{v}"));
        }
        out.push('\n');
    }
    out
}

fn looks_like_month(s: &str) -> bool {
    let bytes = s.as_bytes();
    bytes.len() == 7
        && bytes[..4].iter().all(u8::is_ascii_digit)
        && bytes[4] == b'-'
        && bytes[5..].iter().all(u8::is_ascii_digit)
}
