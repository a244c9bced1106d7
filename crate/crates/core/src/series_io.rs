//! Sensor series data model and the CSV text format.
//!
//! A file holds one row per sample, `t,v1[,...,vs]`, with an optional header
//! line `t,<name1>,...`. Reals are written with the shortest decimal that
//! parses back to the same `f64` (never more than 17 significant digits), so
//! a write/load cycle is bit-exact.

use std::fmt;
use std::fs;
use std::path::Path;

use crate::error::{Error, Result};

/// Unvalidated pieces of a series, as parsed or as supplied by a caller.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct SeriesParts {
    pub times: Vec<f64>,
    pub values: Vec<Vec<f64>>,
    pub feature_names: Vec<String>,
}

/// A validated, immutable sensor series: `N` timestamps and an `N x s`
/// matrix of readings.
#[derive(Clone, Debug, PartialEq)]
pub struct SampleSeries {
    times: Vec<f64>,
    values: Vec<Vec<f64>>,
    feature_names: Vec<String>,
}

#[derive(Clone, Debug, PartialEq)]
pub enum Violation {
    Empty,
    NoFeatures,
    LengthMismatch {
        times: usize,
        rows: usize,
    },
    NameCount {
        expected: usize,
        got: usize,
    },
    Ragged {
        row: usize,
        expected: usize,
        got: usize,
    },
    NonFiniteTime {
        row: usize,
    },
    NonFiniteValue {
        row: usize,
        column: usize,
    },
    NonIncreasing {
        row: usize,
    },
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::Empty => write!(f, "series has no rows"),
            Violation::NoFeatures => write!(f, "series has no feature columns"),
            Violation::LengthMismatch { times, rows } => {
                write!(f, "{times} timestamps but {rows} value rows")
            }
            Violation::NameCount { expected, got } => {
                write!(f, "expected {expected} feature names, got {got}")
            }
            Violation::Ragged { row, expected, got } => {
                write!(
                    f,
                    "row {row}: ragged row with {got} values, expected {expected}"
                )
            }
            Violation::NonFiniteTime { row } => write!(f, "row {row}: non-finite timestamp"),
            Violation::NonFiniteValue { row, column } => {
                write!(f, "row {row} column {column}: non-finite value")
            }
            Violation::NonIncreasing { row } => {
                write!(f, "row {row}: non-increasing timestamps")
            }
        }
    }
}

/// Every invariant a series breaks. Empty iff the series is valid.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct ValidationReport {
    pub violations: Vec<Violation>,
}

impl ValidationReport {
    pub fn is_valid(&self) -> bool {
        self.violations.is_empty()
    }
}

impl fmt::Display for ValidationReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, v) in self.violations.iter().enumerate() {
            if i > 0 {
                f.write_str("; ")?;
            }
            write!(f, "{v}")?;
        }
        Ok(())
    }
}

/// Rows are 0-based. Never fails; the report lists what is wrong.
pub fn validate_series(parts: &SeriesParts) -> ValidationReport {
    let mut violations = Vec::new();
    let rows = parts.values.len();
    if rows == 0 && parts.times.is_empty() {
        violations.push(Violation::Empty);
    }
    if parts.times.len() != rows {
        violations.push(Violation::LengthMismatch {
            times: parts.times.len(),
            rows,
        });
    }

    let width = parts.feature_names.len();
    if width == 0 {
        violations.push(Violation::NoFeatures);
    }
    for (row, values) in parts.values.iter().enumerate() {
        if width > 0 && values.len() != width {
            violations.push(Violation::Ragged {
                row,
                expected: width,
                got: values.len(),
            });
        }
        for (column, v) in values.iter().enumerate() {
            if !v.is_finite() {
                violations.push(Violation::NonFiniteValue { row, column });
            }
        }
    }

    for (row, t) in parts.times.iter().enumerate() {
        if !t.is_finite() {
            violations.push(Violation::NonFiniteTime { row });
        } else if row > 0 {
            let prev = parts.times[row - 1];
            if prev.is_finite() && *t <= prev {
                violations.push(Violation::NonIncreasing { row });
            }
        }
    }
    ValidationReport { violations }
}

impl SampleSeries {
    pub fn new(parts: SeriesParts) -> Result<Self> {
        let report = validate_series(&parts);
        if !report.is_valid() {
            return Err(Error::InvalidSeries(report.to_string()));
        }
        Ok(SampleSeries {
            times: parts.times,
            values: parts.values,
            feature_names: parts.feature_names,
        })
    }

    /// Single-feature series.
    pub fn from_column(times: Vec<f64>, values: Vec<f64>, name: &str) -> Result<Self> {
        SampleSeries::new(SeriesParts {
            times,
            values: values.into_iter().map(|v| vec![v]).collect(),
            feature_names: vec![name.to_string()],
        })
    }

    /// Feature names default to `v1..vs`.
    pub fn from_rows(times: Vec<f64>, values: Vec<Vec<f64>>) -> Result<Self> {
        let s = values.first().map_or(0, Vec::len);
        SampleSeries::new(SeriesParts {
            times,
            values,
            feature_names: default_names(s),
        })
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn n_features(&self) -> usize {
        self.feature_names.len()
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }

    pub fn rows(&self) -> &[Vec<f64>] {
        &self.values
    }

    pub fn feature_names(&self) -> &[String] {
        &self.feature_names
    }

    pub fn column(&self, feature: usize) -> Result<Vec<f64>> {
        if feature >= self.n_features() {
            return Err(Error::Dimension(format!(
                "feature {feature} requested from a series with {} features",
                self.n_features()
            )));
        }
        Ok(self.values.iter().map(|row| row[feature]).collect())
    }

    pub fn into_parts(self) -> SeriesParts {
        SeriesParts {
            times: self.times,
            values: self.values,
            feature_names: self.feature_names,
        }
    }
}

fn default_names(s: usize) -> Vec<String> {
    (1..=s).map(|j| format!("v{j}")).collect()
}

/// Shortest round-trip decimal. Plain notation for moderate magnitudes,
/// exponent notation otherwise.
pub fn format_real(x: f64) -> String {
    let a = x.abs();
    if a == 0.0 || (1e-5..1e16).contains(&a) {
        format!("{x}")
    } else {
        format!("{x:e}")
    }
}

pub(crate) fn parse_real(cell: &str, line: usize) -> Result<f64> {
    cell.parse::<f64>().map_err(|_| Error::Parse {
        line,
        message: format!("non-numeric cell `{cell}`"),
    })
}

/// Whether the file's first line is a `t,...` header.
pub fn detect_header(path: impl AsRef<Path>) -> Result<bool> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    Ok(text
        .lines()
        .next()
        .is_some_and(|l| l == "t" || l.starts_with("t,")))
}

pub fn load_series(path: impl AsRef<Path>, has_header: bool) -> Result<SampleSeries> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_series(&text, has_header)
}

pub fn parse_series(text: &str, has_header: bool) -> Result<SampleSeries> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .from_reader(text.as_bytes());

    let mut parts = SeriesParts::default();
    let mut names: Option<Vec<String>> = None;
    for (i, record) in reader.records().enumerate() {
        let record = record.map_err(|e| Error::Parse {
            line: e.position().map_or(i + 1, |p| p.line() as usize),
            message: e.to_string(),
        })?;
        let line = record.position().map_or(i + 1, |p| p.line() as usize);
        if i == 0 && has_header {
            if record.get(0) != Some("t") {
                return Err(Error::Parse {
                    line,
                    message: "header must begin with `t,`".into(),
                });
            }
            names = Some(record.iter().skip(1).map(str::to_string).collect());
            continue;
        }
        let mut cells = record.iter();
        let t = parse_real(cells.next().unwrap_or(""), line)?;
        let row = cells
            .map(|c| parse_real(c, line))
            .collect::<Result<Vec<_>>>()?;
        parts.times.push(t);
        parts.values.push(row);
    }
    if parts.times.is_empty() {
        return Err(Error::InvalidSeries("empty body".into()));
    }
    parts.feature_names = names.unwrap_or_else(|| default_names(parts.values[0].len()));
    SampleSeries::new(parts)
}

pub fn render_series(series: &SampleSeries) -> String {
    let mut out = String::from("t");
    for name in series.feature_names() {
        out.push(',');
        out.push_str(name);
    }
    out.push('\n');
    for (t, row) in series.times().iter().zip(series.rows()) {
        out.push_str(&format_real(*t));
        for v in row {
            out.push(',');
            out.push_str(&format_real(*v));
        }
        out.push('\n');
    }
    out
}

/// Writes with a header line.
pub fn write_series(series: &SampleSeries, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    fs::write(path, render_series(series)).map_err(|e| Error::io(path, e))
}
