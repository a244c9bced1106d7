//! Signal extraction by sequential pairwise averaging.
//!
//! Under Gaussian increments the maximum-likelihood estimate of the common
//! mean of two successive samples is their average. The smoothed series keeps
//! the first raw sample and replaces every later point by the average with its
//! predecessor, so each element depends on one raw pair only.

use crate::error::{Error, Result};
use crate::series_io::SampleSeries;

/// First differences `v[k+1] - v[k]`.
pub fn increments(values: &[f64]) -> Result<Vec<f64>> {
    if values.len() < 2 {
        return Err(Error::TooShort {
            what: "increments",
            min: 2,
            got: values.len(),
        });
    }
    Ok(values.windows(2).map(|w| w[1] - w[0]).collect())
}

/// `x_1 = s_1`, `x_{k+1} = (s_k + s_{k+1}) / 2`.
pub fn smooth_values(values: &[f64]) -> Result<Vec<f64>> {
    if values.len() < 2 {
        return Err(Error::TooShort {
            what: "smoothing",
            min: 2,
            got: values.len(),
        });
    }
    let mut out = Vec::with_capacity(values.len());
    out.push(values[0]);
    out.extend(values.windows(2).map(|w| (w[0] + w[1]) / 2.0));
    Ok(out)
}

#[derive(Clone, Debug, PartialEq)]
pub struct SmoothedSeries {
    pub times: Vec<f64>,
    pub values: Vec<f64>,
    pub source_length: usize,
}

impl SmoothedSeries {
    /// Builds directly from already-smoothed values, e.g. read back from disk.
    pub fn from_parts(times: Vec<f64>, values: Vec<f64>) -> Result<Self> {
        let series = SampleSeries::from_column(times, values, "x")?;
        let n = series.len();
        let parts = series.into_parts();
        Ok(SmoothedSeries {
            times: parts.times,
            values: parts.values.into_iter().map(|r| r[0]).collect(),
            source_length: n,
        })
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn last_value(&self) -> Option<f64> {
        self.values.last().copied()
    }

    pub fn to_series(&self, name: &str) -> Result<SampleSeries> {
        SampleSeries::from_column(self.times.clone(), self.values.clone(), name)
    }
}

pub fn smooth_series(series: &SampleSeries, feature: usize) -> Result<SmoothedSeries> {
    let values = smooth_values(&series.column(feature)?)?;
    Ok(SmoothedSeries {
        times: series.times().to_vec(),
        values,
        source_length: series.len(),
    })
}

/// Smooths every feature column, keeping the row layout.
pub fn smooth_all(series: &SampleSeries) -> Result<SampleSeries> {
    let mut columns = Vec::with_capacity(series.n_features());
    for j in 0..series.n_features() {
        columns.push(smooth_values(&series.column(j)?)?);
    }
    let rows = (0..series.len())
        .map(|i| columns.iter().map(|c| c[i]).collect())
        .collect();
    SampleSeries::new(crate::series_io::SeriesParts {
        times: series.times().to_vec(),
        values: rows,
        feature_names: series.feature_names().to_vec(),
    })
}
