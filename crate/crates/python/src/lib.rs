//! Python bindings for `sensordiff`.
//!
//! Series, models and rules are wrapped as classes; the pipeline stages are
//! plain functions. Library errors raise `SensordiffError` (a `ValueError`),
//! except I/O failures, which raise `OSError`.

use pyo3::create_exception;
use pyo3::exceptions::{PyOSError, PyValueError};
use pyo3::prelude::*;

use sensordiff::phase_classifier as phase;
use sensordiff::{ebm, markov_mle, series_io};

create_exception!(pysensordiff, SensordiffError, PyValueError);

fn to_py(err: sensordiff::Error) -> PyErr {
    if err.is_io() {
        PyOSError::new_err(err.to_string())
    } else {
        SensordiffError::new_err(err.to_string())
    }
}

trait OrRaise<T> {
    fn or_raise(self) -> PyResult<T>;
}

impl<T> OrRaise<T> for sensordiff::Result<T> {
    fn or_raise(self) -> PyResult<T> {
        self.map_err(to_py)
    }
}

/// Time-stamped rows of sensor readings.
#[pyclass(name = "Series", module = "pysensordiff", frozen, skip_from_py_object)]
#[derive(Clone)]
pub struct PySeries {
    inner: sensordiff::SampleSeries,
}

#[pymethods]
impl PySeries {
    #[new]
    #[pyo3(signature = (times, rows, feature_names=None))]
    fn new(
        times: Vec<f64>,
        rows: Vec<Vec<f64>>,
        feature_names: Option<Vec<String>>,
    ) -> PyResult<Self> {
        let width = rows.first().map_or(0, Vec::len);
        let parts = sensordiff::SeriesParts {
            times,
            values: rows,
            feature_names: feature_names
                .unwrap_or_else(|| (1..=width).map(|j| format!("v{j}")).collect()),
        };
        Ok(PySeries {
            inner: sensordiff::SampleSeries::new(parts).or_raise()?,
        })
    }

    /// Load a CSV file. The header is detected when `has_header` is None.
    #[staticmethod]
    #[pyo3(signature = (path, has_header=None))]
    fn load(path: &str, has_header: Option<bool>) -> PyResult<Self> {
        let header = match has_header {
            Some(h) => h,
            None => series_io::detect_header(path).or_raise()?,
        };
        Ok(PySeries {
            inner: series_io::load_series(path, header).or_raise()?,
        })
    }

    fn save(&self, path: &str) -> PyResult<()> {
        series_io::write_series(&self.inner, path).or_raise()
    }

    fn to_csv(&self) -> String {
        series_io::render_series(&self.inner)
    }

    #[getter]
    fn times(&self) -> Vec<f64> {
        self.inner.times().to_vec()
    }

    #[getter]
    fn rows(&self) -> Vec<Vec<f64>> {
        self.inner.rows().to_vec()
    }

    #[getter]
    fn feature_names(&self) -> Vec<String> {
        self.inner.feature_names().to_vec()
    }

    #[getter]
    fn n_features(&self) -> usize {
        self.inner.n_features()
    }

    fn column(&self, feature: usize) -> PyResult<Vec<f64>> {
        self.inner.column(feature).or_raise()
    }

    fn __len__(&self) -> usize {
        self.inner.len()
    }

    fn __repr__(&self) -> String {
        format!(
            "Series(rows={}, features={:?})",
            self.inner.len(),
            self.inner.feature_names()
        )
    }
}

/// Violations in the given columns; an empty list means the data is valid.
#[pyfunction]
fn validate_series(
    times: Vec<f64>,
    rows: Vec<Vec<f64>>,
    feature_names: Vec<String>,
) -> Vec<String> {
    let parts = sensordiff::SeriesParts {
        times,
        values: rows,
        feature_names,
    };
    sensordiff::validate_series(&parts)
        .violations
        .iter()
        .map(ToString::to_string)
        .collect()
}

#[pyclass(
    name = "SwResult",
    module = "pysensordiff",
    frozen,
    get_all,
    skip_from_py_object
)]
#[derive(Clone)]
pub struct PySwResult {
    w: f64,
    p_value: f64,
    reject_normality: bool,
    alpha: f64,
    n: usize,
}

#[pymethods]
impl PySwResult {
    fn __repr__(&self) -> String {
        format!(
            "SwResult(w={}, p_value={}, reject_normality={}, n={})",
            self.w,
            self.p_value,
            if self.reject_normality {
                "True"
            } else {
                "False"
            },
            self.n
        )
    }
}

impl From<sensordiff::SwResult> for PySwResult {
    fn from(r: sensordiff::SwResult) -> Self {
        PySwResult {
            w: r.w,
            p_value: r.p_value,
            reject_normality: r.reject_normality,
            alpha: r.alpha,
            n: r.n,
        }
    }
}

#[pyfunction]
fn sw_coefficients(n: usize) -> PyResult<Vec<f64>> {
    Ok(sensordiff::sw_coefficients(n).or_raise()?.a)
}

#[pyfunction]
#[pyo3(signature = (sample, alpha=sensordiff::DEFAULT_ALPHA))]
fn sw_statistic(sample: Vec<f64>, alpha: f64) -> PyResult<PySwResult> {
    Ok(sensordiff::sw_statistic_at(&sample, alpha)
        .or_raise()?
        .into())
}

#[pyfunction]
#[pyo3(signature = (series, feature=0, alpha=sensordiff::DEFAULT_ALPHA))]
fn sw_test_increments(series: &PySeries, feature: usize, alpha: f64) -> PyResult<PySwResult> {
    Ok(
        sensordiff::sw_test_increments(&series.inner, feature, alpha)
            .or_raise()?
            .into(),
    )
}

#[pyfunction]
fn smooth_values(values: Vec<f64>) -> PyResult<Vec<f64>> {
    sensordiff::smooth_values(&values).or_raise()
}

/// Smoothed copy of one feature, as a single-column series.
#[pyfunction]
#[pyo3(signature = (series, feature=0))]
fn smooth_series(series: &PySeries, feature: usize) -> PyResult<PySeries> {
    let m = markov_mle::smooth_series(&series.inner, feature).or_raise()?;
    let name = &series.inner.feature_names()[feature];
    Ok(PySeries {
        inner: m.to_series(name).or_raise()?,
    })
}

/// Smoothed copy of every feature.
#[pyfunction]
fn smooth_all(series: &PySeries) -> PyResult<PySeries> {
    Ok(PySeries {
        inner: markov_mle::smooth_all(&series.inner).or_raise()?,
    })
}

fn smoothed(times: Vec<f64>, values: Vec<f64>) -> PyResult<sensordiff::SmoothedSeries> {
    sensordiff::SmoothedSeries::from_parts(times, values).or_raise()
}

/// Rescaled segment vectors of a smoothed curve.
#[pyclass(name = "Basis", module = "pysensordiff", frozen, skip_from_py_object)]
#[derive(Clone)]
pub struct PyBasis {
    inner: sensordiff::OrthoBasis,
}

#[pymethods]
impl PyBasis {
    /// Build from `(dt, dv)` segment vectors.
    #[staticmethod]
    fn from_vectors(vectors: Vec<(f64, f64)>) -> PyResult<Self> {
        let v: Vec<_> = vectors
            .iter()
            .enumerate()
            .map(|(i, (dt, dv))| sensordiff::SegmentVector::new(i + 1, *dt, *dv))
            .collect();
        Ok(PyBasis {
            inner: sensordiff::orthogonalize(&v).or_raise()?,
        })
    }

    /// Build from smoothed points `(times, values)`.
    #[staticmethod]
    fn from_points(times: Vec<f64>, values: Vec<f64>) -> PyResult<Self> {
        let v = sensordiff::segment_vectors(&smoothed(times, values)?).or_raise()?;
        Ok(PyBasis {
            inner: sensordiff::orthogonalize(&v).or_raise()?,
        })
    }

    /// `(k, zt, zv, c, y, fourier, parity)` per segment.
    fn entries(&self) -> Vec<(usize, f64, f64, f64, f64, f64, &'static str)> {
        self.inner
            .entries
            .iter()
            .map(|e| {
                (
                    e.z.k,
                    e.z.dt,
                    e.z.dv,
                    e.c,
                    e.y,
                    e.fourier,
                    e.parity.as_str(),
                )
            })
            .collect()
    }

    fn reconstruct(&self) -> PyResult<Vec<(f64, f64)>> {
        Ok(sensordiff::reconstruct(&self.inner)
            .or_raise()?
            .iter()
            .map(|v| (v.dt, v.dv))
            .collect())
    }

    fn to_csv(&self) -> String {
        self.inner.to_csv()
    }

    fn __len__(&self) -> usize {
        self.inner.len()
    }
}

#[pyclass(
    name = "ElmModel",
    module = "pysensordiff",
    frozen,
    skip_from_py_object
)]
#[derive(Clone)]
pub struct PyElmModel {
    inner: sensordiff::ElmModel,
}

#[pymethods]
impl PyElmModel {
    #[staticmethod]
    #[pyo3(signature = (features, targets, width, seed=0))]
    fn fit(features: Vec<Vec<f64>>, targets: Vec<f64>, width: usize, seed: u64) -> PyResult<Self> {
        Ok(PyElmModel {
            inner: sensordiff::elm_fit(&features, &targets, width, seed).or_raise()?,
        })
    }

    fn eval(&self, row: Vec<f64>) -> PyResult<f64> {
        sensordiff::elm_eval(&self.inner, &row).or_raise()
    }

    fn residuals(&self, features: Vec<Vec<f64>>, targets: Vec<f64>) -> PyResult<Vec<f64>> {
        self.inner.residuals(&features, &targets).or_raise()
    }

    #[getter]
    fn width(&self) -> usize {
        self.inner.width()
    }

    #[getter]
    fn output_weights(&self) -> Vec<f64> {
        self.inner.output_weights.clone()
    }

    #[getter]
    fn output_bias(&self) -> f64 {
        self.inner.output_bias
    }
}

#[pyclass(
    name = "EbmModel",
    module = "pysensordiff",
    frozen,
    skip_from_py_object
)]
#[derive(Clone)]
pub struct PyEbmModel {
    inner: sensordiff::EbmModel,
}

#[pymethods]
impl PyEbmModel {
    #[staticmethod]
    #[pyo3(signature = (rows, layers=64, t0=1.0, cooling=0.95, seed=0))]
    fn train(
        rows: Vec<Vec<f64>>,
        layers: usize,
        t0: f64,
        cooling: f64,
        seed: u64,
    ) -> PyResult<Self> {
        let config = sensordiff::EbmConfig {
            layers,
            t0,
            cooling,
            seed,
        };
        Ok(PyEbmModel {
            inner: sensordiff::ebm_train(&rows, &config).or_raise()?,
        })
    }

    #[staticmethod]
    fn load(path: &str) -> PyResult<Self> {
        Ok(PyEbmModel {
            inner: sensordiff::read_model(path).or_raise()?,
        })
    }

    fn save(&self, path: &str) -> PyResult<()> {
        sensordiff::write_model(&self.inner, path).or_raise()
    }

    fn to_text(&self) -> String {
        ebm::render_model(&self.inner)
    }

    /// `H(row)`, higher for more probable states.
    fn energy(&self, row: Vec<f64>) -> PyResult<f64> {
        sensordiff::ebm_energy(&self.inner, &row).or_raise()
    }

    fn log_prob(&self, row: Vec<f64>) -> PyResult<f64> {
        self.inner.log_prob(&row).or_raise()
    }

    fn log_partition(&self, rows: Vec<Vec<f64>>) -> PyResult<f64> {
        self.inner.log_partition(&rows).or_raise()
    }

    #[getter]
    fn log_z(&self) -> f64 {
        self.inner.log_z
    }

    #[getter]
    fn temperatures(&self) -> Vec<f64> {
        self.inner.temperatures.clone()
    }

    #[getter]
    fn train_rows(&self) -> usize {
        self.inner.train_rows
    }

    fn __eq__(&self, other: &Self) -> bool {
        self.inner == other.inner
    }
}

#[pyfunction]
fn gaussian_log_density_target(rows: Vec<Vec<f64>>) -> PyResult<Vec<f64>> {
    sensordiff::gaussian_log_density_target(&rows).or_raise()
}

#[pyclass(
    name = "Rule",
    module = "pysensordiff",
    frozen,
    get_all,
    skip_from_py_object
)]
#[derive(Clone)]
pub struct PyRule {
    class_id: usize,
    bits: Vec<bool>,
    e_lo: f64,
    e_hi: f64,
    pred_bits: Vec<bool>,
    support: usize,
}

#[pymethods]
impl PyRule {
    #[new]
    fn new(
        class_id: usize,
        bits: Vec<bool>,
        e_lo: f64,
        e_hi: f64,
        pred_bits: Vec<bool>,
        support: usize,
    ) -> Self {
        PyRule {
            class_id,
            bits,
            e_lo,
            e_hi,
            pred_bits,
            support,
        }
    }

    fn __eq__(&self, other: &Self) -> bool {
        self.to_rule() == other.to_rule()
    }

    fn __repr__(&self) -> String {
        phase::render_rules(&[self.to_rule()])
            .trim_end()
            .to_string()
    }
}

impl PyRule {
    fn to_rule(&self) -> sensordiff::AssociationRule {
        sensordiff::AssociationRule {
            class_id: self.class_id,
            bits: self.bits.clone(),
            e_lo: self.e_lo,
            e_hi: self.e_hi,
            pred_bits: self.pred_bits.clone(),
            support: self.support,
        }
    }
}

impl From<&sensordiff::AssociationRule> for PyRule {
    fn from(r: &sensordiff::AssociationRule) -> Self {
        PyRule {
            class_id: r.class_id,
            bits: r.bits.clone(),
            e_lo: r.e_lo,
            e_hi: r.e_hi,
            pred_bits: r.pred_bits.clone(),
            support: r.support,
        }
    }
}

fn to_rules(rules: &[PyRef<'_, PyRule>]) -> Vec<sensordiff::AssociationRule> {
    rules.iter().map(|r| r.to_rule()).collect()
}

/// `(threshold, gap, boundary)`, or None when every value is equal.
#[pyfunction]
fn max_gap_split(energies: Vec<f64>) -> PyResult<Option<(f64, f64, usize)>> {
    Ok(sensordiff::max_gap_split(&energies)
        .or_raise()?
        .map(|s| (s.threshold, s.gap, s.boundary)))
}

#[pyfunction]
#[pyo3(signature = (s, k=None))]
fn target_class_count(s: usize, k: Option<usize>) -> PyResult<usize> {
    sensordiff::target_class_count(s, k).or_raise()
}

/// Energy-gap tree over `rows`, returned as one rule per leaf.
#[pyfunction]
#[pyo3(signature = (rows, model, k=None, tau=0.0))]
fn classify(
    rows: Vec<Vec<f64>>,
    model: &PyEbmModel,
    k: Option<usize>,
    tau: f64,
) -> PyResult<Vec<PyRule>> {
    let s = rows.first().map_or(0, Vec::len);
    let k = sensordiff::target_class_count(s, k).or_raise()?;
    let tree = sensordiff::build_tree(&rows, &model.inner, k, tau).or_raise()?;
    let rules = sensordiff::extract_rules(&tree, &rows).or_raise()?;
    Ok(rules.iter().map(PyRule::from).collect())
}

#[pyfunction]
fn classify_point(
    rules: Vec<PyRef<'_, PyRule>>,
    model: &PyEbmModel,
    row: Vec<f64>,
) -> PyResult<PyRule> {
    let rules = to_rules(&rules);
    Ok(sensordiff::classify_point(&rules, &model.inner, &row)
        .or_raise()?
        .into())
}

#[pyfunction]
fn write_rules(rules: Vec<PyRef<'_, PyRule>>, path: &str) -> PyResult<()> {
    sensordiff::write_rules(&to_rules(&rules), path).or_raise()
}

#[pyfunction]
fn read_rules(path: &str) -> PyResult<Vec<PyRule>> {
    Ok(sensordiff::read_rules(path)
        .or_raise()?
        .iter()
        .map(PyRule::from)
        .collect())
}

#[pyclass(
    name = "Forecast",
    module = "pysensordiff",
    frozen,
    get_all,
    skip_from_py_object
)]
#[derive(Clone)]
pub struct PyForecast {
    horizon: f64,
    mean: f64,
    variance: f64,
    sigma2: f64,
    paths: Option<Vec<Vec<f64>>>,
}

#[pymethods]
impl PyForecast {
    fn __repr__(&self) -> String {
        format!(
            "Forecast(horizon={}, mean={}, variance={}, sigma2={})",
            self.horizon, self.mean, self.variance, self.sigma2
        )
    }
}

#[pyfunction]
fn fit_sigma2(times: Vec<f64>, values: Vec<f64>) -> PyResult<f64> {
    sensordiff::fit_sigma2(&smoothed(times, values)?).or_raise()
}

/// Martingale forecast from smoothed points. `sigma2` defaults to the
/// fitted diffusion coefficient; `paths > 0` also samples trajectories.
#[pyfunction]
#[allow(clippy::too_many_arguments)]
#[pyo3(signature = (times, values, horizon, sigma2=None, paths=0, steps=10, seed=0))]
fn forecast(
    py: Python<'_>,
    times: Vec<f64>,
    values: Vec<f64>,
    horizon: f64,
    sigma2: Option<f64>,
    paths: usize,
    steps: usize,
    seed: u64,
) -> PyResult<PyForecast> {
    let m = smoothed(times, values)?;
    let sigma2 = match sigma2 {
        Some(s) => s,
        None => sensordiff::fit_sigma2(&m).or_raise()?,
    };
    let mut result = sensordiff::forecast(&m, horizon, sigma2).or_raise()?;
    if paths > 0 {
        result = py
            .detach(|| result.with_paths(steps, paths, seed))
            .or_raise()?;
    }
    Ok(PyForecast {
        horizon: result.horizon,
        mean: result.mean,
        variance: result.variance,
        sigma2: result.sigma2,
        paths: result.paths,
    })
}

#[pyfunction]
#[pyo3(signature = (start, sigma2, dt, steps, m, seed=0))]
fn sample_paths(
    py: Python<'_>,
    start: f64,
    sigma2: f64,
    dt: f64,
    steps: usize,
    m: usize,
    seed: u64,
) -> PyResult<Vec<Vec<f64>>> {
    py.detach(|| sensordiff::sample_paths(start, sigma2, dt, steps, m, seed))
        .or_raise()
}

#[pyfunction]
#[pyo3(signature = (steps, dt=1.0, seed=0))]
fn simulate_brownian(steps: usize, dt: f64, seed: u64) -> PyResult<PySeries> {
    Ok(PySeries {
        inner: sensordiff::simulate_brownian(steps, dt, seed).or_raise()?,
    })
}

/// `(mean_exit_time, hit_b_frequency)` for unit Brownian motion leaving `(a, b)`.
#[pyfunction]
#[pyo3(signature = (a, b, dt=1e-4, trials=100_000, seed=0))]
fn skorokhod_exit(
    py: Python<'_>,
    a: f64,
    b: f64,
    dt: f64,
    trials: u64,
    seed: u64,
) -> PyResult<(f64, f64)> {
    let dist = sensordiff::TwoPointDist::new(a, b).or_raise()?;
    let est = py
        .detach(|| sensordiff::skorokhod_exit(&dist, dt, trials, seed))
        .or_raise()?;
    Ok((est.mean_exit_time, est.hit_b_frequency))
}

#[pymodule]
fn pysensordiff(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add("SensordiffError", m.py().get_type::<SensordiffError>())?;
    m.add_class::<PySeries>()?;
    m.add_class::<PySwResult>()?;
    m.add_class::<PyBasis>()?;
    m.add_class::<PyElmModel>()?;
    m.add_class::<PyEbmModel>()?;
    m.add_class::<PyRule>()?;
    m.add_class::<PyForecast>()?;
    m.add_function(wrap_pyfunction!(validate_series, m)?)?;
    m.add_function(wrap_pyfunction!(sw_coefficients, m)?)?;
    m.add_function(wrap_pyfunction!(sw_statistic, m)?)?;
    m.add_function(wrap_pyfunction!(sw_test_increments, m)?)?;
    m.add_function(wrap_pyfunction!(smooth_values, m)?)?;
    m.add_function(wrap_pyfunction!(smooth_series, m)?)?;
    m.add_function(wrap_pyfunction!(smooth_all, m)?)?;
    m.add_function(wrap_pyfunction!(gaussian_log_density_target, m)?)?;
    m.add_function(wrap_pyfunction!(max_gap_split, m)?)?;
    m.add_function(wrap_pyfunction!(target_class_count, m)?)?;
    m.add_function(wrap_pyfunction!(classify, m)?)?;
    m.add_function(wrap_pyfunction!(classify_point, m)?)?;
    m.add_function(wrap_pyfunction!(write_rules, m)?)?;
    m.add_function(wrap_pyfunction!(read_rules, m)?)?;
    m.add_function(wrap_pyfunction!(fit_sigma2, m)?)?;
    m.add_function(wrap_pyfunction!(forecast, m)?)?;
    m.add_function(wrap_pyfunction!(sample_paths, m)?)?;
    m.add_function(wrap_pyfunction!(simulate_brownian, m)?)?;
    m.add_function(wrap_pyfunction!(skorokhod_exit, m)?)?;
    Ok(())
}
