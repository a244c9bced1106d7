//! Energy-based density model trained as an extreme learning machine.
//!
//! The density over states is `p(x) = exp(H(x)) / Z`. Its log, `H(x) - log Z`,
//! is approximated by an ELM: `L` hidden units, each a random energy
//! functional `sigmoid(w_l . x + b_l)` whose weights are drawn once from a
//! seeded standard normal and divided by that unit's temperature. The
//! temperatures cool geometrically, `t0 * alpha^(l-1)`, so later units are
//! sharper. Only the output weights are learned, by ridge-regularized least
//! squares against the Gaussian log-density of the training rows.
//!
//! `Z` is summed over the training rows, making `p` a probability mass on the
//! observed states. Rows are standardized per feature before they reach the
//! hidden units.

use std::fs;
use std::path::Path;

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::rng;
use crate::series_io::{format_real, parse_real};

/// Ridge penalty on the output weights (not on the output intercept).
pub const RIDGE_LAMBDA: f64 = 1e-8;

/// Single-hidden-layer network with fixed random hidden weights.
///
/// Unit `l` draws its `d` input weights and then its bias, in that order,
/// from one seeded stream, so a wider model extends a narrower one with the
/// same seed unit for unit.
#[derive(Clone, Debug, PartialEq)]
pub struct ElmModel {
    pub input_weights: Vec<Vec<f64>>,
    pub biases: Vec<f64>,
    pub output_weights: Vec<f64>,
    pub output_bias: f64,
    pub seed: u64,
}

impl ElmModel {
    pub fn width(&self) -> usize {
        self.biases.len()
    }

    pub fn input_dim(&self) -> usize {
        self.input_weights.first().map_or(0, Vec::len)
    }

    fn hidden<'a>(&'a self, row: &'a [f64]) -> impl Iterator<Item = f64> + 'a {
        self.input_weights
            .iter()
            .zip(&self.biases)
            .map(move |(w, b)| sigmoid(dot(w, row) + b))
    }

    /// Sigmoid activations of the hidden units for one row.
    pub fn hidden_activations(&self, row: &[f64]) -> Result<Vec<f64>> {
        if row.len() != self.input_dim() {
            return Err(Error::Dimension(format!(
                "row has {} features, model expects {}",
                row.len(),
                self.input_dim()
            )));
        }
        Ok(self.hidden(row).collect())
    }

    /// Per-row `prediction - target`.
    pub fn residuals(&self, features: &[Vec<f64>], targets: &[f64]) -> Result<Vec<f64>> {
        if features.len() != targets.len() {
            return Err(Error::Dimension(format!(
                "{} feature rows but {} targets",
                features.len(),
                targets.len()
            )));
        }
        features
            .iter()
            .zip(targets)
            .map(|(row, t)| Ok(elm_eval(self, row)? - t))
            .collect()
    }

    pub fn mean_squared_residual(&self, features: &[Vec<f64>], targets: &[f64]) -> Result<f64> {
        let r = self.residuals(features, targets)?;
        Ok(r.iter().map(|e| e * e).sum::<f64>() / r.len().max(1) as f64)
    }
}

fn sigmoid(z: f64) -> f64 {
    1.0 / (1.0 + (-z).exp())
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn check_rows(rows: &[Vec<f64>], what: &'static str) -> Result<usize> {
    let d = rows.first().map_or(0, Vec::len);
    if d == 0 {
        return Err(Error::Dimension(format!("{what} has no columns")));
    }
    for (i, r) in rows.iter().enumerate() {
        if r.len() != d {
            return Err(Error::Dimension(format!(
                "{what} row {i} has {} columns, expected {d}",
                r.len()
            )));
        }
        if r.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite(what));
        }
    }
    Ok(d)
}

fn draw_hidden(
    width: usize,
    d: usize,
    seed: u64,
    scale: impl Fn(usize) -> f64,
) -> (Vec<Vec<f64>>, Vec<f64>) {
    let mut rng = rng::seeded(seed);
    let mut weights = Vec::with_capacity(width);
    let mut biases = Vec::with_capacity(width);
    for l in 0..width {
        let s = scale(l);
        let w: Vec<f64> = (0..d)
            .map(|_| rng.sample::<f64, _>(StandardNormal) * s)
            .collect();
        weights.push(w);
        biases.push(rng.sample::<f64, _>(StandardNormal) * s);
    }
    (weights, biases)
}

/// Minimizes `||A beta - y||^2 + lambda ||beta[1..]||^2` by QR on the
/// stacked system `[A; sqrt(lambda) D]`, `D = diag(0, 1, ..., 1)`. Column 0
/// is the intercept and is not penalized.
fn ridge_solve(design: &DMatrix<f64>, targets: &[f64], lambda: f64) -> Result<DVector<f64>> {
    let (n, p) = design.shape();
    let mut stacked = DMatrix::<f64>::zeros(n + p, p);
    stacked.view_mut((0, 0), (n, p)).copy_from(design);
    let root = lambda.sqrt();
    for j in 1..p {
        stacked[(n + j, j)] = root;
    }
    let mut rhs = DVector::<f64>::zeros(n + p);
    rhs.rows_mut(0, n).copy_from_slice(targets);

    let qr = stacked.qr();
    qr.q_tr_mul(&mut rhs);
    let r = qr.r();
    let head = rhs.rows(0, p).into_owned();
    let beta = r.solve_upper_triangular(&head).ok_or(Error::Singular)?;
    if beta.iter().all(|b| b.is_finite()) {
        Ok(beta)
    } else {
        Err(Error::Singular)
    }
}

fn fit_scaled(
    features: &[Vec<f64>],
    targets: &[f64],
    width: usize,
    seed: u64,
    scale: impl Fn(usize) -> f64,
) -> Result<ElmModel> {
    if features.is_empty() {
        return Err(Error::TooShort {
            what: "ELM training set",
            min: 1,
            got: 0,
        });
    }
    if width == 0 {
        return Err(Error::param("hidden width must be at least 1"));
    }
    let d = check_rows(features, "ELM features")?;
    if features.len() != targets.len() {
        return Err(Error::Dimension(format!(
            "{} feature rows but {} targets",
            features.len(),
            targets.len()
        )));
    }
    if targets.iter().any(|t| !t.is_finite()) {
        return Err(Error::NonFinite("ELM targets"));
    }

    let (input_weights, biases) = draw_hidden(width, d, seed, scale);
    let mut model = ElmModel {
        input_weights,
        biases,
        output_weights: vec![0.0; width],
        output_bias: 0.0,
        seed,
    };

    let n = features.len();
    let mut design = DMatrix::<f64>::zeros(n, width + 1);
    for (i, row) in features.iter().enumerate() {
        design[(i, 0)] = 1.0;
        for (l, h) in model.hidden(row).enumerate() {
            design[(i, l + 1)] = h;
        }
    }
    let beta = ridge_solve(&design, targets, RIDGE_LAMBDA)?;
    model.output_bias = beta[0];
    model.output_weights = beta.iter().skip(1).copied().collect();
    Ok(model)
}

/// Fits output weights (plus an output intercept) for `width` random
/// logistic units drawn from `seed`.
pub fn elm_fit(
    features: &[Vec<f64>],
    targets: &[f64],
    width: usize,
    seed: u64,
) -> Result<ElmModel> {
    fit_scaled(features, targets, width, seed, |_| 1.0)
}

pub fn elm_eval(model: &ElmModel, row: &[f64]) -> Result<f64> {
    if row.len() != model.input_dim() {
        return Err(Error::Dimension(format!(
            "row has {} values, model expects {}",
            row.len(),
            model.input_dim()
        )));
    }
    if row.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("ELM input row"));
    }
    let hidden: f64 = model
        .hidden(row)
        .zip(&model.output_weights)
        .map(|(h, w)| h * w)
        .sum();
    Ok(model.output_bias + hidden)
}

/// Per-feature mean and maximum-likelihood (divide by `N`) variance.
fn column_moments(rows: &[Vec<f64>]) -> Result<(Vec<f64>, Vec<f64>)> {
    let d = check_rows(rows, "training rows")?;
    let n = rows.len() as f64;
    let mut mean = vec![0.0; d];
    for r in rows {
        for (m, v) in mean.iter_mut().zip(r) {
            *m += v;
        }
    }
    mean.iter_mut().for_each(|m| *m /= n);
    let mut var = vec![0.0; d];
    for r in rows {
        for j in 0..d {
            let e = r[j] - mean[j];
            var[j] += e * e;
        }
    }
    var.iter_mut().for_each(|v| *v /= n);
    if let Some(j) = var.iter().position(|v| *v <= 0.0) {
        return Err(Error::ZeroVariance(format!("feature {j}")));
    }
    Ok((mean, var))
}

/// Log-density of each row under the diagonal Gaussian fitted to the rows.
pub fn gaussian_log_density_target(rows: &[Vec<f64>]) -> Result<Vec<f64>> {
    if rows.len() < 2 {
        return Err(Error::TooShort {
            what: "Gaussian target",
            min: 2,
            got: rows.len(),
        });
    }
    let (mean, var) = column_moments(rows)?;
    let log_norm: f64 = var
        .iter()
        .map(|v| -0.5 * (2.0 * std::f64::consts::PI * v).ln())
        .sum();
    Ok(rows
        .iter()
        .map(|r| {
            let quad: f64 = r
                .iter()
                .zip(mean.iter().zip(&var))
                .map(|(x, (m, v))| (x - m) * (x - m) / v)
                .sum();
            log_norm - 0.5 * quad
        })
        .collect())
}

/// `log sum_i exp(H~(row_i))`, shifted by the maximum.
pub fn log_partition(elm: &ElmModel, rows: &[Vec<f64>]) -> Result<f64> {
    if rows.is_empty() {
        return Err(Error::TooShort {
            what: "partition sum",
            min: 1,
            got: 0,
        });
    }
    let h = rows
        .iter()
        .map(|r| elm_eval(elm, r))
        .collect::<Result<Vec<_>>>()?;
    Ok(log_sum_exp(&h))
}

pub(crate) fn log_sum_exp(values: &[f64]) -> f64 {
    let max = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if !max.is_finite() {
        return max;
    }
    max + values.iter().map(|v| (v - max).exp()).sum::<f64>().ln()
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct EbmConfig {
    pub layers: usize,
    pub t0: f64,
    pub cooling: f64,
    pub seed: u64,
}

impl Default for EbmConfig {
    fn default() -> Self {
        EbmConfig {
            layers: 64,
            t0: 1.0,
            cooling: 0.95,
            seed: 0,
        }
    }
}

impl EbmConfig {
    pub fn validate(&self) -> Result<()> {
        if self.layers == 0 {
            return Err(Error::param("layers must be at least 1"));
        }
        if !(self.t0 > 0.0 && self.t0.is_finite()) {
            return Err(Error::param(format!(
                "t0 must be positive, got {}",
                self.t0
            )));
        }
        if !(self.cooling > 0.0 && self.cooling < 1.0) {
            return Err(Error::param(format!(
                "cooling factor must lie in (0, 1), got {}",
                self.cooling
            )));
        }
        Ok(())
    }

    /// `t0 * alpha^(l-1)` for `l = 1..=L`.
    pub fn temperatures(&self) -> Result<Vec<f64>> {
        let temps: Vec<f64> = (0..self.layers)
            .map(|l| self.t0 * self.cooling.powi(l as i32))
            .collect();
        let cooled = temps.windows(2).all(|w| w[1] < w[0]);
        if !cooled || temps.iter().any(|t| t.is_nan() || *t <= 0.0) {
            return Err(Error::param(
                "temperature schedule underflows; use fewer layers or slower cooling",
            ));
        }
        Ok(temps)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct EbmModel {
    pub elm: ElmModel,
    pub temperatures: Vec<f64>,
    pub t0: f64,
    pub cooling: f64,
    pub log_z: f64,
    pub train_rows: usize,
    pub input_mean: Vec<f64>,
    pub input_scale: Vec<f64>,
}

impl EbmModel {
    pub fn input_dim(&self) -> usize {
        self.input_mean.len()
    }

    pub fn standardize(&self, row: &[f64]) -> Result<Vec<f64>> {
        if row.len() != self.input_dim() {
            return Err(Error::Dimension(format!(
                "row has {} values, model expects {}",
                row.len(),
                self.input_dim()
            )));
        }
        Ok(row
            .iter()
            .zip(self.input_mean.iter().zip(&self.input_scale))
            .map(|(x, (m, s))| (x - m) / s)
            .collect())
    }

    /// `H~(row)`: the ELM output before adding `log Z`.
    pub fn raw_energy(&self, row: &[f64]) -> Result<f64> {
        elm_eval(&self.elm, &self.standardize(row)?)
    }

    pub fn log_partition(&self, rows: &[Vec<f64>]) -> Result<f64> {
        let std_rows = rows
            .iter()
            .map(|r| self.standardize(r))
            .collect::<Result<Vec<_>>>()?;
        log_partition(&self.elm, &std_rows)
    }

    /// `log p(row) = H~(row) - log Z`.
    pub fn log_prob(&self, row: &[f64]) -> Result<f64> {
        Ok(self.raw_energy(row)? - self.log_z)
    }
}

pub fn ebm_train(rows: &[Vec<f64>], config: &EbmConfig) -> Result<EbmModel> {
    config.validate()?;
    let targets = gaussian_log_density_target(rows)?;
    let (mean, var) = column_moments(rows)?;
    let scale: Vec<f64> = var.iter().map(|v| v.sqrt()).collect();
    let std_rows: Vec<Vec<f64>> = rows
        .iter()
        .map(|r| {
            r.iter()
                .zip(mean.iter().zip(&scale))
                .map(|(x, (m, s))| (x - m) / s)
                .collect()
        })
        .collect();

    let temperatures = config.temperatures()?;
    let elm = fit_scaled(&std_rows, &targets, config.layers, config.seed, |l| {
        1.0 / temperatures[l]
    })?;
    let log_z = log_partition(&elm, &std_rows)?;
    Ok(EbmModel {
        elm,
        temperatures,
        t0: config.t0,
        cooling: config.cooling,
        log_z,
        train_rows: rows.len(),
        input_mean: mean,
        input_scale: scale,
    })
}

/// `H(row) = H~(row) + log Z`; larger means a more probable state.
pub fn ebm_energy(model: &EbmModel, row: &[f64]) -> Result<f64> {
    Ok(model.raw_energy(row)? + model.log_z)
}

fn join(values: &[f64]) -> String {
    values
        .iter()
        .map(|v| format_real(*v))
        .collect::<Vec<_>>()
        .join(",")
}

/// Text form: header `EBM,v1,L,d,seed,t0,alpha,log_z`, then one named line
/// per tensor.
pub fn render_model(model: &EbmModel) -> String {
    let elm = &model.elm;
    let flat: Vec<f64> = elm.input_weights.iter().flatten().copied().collect();
    let mut out = format!(
        "EBM,v1,{},{},{},{},{},{}\n",
        elm.width(),
        model.input_dim(),
        elm.seed,
        format_real(model.t0),
        format_real(model.cooling),
        format_real(model.log_z)
    );
    out.push_str(&format!("temperatures,{}\n", join(&model.temperatures)));
    out.push_str(&format!("input_mean,{}\n", join(&model.input_mean)));
    out.push_str(&format!("input_scale,{}\n", join(&model.input_scale)));
    out.push_str(&format!("input_weights,{}\n", join(&flat)));
    out.push_str(&format!("biases,{}\n", join(&elm.biases)));
    out.push_str(&format!("output_weights,{}\n", join(&elm.output_weights)));
    out.push_str(&format!("output_bias,{}\n", format_real(elm.output_bias)));
    out.push_str(&format!("train_rows,{}\n", model.train_rows));
    out
}

fn parse_err(line: usize, message: impl Into<String>) -> Error {
    Error::Parse {
        line,
        message: message.into(),
    }
}

pub fn parse_model(text: &str) -> Result<EbmModel> {
    let mut lines = text.lines().enumerate().map(|(i, l)| (i + 1, l));
    let (_, header) = lines
        .next()
        .ok_or_else(|| parse_err(1, "empty model file"))?;
    let h: Vec<&str> = header.split(',').collect();
    if h.len() != 8 || h[0] != "EBM" || h[1] != "v1" {
        return Err(parse_err(
            1,
            "expected header `EBM,v1,L,d,seed,t0,alpha,log_z`",
        ));
    }
    let int = |s: &str| {
        s.parse::<usize>()
            .map_err(|_| parse_err(1, format!("bad integer `{s}`")))
    };
    let width = int(h[2])?;
    let d = int(h[3])?;
    let seed = h[4]
        .parse::<u64>()
        .map_err(|_| parse_err(1, format!("bad seed `{}`", h[4])))?;
    let t0 = parse_real(h[5], 1)?;
    let cooling = parse_real(h[6], 1)?;
    let log_z = parse_real(h[7], 1)?;

    let mut tensor = |name: &str, len: usize| -> Result<Vec<f64>> {
        let (line, text) = lines
            .next()
            .ok_or_else(|| parse_err(0, format!("missing `{name}` line")))?;
        let mut cells = text.split(',');
        if cells.next() != Some(name) {
            return Err(parse_err(line, format!("expected `{name}` line")));
        }
        let values = cells
            .map(|c| parse_real(c, line))
            .collect::<Result<Vec<_>>>()?;
        if values.len() != len {
            return Err(parse_err(
                line,
                format!("`{name}` has {} values, expected {len}", values.len()),
            ));
        }
        Ok(values)
    };
    let temperatures = tensor("temperatures", width)?;
    let input_mean = tensor("input_mean", d)?;
    let input_scale = tensor("input_scale", d)?;
    let flat = tensor("input_weights", width * d)?;
    let biases = tensor("biases", width)?;
    let output_weights = tensor("output_weights", width)?;
    let output_bias = tensor("output_bias", 1)?[0];
    let train_rows = tensor("train_rows", 1)?[0];
    if train_rows < 0.0 || train_rows.fract() != 0.0 {
        return Err(parse_err(9, "train_rows must be a non-negative integer"));
    }

    Ok(EbmModel {
        elm: ElmModel {
            input_weights: flat.chunks(d.max(1)).map(<[f64]>::to_vec).collect(),
            biases,
            output_weights,
            output_bias,
            seed,
        },
        temperatures,
        t0,
        cooling,
        log_z,
        train_rows: train_rows as usize,
        input_mean,
        input_scale,
    })
}

pub fn write_model(model: &EbmModel, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    fs::write(path, render_model(model)).map_err(|e| Error::io(path, e))
}

pub fn read_model(path: impl AsRef<Path>) -> Result<EbmModel> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_model(&text)
}
