//! Diffusion estimation, forecasting and Brownian simulation.
//!
//! A smoothed series is treated as `x(t) = x(0) + sigma * B(t)` with `B` a
//! standard Brownian motion: increments over `dt` are independent
//! `N(0, sigma^2 dt)`. Forecasts are therefore martingale forecasts whose
//! variance grows linearly in the horizon.
//!
//! [`skorokhod_exit`] checks the embedding identity for a zero-mean two-point
//! law on `{a, b}`: the first exit time `T` of `(a, b)` by a standard Brownian
//! motion satisfies `E[T] = -a b`, the variance of the law, and `B(T) = b`
//! with probability `-a / (b - a)`.

use rand::Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::markov_mle::SmoothedSeries;
use crate::rng;
use crate::series_io::SampleSeries;

/// `(1/S) sum (dx_k)^2 / dt_k`, the MLE of the diffusion coefficient.
pub fn fit_sigma2(series: &SmoothedSeries) -> Result<f64> {
    if series.len() < 2 || series.times.len() != series.len() {
        return Err(Error::TooShort {
            what: "diffusion coefficient",
            min: 2,
            got: series.len().min(series.times.len()),
        });
    }
    let mut total = 0.0;
    for (t, x) in series.times.windows(2).zip(series.values.windows(2)) {
        let dt = t[1] - t[0];
        if dt.is_nan() || dt <= 0.0 {
            return Err(Error::InvalidSeries("non-increasing timestamps".into()));
        }
        let dx = x[1] - x[0];
        total += dx * dx / dt;
    }
    Ok(total / (series.len() - 1) as f64)
}

#[derive(Clone, Debug, PartialEq)]
pub struct ForecastResult {
    pub horizon: f64,
    pub mean: f64,
    pub variance: f64,
    pub sigma2: f64,
    /// `paths[i][j]` is path `i` after `j + 1` steps.
    pub paths: Option<Vec<Vec<f64>>>,
    pub seed: Option<u64>,
}

impl ForecastResult {
    /// Attaches `m` sampled paths reaching the horizon in `steps` steps.
    pub fn with_paths(mut self, steps: usize, m: usize, seed: u64) -> Result<Self> {
        if steps == 0 {
            return Err(Error::param("steps must be at least 1"));
        }
        let dt = self.horizon / steps as f64;
        self.paths = Some(sample_paths(self.mean, self.sigma2, dt, steps, m, seed)?);
        self.seed = Some(seed);
        Ok(self)
    }

    /// CSV with header `horizon,mean,variance,sigma2`.
    pub fn to_csv(&self) -> String {
        use crate::series_io::format_real as f;
        format!(
            "horizon,mean,variance,sigma2\n{},{},{},{}\n",
            f(self.horizon),
            f(self.mean),
            f(self.variance),
            f(self.sigma2)
        )
    }

    /// CSV with header `path,step,t,value`; empty when no paths were drawn.
    pub fn paths_csv(&self) -> String {
        use crate::series_io::format_real as f;
        let mut out = String::from("path,step,t,value\n");
        if let Some(paths) = &self.paths {
            for (i, p) in paths.iter().enumerate() {
                let dt = self.horizon / p.len() as f64;
                for (j, v) in p.iter().enumerate() {
                    out.push_str(&format!(
                        "{i},{},{},{}\n",
                        j + 1,
                        f(dt * (j + 1) as f64),
                        f(*v)
                    ));
                }
            }
        }
        out
    }
}

/// Mean is the last smoothed value, variance is `sigma2 * horizon`.
pub fn forecast(series: &SmoothedSeries, horizon: f64, sigma2: f64) -> Result<ForecastResult> {
    if !(horizon > 0.0 && horizon.is_finite()) {
        return Err(Error::param(format!(
            "horizon must be positive, got {horizon}"
        )));
    }
    if !(sigma2 >= 0.0 && sigma2.is_finite()) {
        return Err(Error::param(format!(
            "sigma2 must be non-negative, got {sigma2}"
        )));
    }
    let mean = series.last_value().ok_or(Error::TooShort {
        what: "forecast",
        min: 1,
        got: 0,
    })?;
    Ok(ForecastResult {
        horizon,
        mean,
        variance: sigma2 * horizon,
        sigma2,
        paths: None,
        seed: None,
    })
}

/// `m` paths of `steps` independent `N(0, sigma2 dt)` increments from
/// `start`. Path `i` draws from seed `seed + i`.
pub fn sample_paths(
    start: f64,
    sigma2: f64,
    dt: f64,
    steps: usize,
    m: usize,
    seed: u64,
) -> Result<Vec<Vec<f64>>> {
    if !(dt > 0.0 && dt.is_finite()) {
        return Err(Error::param(format!("dt must be positive, got {dt}")));
    }
    if steps == 0 || m == 0 {
        return Err(Error::param("steps and path count must be at least 1"));
    }
    if !(sigma2 >= 0.0 && sigma2.is_finite()) || !start.is_finite() {
        return Err(Error::param("start and sigma2 must be finite, sigma2 >= 0"));
    }
    let sd = (sigma2 * dt).sqrt();
    Ok((0..m as u64)
        .into_par_iter()
        .map(|i| {
            let mut rng = rng::derived(seed, i);
            let mut x = start;
            (0..steps)
                .map(|_| {
                    x += sd * rng.sample::<f64, _>(StandardNormal);
                    x
                })
                .collect()
        })
        .collect())
}

/// Standard Brownian path `B(0) = 0, B(dt), ..., B(steps dt)`.
pub fn simulate_brownian(steps: usize, dt: f64, seed: u64) -> Result<SampleSeries> {
    if steps == 0 {
        return Err(Error::param("steps must be at least 1"));
    }
    if !(dt > 0.0 && dt.is_finite()) {
        return Err(Error::param(format!("dt must be positive, got {dt}")));
    }
    let mut rng = rng::seeded(seed);
    let sd = dt.sqrt();
    let mut values = Vec::with_capacity(steps + 1);
    let mut x = 0.0;
    values.push(x);
    for _ in 0..steps {
        x += sd * rng.sample::<f64, _>(StandardNormal);
        values.push(x);
    }
    let times = (0..=steps).map(|i| i as f64 * dt).collect();
    SampleSeries::from_column(times, values, "B")
}

/// Zero-mean law on `{a, b}`, `a < 0 < b`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TwoPointDist {
    a: f64,
    b: f64,
}

impl TwoPointDist {
    pub fn new(a: f64, b: f64) -> Result<Self> {
        if !(a < 0.0 && a.is_finite()) || !(b > 0.0 && b.is_finite()) {
            return Err(Error::param(format!(
                "need a < 0 < b, got a = {a}, b = {b}"
            )));
        }
        Ok(TwoPointDist { a, b })
    }

    pub fn a(&self) -> f64 {
        self.a
    }

    pub fn b(&self) -> f64 {
        self.b
    }

    pub fn p_a(&self) -> f64 {
        self.b / (self.b - self.a)
    }

    pub fn p_b(&self) -> f64 {
        -self.a / (self.b - self.a)
    }

    pub fn mean(&self) -> f64 {
        self.a * self.p_a() + self.b * self.p_b()
    }

    /// `E[X^2] = -a b`.
    pub fn variance(&self) -> f64 {
        -self.a * self.b
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ExitEstimate {
    pub mean_exit_time: f64,
    pub hit_b_frequency: f64,
    pub trials: u64,
}

/// Euler simulation of the first exit of `(a, b)` by a standard Brownian
/// motion started at 0. Requires `dt <= 0.01 * min(a^2, b^2)`.
///
/// Trial `i` uses seed `seed + i`; step and hit counts are summed as
/// integers, so the result does not depend on scheduling.
pub fn skorokhod_exit(
    dist: &TwoPointDist,
    dt: f64,
    trials: u64,
    seed: u64,
) -> Result<ExitEstimate> {
    if trials == 0 {
        return Err(Error::param("trials must be at least 1"));
    }
    let limit = 0.01 * (dist.a * dist.a).min(dist.b * dist.b);
    if dt.is_nan() || dt <= 0.0 || dt > limit {
        return Err(Error::param(format!(
            "dt = {dt} too coarse for ({}, {}); need 0 < dt <= {limit}",
            dist.a, dist.b
        )));
    }
    let (a, b) = (dist.a, dist.b);
    let sd = dt.sqrt();
    let (steps, hits) = (0..trials)
        .into_par_iter()
        .map(|i| {
            let mut rng = rng::derived(seed, i);
            let mut x = 0.0f64;
            let mut n: u64 = 0;
            loop {
                x += sd * rng.sample::<f64, _>(StandardNormal);
                n += 1;
                if x <= a {
                    return (n, 0u64);
                }
                if x >= b {
                    return (n, 1u64);
                }
            }
        })
        .reduce(|| (0, 0), |l, r| (l.0 + r.0, l.1 + r.1));
    Ok(ExitEstimate {
        mean_exit_time: steps as f64 * dt / trials as f64,
        hit_b_frequency: hits as f64 / trials as f64,
        trials,
    })
}
