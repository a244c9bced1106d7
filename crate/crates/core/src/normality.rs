//! Shapiro-Wilk W test.
//!
//! Coefficients and significance levels follow Royston's approximations
//! (algorithm AS R94), valid for `3 <= n <= 5000`. The test is applied to
//! first differences of a series: Gaussian increments are the premise for
//! treating the series as a Markov diffusion.

use crate::error::{Error, Result};
use crate::markov_mle::increments;
use crate::series_io::SampleSeries;

pub const DEFAULT_ALPHA: f64 = 0.05;
pub const MIN_N: usize = 3;
pub const MAX_N: usize = 5000;

/// Weights `a_1..a_n` applied to the ascending order statistics.
/// Antisymmetric with unit sum of squares.
#[derive(Clone, Debug, PartialEq)]
pub struct SwCoefficients {
    pub n: usize,
    pub a: Vec<f64>,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SwResult {
    pub w: f64,
    pub p_value: f64,
    pub reject_normality: bool,
    pub alpha: f64,
    pub n: usize,
}

// Polynomial coefficients from AS R94, lowest order first.
const C1: [f64; 6] = [0.0, 0.221157, -0.147981, -2.071190, 4.434685, -2.706056];
const C2: [f64; 6] = [0.0, 0.042981, -0.293762, -1.752461, 5.682633, -3.582633];
const C3: [f64; 4] = [0.5440, -0.39978, 0.025054, -6.714e-4];
const C4: [f64; 4] = [1.3822, -0.77857, 0.062767, -0.0020322];
const C5: [f64; 4] = [-1.5861, -0.31082, -0.083751, 0.0038915];
const C6: [f64; 3] = [-0.4803, -0.082676, 0.0030302];
const G: [f64; 2] = [-2.273, 0.459];

fn poly(c: &[f64], x: f64) -> f64 {
    c.iter().rev().fold(0.0, |acc, &ci| acc * x + ci)
}

/// Normal quantile, algorithm AS 111.
fn ppnd(p: f64) -> f64 {
    const A: [f64; 4] = [
        2.50662823884,
        -18.61500062529,
        41.39119773534,
        -25.44106049637,
    ];
    const B: [f64; 4] = [
        -8.47351093090,
        23.08336743743,
        -21.06224101826,
        3.13082909833,
    ];
    const C: [f64; 4] = [-2.78718931138, -2.29796479134, 4.85014127135, 2.32121276858];
    const D: [f64; 2] = [3.54388924762, 1.63706781897];

    let q = p - 0.5;
    if q.abs() <= 0.42 {
        let r = q * q;
        return q * (((A[3] * r + A[2]) * r + A[1]) * r + A[0])
            / ((((B[3] * r + B[2]) * r + B[1]) * r + B[0]) * r + 1.0);
    }
    let r = if q > 0.0 { 1.0 - p } else { p };
    if r <= 0.0 {
        return 0.0;
    }
    let r = (-r.ln()).sqrt();
    let v = (((C[3] * r + C[2]) * r + C[1]) * r + C[0]) / ((D[1] * r + D[0]) * r + 1.0);
    if q < 0.0 {
        -v
    } else {
        v
    }
}

/// Standard normal tail area, algorithm AS 66. `upper` selects
/// `P(Z > x)` over `P(Z < x)`.
fn alnorm(x: f64, upper: bool) -> f64 {
    const LTONE: f64 = 7.0;
    const UTZERO: f64 = 38.0;
    const CON: f64 = 1.28;

    let (z, up) = if x < 0.0 { (-x, !upper) } else { (x, upper) };
    if z.is_nan() {
        return f64::NAN;
    }
    if !(z <= LTONE || (up && z <= UTZERO)) {
        return if up { 0.0 } else { 1.0 };
    }
    let y = 0.5 * z * z;
    let tail = if z <= CON {
        0.5 - z
            * (0.398942280444
                - 0.399903438504 * y
                    / (y + 5.75885480458
                        - 29.8213557808
                            / (y + 2.62433121679 + 48.6959930692 / (y + 5.92885724438))))
    } else {
        0.398942280385 * (-y).exp()
            / (z - 3.8052e-8
                + 1.00000615302
                    / (z + 3.98064794e-4
                        + 1.98615381364
                            / (z - 0.151679116635
                                + 5.29330324926
                                    / (z + 4.8385912808
                                        - 15.1508972451
                                            / (z + 0.742380924027
                                                + 30.789933034 / (z + 3.99019417011))))))
    };
    if up {
        tail
    } else {
        1.0 - tail
    }
}

pub fn sw_coefficients(n: usize) -> Result<SwCoefficients> {
    if !(MIN_N..=MAX_N).contains(&n) {
        return Err(Error::SampleSize(n));
    }
    let half = n / 2;
    // Upper-half weights, largest order statistic first.
    let mut upper = vec![0.0; half];
    if n == 3 {
        upper[0] = std::f64::consts::FRAC_1_SQRT_2;
    } else {
        let an = n as f64;
        let m: Vec<f64> = (0..half)
            .map(|i| -ppnd((i as f64 + 1.0 - 0.375) / (an + 0.25)))
            .collect();
        let summ2 = 2.0 * m.iter().map(|v| v * v).sum::<f64>();
        let ssumm2 = summ2.sqrt();
        let rsn = 1.0 / an.sqrt();
        let a1 = m[0] / ssumm2 + poly(&C1, rsn);

        let (first_free, fac) = if n > 5 {
            let a2 = m[1] / ssumm2 + poly(&C2, rsn);
            let fac = ((summ2 - 2.0 * m[0] * m[0] - 2.0 * m[1] * m[1])
                / (1.0 - 2.0 * a1 * a1 - 2.0 * a2 * a2))
                .sqrt();
            upper[1] = a2;
            (2, fac)
        } else {
            let fac = ((summ2 - 2.0 * m[0] * m[0]) / (1.0 - 2.0 * a1 * a1)).sqrt();
            (1, fac)
        };
        upper[0] = a1;
        for i in first_free..half {
            upper[i] = m[i] / fac;
        }
    }

    let mut a = vec![0.0; n];
    for (i, &u) in upper.iter().enumerate() {
        a[n - 1 - i] = u;
        a[i] = -u;
    }
    Ok(SwCoefficients { n, a })
}

/// Royston's normalizing transformation of `W` to an upper-tail p-value.
fn sw_p_value(w: f64, n: usize) -> f64 {
    if n == 3 {
        // Exact for n = 3.
        let w = w.max(0.75);
        return (1.0 - 6.0 / std::f64::consts::PI * w.sqrt().acos()).clamp(0.0, 1.0);
    }
    let an = n as f64;
    let y = (1.0 - w).ln();
    let p = if n <= 11 {
        let gamma = poly(&G, an);
        if y >= gamma {
            return 1e-19;
        }
        let y = -(gamma - y).ln();
        let m = poly(&C3, an);
        let s = poly(&C4, an).exp();
        alnorm((y - m) / s, true)
    } else {
        let xx = an.ln();
        let m = poly(&C5, xx);
        let s = poly(&C6, xx).exp();
        alnorm((y - m) / s, true)
    };
    p.clamp(0.0, 1.0)
}

/// W statistic and p-value, rejecting at [`DEFAULT_ALPHA`].
pub fn sw_statistic(sample: &[f64]) -> Result<SwResult> {
    sw_statistic_at(sample, DEFAULT_ALPHA)
}

pub fn sw_statistic_at(sample: &[f64], alpha: f64) -> Result<SwResult> {
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(Error::param(format!(
            "alpha must lie in (0, 1), got {alpha}"
        )));
    }
    let n = sample.len();
    if n < MIN_N {
        return Err(Error::TooShort {
            what: "Shapiro-Wilk sample",
            min: MIN_N,
            got: n,
        });
    }
    if sample.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("Shapiro-Wilk sample"));
    }
    let coeffs = sw_coefficients(n)?;

    let mut sorted = sample.to_vec();
    sorted.sort_by(f64::total_cmp);
    if sorted[0] == sorted[n - 1] {
        return Err(Error::ZeroVariance("Shapiro-Wilk sample (constant)".into()));
    }
    // Centered and range-scaled, which makes W affine invariant in practice.
    let range = sorted[n - 1] - sorted[0];
    let mean = sorted.iter().sum::<f64>() / n as f64;
    let centered: Vec<f64> = sorted.iter().map(|x| (x - mean) / range).collect();
    let ss: f64 = centered.iter().map(|x| x * x).sum();
    if ss == 0.0 {
        return Err(Error::ZeroVariance("Shapiro-Wilk sample".into()));
    }
    let num: f64 = coeffs.a.iter().zip(&centered).map(|(a, x)| a * x).sum();
    let w = (num * num / ss).min(1.0);
    let p_value = sw_p_value(w, n);

    Ok(SwResult {
        w,
        p_value,
        reject_normality: p_value < alpha,
        alpha,
        n,
    })
}

/// W test on the first differences of one feature column.
pub fn sw_test_increments(series: &SampleSeries, feature: usize, alpha: f64) -> Result<SwResult> {
    if series.len() < MIN_N + 1 {
        return Err(Error::TooShort {
            what: "increment normality test",
            min: MIN_N + 1,
            got: series.len(),
        });
    }
    let diffs = increments(&series.column(feature)?)?;
    sw_statistic_at(&diffs, alpha)
}
