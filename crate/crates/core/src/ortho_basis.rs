//! Segment vectors of a smoothed series and their odd/even rescaling.
//!
//! Segment `k` joins smoothed points `k` and `k+1` in the (time, value)
//! plane. Odd-indexed segments are rescaled to length `c_k` along their own
//! direction, where `c_k` subtracts the projection of the neighbouring segment;
//! even-indexed segments pass through. The Fourier factor `||x_k|| / c_k`
//! undoes the rescaling. Indices are 1-based throughout, as in `k` below.

use std::fmt;

use crate::error::{Error, Result};
use crate::markov_mle::SmoothedSeries;

/// Cosines at or below this magnitude take the right-angle branch.
pub const ORTHOGONAL_EPS: f64 = 1e-12;
/// `|c| < DEGENERATE_EPS * ||x_k||` is an error.
pub const DEGENERATE_EPS: f64 = 1e-12;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SegmentVector {
    pub k: usize,
    pub dt: f64,
    pub dv: f64,
}

impl SegmentVector {
    pub fn new(k: usize, dt: f64, dv: f64) -> Self {
        SegmentVector { k, dt, dv }
    }

    pub fn norm(&self) -> f64 {
        self.dt.hypot(self.dv)
    }

    pub fn dot(&self, other: &SegmentVector) -> f64 {
        self.dt * other.dt + self.dv * other.dv
    }

    fn scaled(&self, factor: f64) -> SegmentVector {
        SegmentVector {
            k: self.k,
            dt: self.dt * factor,
            dv: self.dv * factor,
        }
    }
}

/// Which rule produced a basis entry.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Parity {
    /// Odd `k < S`, scaled against `x_{k+1}`.
    Odd,
    /// Even `k`, passed through.
    Even,
    /// `k = S` with `S` odd, scaled against `x_{S-1}`.
    Last,
}

impl Parity {
    pub fn as_str(self) -> &'static str {
        match self {
            Parity::Odd => "odd",
            Parity::Even => "even",
            Parity::Last => "last",
        }
    }
}

impl fmt::Display for Parity {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BasisEntry {
    pub z: SegmentVector,
    pub c: f64,
    pub y: f64,
    pub fourier: f64,
    pub parity: Parity,
}

#[derive(Clone, Debug, PartialEq)]
pub struct OrthoBasis {
    pub entries: Vec<BasisEntry>,
}

impl OrthoBasis {
    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// CSV with columns `k,zt,zv,c,y,fourier,parity`.
    pub fn to_csv(&self) -> String {
        use crate::series_io::format_real as f;
        let mut out = String::from("k,zt,zv,c,y,fourier,parity\n");
        for e in &self.entries {
            out.push_str(&format!(
                "{},{},{},{},{},{},{}\n",
                e.z.k,
                f(e.z.dt),
                f(e.z.dv),
                f(e.c),
                f(e.y),
                f(e.fourier),
                e.parity
            ));
        }
        out
    }
}

pub fn segment_vectors(series: &SmoothedSeries) -> Result<Vec<SegmentVector>> {
    if series.len() < 2 || series.times.len() != series.len() {
        return Err(Error::TooShort {
            what: "segment vectors",
            min: 2,
            got: series.len().min(series.times.len()),
        });
    }
    Ok(series
        .times
        .windows(2)
        .zip(series.values.windows(2))
        .enumerate()
        .map(|(i, (t, v))| SegmentVector::new(i + 1, t[1] - t[0], v[1] - v[0]))
        .collect())
}

fn checked_norm(v: &SegmentVector) -> Result<f64> {
    let n = v.norm();
    if n > 0.0 && n.is_finite() {
        Ok(n)
    } else {
        Err(Error::ZeroNorm(v.k))
    }
}

/// Cosine of the angle between two segments, clamped to `[-1, 1]`.
pub fn cosine_y(a: &SegmentVector, b: &SegmentVector) -> Result<f64> {
    let na = checked_norm(a)?;
    let nb = checked_norm(b)?;
    Ok((a.dot(b) / (na * nb)).clamp(-1.0, 1.0))
}

/// Scale constant for `xk` against `neighbor`.
///
/// `arccos(y)` above a right angle adds `y * ||neighbor||` (y < 0), below it
/// subtracts, so both branches equal `||xk|| - |y| * ||neighbor||`.
pub fn scale_c(xk: &SegmentVector, neighbor: &SegmentVector) -> Result<f64> {
    let (c, _) = scale_with_cosine(xk, neighbor)?;
    Ok(c)
}

fn scale_with_cosine(xk: &SegmentVector, neighbor: &SegmentVector) -> Result<(f64, f64)> {
    let norm = checked_norm(xk)?;
    let y = cosine_y(xk, neighbor)?;
    let proj = y * neighbor.norm();
    let c = if y.abs() <= ORTHOGONAL_EPS {
        norm
    } else if y < 0.0 {
        norm + proj
    } else {
        norm - proj
    };
    if c.abs() < DEGENERATE_EPS * norm {
        return Err(Error::DegenerateScale { index: xk.k, c });
    }
    Ok((c, y))
}

pub fn orthogonalize(vectors: &[SegmentVector]) -> Result<OrthoBasis> {
    let s = vectors.len();
    if s < 2 {
        return Err(Error::TooShort {
            what: "orthogonalize",
            min: 2,
            got: s,
        });
    }
    let mut entries = Vec::with_capacity(s);
    for (i, x) in vectors.iter().enumerate() {
        let k = i + 1;
        let last = k == s;
        let neighbor = if last {
            &vectors[i - 1]
        } else {
            &vectors[i + 1]
        };
        let parity = match (k % 2 == 1, last) {
            (false, _) => Parity::Even,
            (true, false) => Parity::Odd,
            (true, true) => Parity::Last,
        };

        let entry = if parity == Parity::Even {
            let norm = checked_norm(x)?;
            BasisEntry {
                z: *x,
                c: norm,
                y: cosine_y(x, neighbor)?,
                fourier: 1.0,
                parity,
            }
        } else {
            let norm = checked_norm(x)?;
            let (c, y) = scale_with_cosine(x, neighbor)?;
            // A right angle leaves the segment untouched.
            let z = if c == norm { *x } else { x.scaled(c / norm) };
            BasisEntry {
                z,
                c,
                y,
                fourier: norm / c,
                parity,
            }
        };
        entries.push(entry);
    }
    Ok(OrthoBasis { entries })
}

/// `x_k = z_k * fourier_k`, the inverse of [`orthogonalize`].
pub fn reconstruct(basis: &OrthoBasis) -> Result<Vec<SegmentVector>> {
    basis
        .entries
        .iter()
        .map(|e| {
            if e.c == 0.0 || !e.fourier.is_finite() {
                return Err(Error::DegenerateScale {
                    index: e.z.k,
                    c: e.c,
                });
            }
            if e.fourier == 1.0 {
                Ok(e.z)
            } else {
                Ok(e.z.scaled(e.fourier))
            }
        })
        .collect()
}
