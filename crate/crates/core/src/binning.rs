//! Logarithmic evaluation grid and the empirical complementary cumulative
//! distribution in percent.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::ingest::NormalizedSample;

pub const DEFAULT_X_MIN: f64 = 0.01;
pub const DEFAULT_BIN_RATIO: f64 = 1.1;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum BinningError {
    #[error("x_min must be positive and finite, got {0}")]
    BadMinimum(f64),
    #[error("bin ratio must exceed 1, got {0}")]
    BadRatio(f64),
    #[error("x_max ({x_max}) must exceed x_min ({x_min})")]
    BadRange { x_min: f64, x_max: f64 },
    #[error("evaluation grid is empty")]
    EmptyGrid,
    #[error("sample is empty")]
    EmptySample,
    #[error("CCDF points must be ordered in x, non-increasing and within [0, 100]")]
    InvalidCurve,
}

/// Geometric abscissae `x_j = ratio^(j-1) * x_min`.
#[derive(Debug, Clone, PartialEq)]
pub struct LogBinGrid {
    x_min: f64,
    ratio: f64,
    abscissae: Vec<f64>,
}

impl LogBinGrid {
    pub fn x_min(&self) -> f64 {
        self.x_min
    }

    pub fn ratio(&self) -> f64 {
        self.ratio
    }

    pub fn abscissae(&self) -> &[f64] {
        &self.abscissae
    }

    pub fn len(&self) -> usize {
        self.abscissae.len()
    }

    pub fn is_empty(&self) -> bool {
        self.abscissae.is_empty()
    }

    /// Number of abscissae `≤ x`: the grid points at which `x` is counted.
    fn covered(&self, x: f64) -> usize {
        self.abscissae.partition_point(|&a| a <= x)
    }
}

fn grid_point(x_min: f64, ratio: f64, j: usize) -> f64 {
    x_min * ratio.powi(j as i32)
}

/// Grid from `x_min` up to the first abscissa at or beyond `x_max`.
pub fn build_log_bins(x_min: f64, ratio: f64, x_max: f64) -> Result<LogBinGrid, BinningError> {
    if !(x_min.is_finite() && x_min > 0.0) {
        return Err(BinningError::BadMinimum(x_min));
    }
    if !(ratio.is_finite() && ratio > 1.0) {
        return Err(BinningError::BadRatio(ratio));
    }
    if !(x_max.is_finite() && x_max > x_min) {
        return Err(BinningError::BadRange { x_min, x_max });
    }
    let estimate = ((x_max / x_min).ln() / ratio.ln()).ceil().max(1.0) as usize;
    let mut abscissae: Vec<f64> = (0..=estimate).map(|j| grid_point(x_min, ratio, j)).collect();
    while *abscissae.last().expect("nonempty") < x_max {
        abscissae.push(grid_point(x_min, ratio, abscissae.len()));
    }
    while abscissae.len() > 1 && abscissae[abscissae.len() - 2] >= x_max {
        abscissae.pop();
    }
    Ok(LogBinGrid {
        x_min,
        ratio,
        abscissae,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CcdfPoint {
    pub x: f64,
    /// Percent of the population with income `≥ x`.
    pub f: f64,
    /// Percent of the population with income `< x`, stored as `100 - f`.
    pub cumulative: f64,
}

/// Complementary cumulative distribution sampled at increasing abscissae.
#[derive(Debug, Clone, PartialEq)]
pub struct BinnedCCDF {
    points: Vec<CcdfPoint>,
    population: f64,
}

impl BinnedCCDF {
    /// Curve from `(x, F)` pairs, e.g. an analytic CCDF evaluated on a grid.
    pub fn from_points(points: impl IntoIterator<Item = (f64, f64)>, population: f64) -> Result<Self, BinningError> {
        let points: Vec<CcdfPoint> = points
            .into_iter()
            .map(|(x, f)| CcdfPoint {
                x,
                f,
                cumulative: 100.0 - f,
            })
            .collect();
        let ordered = points.windows(2).all(|w| w[0].x < w[1].x && w[0].f >= w[1].f);
        let bounded = points.iter().all(|p| p.x.is_finite() && (0.0..=100.0).contains(&p.f));
        if !(ordered && bounded) {
            return Err(BinningError::InvalidCurve);
        }
        Ok(Self { points, population })
    }

    pub fn points(&self) -> &[CcdfPoint] {
        &self.points
    }

    pub fn population(&self) -> f64 {
        self.population
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }
}

/// `F(x)` in percent: weighted share of the sample with income `≥ x`.
pub fn ccdf_value(sample: &NormalizedSample, x: f64) -> f64 {
    let above: f64 = sample
        .entries()
        .iter()
        .filter(|e| e.x >= x)
        .map(|e| e.multiplicity)
        .fold(0.0, |acc, m| acc + m);
    100.0 * above / sample.total_population()
}

/// Evaluates the CCDF of `sample` at every abscissa of `grid`.
///
/// Each entry is assigned to the grid points it reaches, so a single pass
/// over the sample suffices; the comparisons are the same `x ≥ x_j` tests a
/// direct count would make.
pub fn empirical_ccdf(sample: &NormalizedSample, grid: &LogBinGrid) -> Result<BinnedCCDF, BinningError> {
    if grid.is_empty() {
        return Err(BinningError::EmptyGrid);
    }
    if sample.is_empty() {
        return Err(BinningError::EmptySample);
    }
    let n = grid.len();
    // reach[k]: population reaching exactly the first k abscissae.
    let mut reach = vec![0.0; n + 1];
    for e in sample.entries() {
        reach[grid.covered(e.x)] += e.multiplicity;
    }
    let total = sample.total_population();
    let mut above = vec![0.0; n];
    let mut acc = 0.0;
    for j in (0..n).rev() {
        acc += reach[j + 1];
        above[j] = acc;
    }
    let points = grid
        .abscissae()
        .iter()
        .zip(&above)
        .map(|(&x, &a)| {
            // Suffix sums can round a hair past the total.
            let f = (100.0 * a / total).min(100.0);
            CcdfPoint {
                x,
                f,
                cumulative: 100.0 - f,
            }
        })
        .collect();
    Ok(BinnedCCDF {
        points,
        population: total,
    })
}
