//! Gompertz curve for the lower-income region.
//!
//! The complementary cumulative distribution is modeled as
//! `G(x) = exp(exp(A - B x))` (percent), which linearizes to
//! `ln ln G(x) = A - B x`. The zero-income boundary `G(0) = 100` fixes
//! `A = ln ln 100`.

use std::ops::RangeInclusive;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::binning::BinnedCCDF;
use crate::regression::{fit_line, LineFit};

pub const DEFAULT_A_TARGET: f64 = 1.5;
pub const DEFAULT_A_TOL: f64 = 0.1;

/// `ln ln 100`, the intercept for which `G(0) = 100`.
pub fn boundary_intercept() -> f64 {
    100f64.ln().ln()
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GompertzError {
    #[error("B must be positive and finite, got {0}")]
    BadSlope(f64),
    #[error("A must be finite, got {0}")]
    BadIntercept(f64),
    #[error("need at least {needed} points with F > 1, found {found}")]
    InsufficientData { needed: usize, found: usize },
    #[error("no prefix window gives A within {target} ± {tol}; closest intercept was {best}")]
    RegionNotFound { target: f64, tol: f64, best: f64 },
    #[error("exponential fit range {lo}..={hi} holds fewer than two points with F > 0")]
    EmptyRange { lo: f64, hi: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GompertzParams {
    pub a: f64,
    pub b: f64,
}

impl GompertzParams {
    pub fn new(a: f64, b: f64) -> Result<Self, GompertzError> {
        if !a.is_finite() {
            return Err(GompertzError::BadIntercept(a));
        }
        if !(b.is_finite() && b > 0.0) {
            return Err(GompertzError::BadSlope(b));
        }
        Ok(Self { a, b })
    }

    /// Curve satisfying the zero-income boundary exactly.
    pub fn with_boundary_intercept(b: f64) -> Result<Self, GompertzError> {
        Self::new(boundary_intercept(), b)
    }

    /// `A - B x`.
    pub fn exponent(&self, x: f64) -> f64 {
        self.a - self.b * x
    }

    /// `G(x)` in percent. Tends to 1 as `x → ∞`.
    pub fn ccdf(&self, x: f64) -> f64 {
        self.exponent(x).exp().exp()
    }

    /// `g(x) = B e^(A - Bx) e^(e^(A - Bx))`, equal to `-dG/dx`.
    pub fn density(&self, x: f64) -> f64 {
        let inner = self.exponent(x).exp();
        self.b * inner * inner.exp()
    }

    /// Whether `A` lies within `tol` of `ln ln 100`.
    pub fn is_boundary_consistent(&self, tol: f64) -> bool {
        (self.a - boundary_intercept()).abs() <= tol
    }

    /// Inverse of [`GompertzParams::ccdf`] for `1 < f`.
    pub fn inverse_ccdf(&self, f: f64) -> f64 {
        (self.a - f.ln().ln()) / self.b
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GompertzFit {
    pub params: GompertzParams,
    /// `(δA, δB)`, filled in by a resampling step.
    pub param_errors: Option<(f64, f64)>,
    /// Largest abscissa inside the Gompertz region.
    pub x_gmax: f64,
    /// Correlation of the double-log linear fit.
    pub correlation: f64,
    /// Percent of the population below `x_gmax`.
    pub population_fraction: f64,
    pub points_used: usize,
}

impl GompertzFit {
    pub fn with_errors(mut self, delta_a: f64, delta_b: f64) -> Self {
        self.param_errors = Some((delta_a, delta_b));
        self
    }
}

/// Double-log transform of the CCDF points where it is defined (`F > 1`).
pub fn linearized_points(ccdf: &BinnedCCDF) -> Vec<(f64, f64)> {
    ccdf.points()
        .iter()
        .filter(|p| p.x > 0.0 && p.f > 1.0)
        .map(|p| (p.x, p.f.ln().ln()))
        .collect()
}

/// Fits `A` and `B` on `ln ln F` and locates the end of the Gompertz region.
///
/// Prefix windows of the usable points are grown from the lowest abscissa;
/// the largest window whose intercept lies within `a_target ± a_tol` is kept
/// and its last abscissa is `x_gmax`.
pub fn fit_gompertz(ccdf: &BinnedCCDF, a_target: f64, a_tol: f64) -> Result<GompertzFit, GompertzError> {
    const MIN_POINTS: usize = 3;
    let points = linearized_points(ccdf);
    if points.len() < MIN_POINTS {
        return Err(GompertzError::InsufficientData {
            needed: MIN_POINTS,
            found: points.len(),
        });
    }
    let xs: Vec<f64> = points.iter().map(|p| p.0).collect();
    let ys: Vec<f64> = points.iter().map(|p| p.1).collect();

    let mut accepted: Option<LineFit> = None;
    let mut best = f64::NAN;
    for end in MIN_POINTS..=points.len() {
        let Some(line) = fit_line(&xs[..end], &ys[..end]) else {
            continue;
        };
        if best.is_nan() || (line.intercept - a_target).abs() < (best - a_target).abs() {
            best = line.intercept;
        }
        if (line.intercept - a_target).abs() <= a_tol && line.slope < 0.0 {
            accepted = Some(line);
        }
    }
    let line = accepted.ok_or(GompertzError::RegionNotFound {
        target: a_target,
        tol: a_tol,
        best,
    })?;
    let last = line.points - 1;
    let x_gmax = xs[last];
    let f_at_end = ccdf
        .points()
        .iter()
        .find(|p| p.x == x_gmax)
        .map(|p| p.f)
        .expect("x_gmax comes from the curve");
    Ok(GompertzFit {
        params: GompertzParams::new(line.intercept, -line.slope)?,
        param_errors: None,
        x_gmax,
        correlation: line.fit_correlation(),
        population_fraction: 100.0 - f_at_end,
        points_used: line.points,
    })
}

/// Semi-log fit `ln F = c - rate x` over the points inside `range`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ExponentialFit {
    pub rate: f64,
    pub intercept: f64,
    pub correlation: f64,
    pub points_used: usize,
}

/// Least squares on `(x, ln F)` for the comparison against a pure
/// exponential.
pub fn fit_exponential(ccdf: &BinnedCCDF, range: RangeInclusive<f64>) -> Result<ExponentialFit, GompertzError> {
    let (xs, ys): (Vec<f64>, Vec<f64>) = ccdf
        .points()
        .iter()
        .filter(|p| range.contains(&p.x) && p.f > 0.0)
        .map(|p| (p.x, p.f.ln()))
        .unzip();
    let empty = || GompertzError::EmptyRange {
        lo: *range.start(),
        hi: *range.end(),
    };
    let line = fit_line(&xs, &ys).ok_or_else(empty)?;
    Ok(ExponentialFit {
        rate: -line.slope,
        intercept: line.intercept,
        correlation: line.fit_correlation(),
        points_used: line.points,
    })
}

/// Linear fit of `ln ln F` over exactly the points inside `range`, with no
/// region search. Used to compare against [`fit_exponential`] on the same
/// points.
pub fn fit_gompertz_on_range(ccdf: &BinnedCCDF, range: RangeInclusive<f64>) -> Result<LineFit, GompertzError> {
    let (xs, ys): (Vec<f64>, Vec<f64>) = linearized_points(ccdf)
        .into_iter()
        .filter(|(x, _)| range.contains(x))
        .unzip();
    fit_line(&xs, &ys).ok_or(GompertzError::EmptyRange {
        lo: *range.start(),
        hi: *range.end(),
    })
}
