//! Lorenz curve and Gini coefficient of a weighted sample.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::ingest::NormalizedSample;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum InequalityError {
    #[error("sample has zero total income")]
    DegenerateSample,
}

/// Piecewise-linear Lorenz curve from `(0, 0)` to `(1, 1)`: cumulative
/// population share against cumulative income share, incomes ascending.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LorenzCurve {
    points: Vec<(f64, f64)>,
}

impl LorenzCurve {
    pub fn points(&self) -> &[(f64, f64)] {
        &self.points
    }

    /// Curve value at population share `p`, interpolating between vertices.
    pub fn at(&self, p: f64) -> f64 {
        let p = p.clamp(0.0, 1.0);
        let i = self.points.partition_point(|v| v.0 < p);
        if i == 0 {
            return self.points[0].1;
        }
        let (p0, l0) = self.points[i - 1];
        let (p1, l1) = self.points[i];
        if p1 == p0 {
            l1
        } else {
            l0 + (l1 - l0) * (p - p0) / (p1 - p0)
        }
    }

    /// At most `max_points` vertices taken at an even stride, endpoints kept.
    /// Intended for plot export of very large samples.
    pub fn thinned(&self, max_points: usize) -> LorenzCurve {
        let n = self.points.len();
        if n <= max_points || max_points < 2 {
            return self.clone();
        }
        let last = n - 1;
        let slots = max_points - 1;
        let mut points: Vec<(f64, f64)> = (0..slots).map(|k| self.points[k * last / slots]).collect();
        points.push(self.points[last]);
        points.dedup();
        LorenzCurve { points }
    }
}

/// Builds the curve with one vertex per distinct income.
///
/// Entries with equal income are merged, so replicating entries or scaling
/// multiplicities leaves the vertices unchanged. Zero incomes count in the
/// population with no income share.
pub fn lorenz_curve(sample: &NormalizedSample) -> Result<LorenzCurve, InequalityError> {
    let total_income = sample.total_income();
    if !(total_income > 0.0) {
        return Err(InequalityError::DegenerateSample);
    }
    let total_population = sample.total_population();
    let mut entries: Vec<(f64, f64)> = sample.entries().iter().map(|e| (e.x, e.multiplicity)).collect();
    entries.sort_by(|a, b| a.0.total_cmp(&b.0));

    let mut points = Vec::with_capacity(entries.len() + 1);
    points.push((0.0, 0.0));
    let (mut people, mut income) = (0.0, 0.0);
    let mut i = 0;
    while i < entries.len() {
        let x = entries[i].0;
        while i < entries.len() && entries[i].0 == x {
            people += entries[i].1;
            income += entries[i].0 * entries[i].1;
            i += 1;
        }
        points.push((people / total_population, income / total_income));
    }
    *points.last_mut().expect("at least one vertex") = (1.0, 1.0);
    Ok(LorenzCurve { points })
}

/// `1 - 2 S`, with `S` the trapezoid area under the curve's vertices.
pub fn gini(curve: &LorenzCurve) -> f64 {
    let area: f64 = curve
        .points
        .windows(2)
        .map(|w| (w[1].0 - w[0].0) * (w[0].1 + w[1].1) * 0.5)
        .sum();
    (1.0 - 2.0 * area).max(0.0)
}
