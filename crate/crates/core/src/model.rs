//! The two-class model: Gompertz below the transition income, Pareto at and
//! above it.

use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::gompertz::GompertzParams;
use crate::ingest::{NormalizedSample, SampleEntry};
use crate::pareto::{normalized_beta, ParetoError, ParetoParams};
use crate::quadrature::{adaptive_simpson, QuadratureError};
use crate::rng::{substream, StreamDomain};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ModelError {
    #[error("x_pmin ({x_pmin}) is below x_gmax ({x_gmax})")]
    TransitionOrder { x_gmax: f64, x_pmin: f64 },
    #[error("transition income must be positive and finite, got {0}")]
    BadTransition(f64),
    #[error("mean income diverges for α = {0} ≤ 1")]
    MeanDivergence(f64),
    #[error("sample has zero total income")]
    DegenerateSample,
    #[error(transparent)]
    Pareto(#[from] ParetoError),
    #[error("mean-income integral failed: {0}")]
    Quadrature(#[from] QuadratureError),
}

const MEAN_INTEGRAL_TOL: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TwoClassModel {
    pub gomp: GompertzParams,
    pub par: ParetoParams,
    pub x_t: f64,
    pub delta_x_t: f64,
}

impl TwoClassModel {
    pub fn new(gomp: GompertzParams, par: ParetoParams, x_t: f64, delta_x_t: f64) -> Result<Self, ModelError> {
        if !(x_t.is_finite() && x_t > 0.0) {
            return Err(ModelError::BadTransition(x_t));
        }
        Ok(Self {
            gomp,
            par,
            x_t,
            delta_x_t: delta_x_t.max(0.0),
        })
    }

    /// Model whose Pareto amplitude makes the CCDF continuous at `x_t`.
    pub fn continuous(gomp: GompertzParams, alpha: f64, x_t: f64, delta_x_t: f64) -> Result<Self, ModelError> {
        let par = ParetoParams::new(alpha, normalized_beta(&gomp, alpha, x_t))?;
        Self::new(gomp, par, x_t, delta_x_t)
    }

    /// CCDF in percent; `x_t` belongs to the Pareto branch.
    pub fn ccdf(&self, x: f64) -> f64 {
        if x < self.x_t {
            self.gomp.ccdf(x)
        } else {
            self.par.beta * x.powf(-self.par.alpha)
        }
    }

    /// Probability density (percent per unit income).
    pub fn density(&self, x: f64) -> f64 {
        if x < self.x_t {
            self.gomp.density(x)
        } else {
            self.par.alpha * self.par.beta * x.powf(-(1.0 + self.par.alpha))
        }
    }

    /// Cumulative distribution `100 - F(x)`.
    pub fn cumulative(&self, x: f64) -> f64 {
        100.0 - self.ccdf(x)
    }

    /// `G(0)`, ideally 100.
    pub fn boundary_value(&self) -> f64 {
        self.gomp.ccdf(0.0)
    }

    /// Percent of the population in the Pareto branch, `P(x_t)`.
    pub fn tail_percent(&self) -> f64 {
        self.par.beta * self.x_t.powf(-self.par.alpha)
    }

    /// `(G(x_t) - P(x_t)) / P(x_t)`.
    pub fn continuity_residual(&self) -> f64 {
        let p = self.tail_percent();
        (self.gomp.ccdf(self.x_t) - p) / p
    }

    /// `∫_0^x w g(w) dw` by adaptive Simpson.
    pub fn lower_income_integral(&self, x: f64) -> Result<f64, ModelError> {
        Ok(adaptive_simpson(|w| w * self.gomp.density(w), 0.0, x, MEAN_INTEGRAL_TOL)?.value)
    }

    /// Model mean income `(1/100) [I(x_t) + αβ/(α-1) x_t^(1-α)]`.
    pub fn mean_income(&self) -> Result<f64, ModelError> {
        let alpha = self.par.alpha;
        if alpha <= 1.0 {
            return Err(ModelError::MeanDivergence(alpha));
        }
        let lower = self.lower_income_integral(self.x_t)?;
        let upper = alpha * self.par.beta / (alpha - 1.0) * self.x_t.powf(1.0 - alpha);
        Ok((lower + upper) / 100.0)
    }

    /// Inverse-CDF draw from a percent level `u ∈ (0, 100]`.
    ///
    /// `u > G(x_t)` inverts the Gompertz branch, `u ≤ G(x_t)` the Pareto
    /// branch. Levels above `G(0)` (possible when `A < ln ln 100`) map to
    /// zero income.
    pub fn quantile_from_level(&self, u: f64) -> f64 {
        if u > self.gomp.ccdf(self.x_t) {
            self.gomp.inverse_ccdf(u).max(0.0)
        } else {
            self.par.inverse_ccdf(u)
        }
    }
}

/// Transition income and its uncertainty from the ends of the two regions.
pub fn transition_income(x_gmax: f64, x_pmin: f64) -> Result<(f64, f64), ModelError> {
    if x_pmin < x_gmax {
        return Err(ModelError::TransitionOrder { x_gmax, x_pmin });
    }
    Ok((0.5 * (x_pmin + x_gmax), 0.5 * (x_pmin - x_gmax)))
}

/// Percent split between the region below `x_t` and the region at or above.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Shares {
    pub gompertz: f64,
    pub pareto: f64,
}

/// Weighted percent of persons below and at-or-above `x_t`.
pub fn population_shares(sample: &NormalizedSample, x_t: f64) -> Shares {
    let upper: f64 = sample
        .entries()
        .iter()
        .filter(|e| e.x >= x_t)
        .map(|e| e.multiplicity)
        .fold(0.0, |acc, m| acc + m);
    let pareto = 100.0 * upper / sample.total_population();
    Shares {
        gompertz: 100.0 - pareto,
        pareto,
    }
}

/// Percent of total income received below and at-or-above `x_t`.
pub fn income_shares(sample: &NormalizedSample, x_t: f64) -> Result<Shares, ModelError> {
    let total = sample.total_income();
    if !(total > 0.0) {
        return Err(ModelError::DegenerateSample);
    }
    let upper: f64 = sample
        .entries()
        .iter()
        .filter(|e| e.x >= x_t)
        .map(|e| e.x * e.multiplicity)
        .fold(0.0, |acc, m| acc + m);
    let pareto = 100.0 * upper / total;
    Ok(Shares {
        gompertz: 100.0 - pareto,
        pareto,
    })
}

/// Draws per random stream in [`sample_model`].
pub const SAMPLING_BLOCK: usize = 1 << 16;

/// `count` independent draws from the model, unit multiplicity each, in the
/// model's own (normalized) units.
///
/// Draw `i` comes from block `i / SAMPLING_BLOCK`, and each block has its own
/// stream derived from `seed`, so the output depends only on
/// `(model, count, seed)`.
pub fn sample_model(model: &TwoClassModel, count: usize, seed: u64) -> NormalizedSample {
    let mut entries = Vec::with_capacity(count);
    for (block, start) in (0..count).step_by(SAMPLING_BLOCK).enumerate() {
        let mut rng = substream(seed, StreamDomain::Sampling, block as u64);
        let len = SAMPLING_BLOCK.min(count - start);
        entries.extend((0..len).map(|_| {
            // random::<f64>() is in [0, 1), so u is in (0, 100].
            let u = 100.0 * (1.0 - rng.random::<f64>());
            SampleEntry {
                x: model.quantile_from_level(u),
                multiplicity: 1.0,
            }
        }));
    }
    NormalizedSample::from_entries(entries)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gompertz::boundary_intercept;

    fn reference_2005() -> TwoClassModel {
        TwoClassModel::continuous(GompertzParams::new(1.54, 0.33).unwrap(), 2.84, 7.403, 0.0).unwrap()
    }

    #[test]
    fn transition_income_examples() {
        let (x_t, dx) = transition_income(6.606, 40.0).unwrap();
        assert!((x_t - 23.303).abs() < 1e-12 && (dx - 16.697).abs() < 1e-12);
        let (x_t, dx) = transition_income(6.920, 40.0).unwrap();
        assert!((x_t - 23.46).abs() < 1e-12 && (dx - 16.54).abs() < 1e-12);
        assert_eq!(transition_income(7.533, 7.533).unwrap(), (7.533, 0.0));
        assert!(matches!(transition_income(8.0, 7.0), Err(ModelError::TransitionOrder { .. })));
    }

    #[test]
    fn continuity_residuals() {
        let m = reference_2005();
        assert!(m.continuity_residual().abs() < 1e-12);

        let mut bumped = m;
        bumped.par.beta *= 1.01;
        assert!((bumped.continuity_residual() - (1.0 / 1.01 - 1.0)).abs() < 1e-12);

        let table = TwoClassModel::new(m.gomp, ParetoParams::new(2.84, 441.0).unwrap(), 7.403, 0.0).unwrap();
        assert!(table.continuity_residual().abs() < 0.01);
    }

    #[test]
    fn mean_income_checks() {
        let mut m = reference_2005();
        m.par.alpha = 1.0;
        assert!(matches!(m.mean_income(), Err(ModelError::MeanDivergence(_))));

        // Pareto term alone: αβ/(α-1) x_t^(1-α) / 100 with α=2, β=100, x_t=10.
        let pareto_only = 2.0 * 100.0 / 1.0 * 10f64.powf(-1.0) / 100.0;
        assert!((pareto_only - 0.2).abs() < 1e-15);
        let m = TwoClassModel::new(
            GompertzParams::new(1.54, 0.33).unwrap(),
            ParetoParams::new(2.0, 100.0).unwrap(),
            10.0,
            0.0,
        )
        .unwrap();
        let lower = m.lower_income_integral(10.0).unwrap();
        assert!((m.mean_income().unwrap() - (lower / 100.0 + pareto_only)).abs() < 1e-12);
    }

    #[test]
    fn whole_period_mean_is_near_unity() {
        // A = 1.54, B = 0.39 with the median tail α = 2.75 at x_t = 7.63.
        let m = TwoClassModel::continuous(GompertzParams::new(1.54, 0.39).unwrap(), 2.75, 7.63, 0.0).unwrap();
        let mean = m.mean_income().unwrap();
        assert!((mean - 1.0).abs() < 0.15, "{mean}");
    }

    #[test]
    fn normalization_integral_is_100() {
        let gomp = GompertzParams::with_boundary_intercept(0.38).unwrap();
        let m = TwoClassModel::continuous(gomp, 2.7, 7.8, 0.0).unwrap();
        let body = adaptive_simpson(|x| gomp.density(x), 0.0, m.x_t, 1e-12).unwrap().value;
        let tail = m.par.beta * m.x_t.powf(-m.par.alpha);
        assert!((body + tail - 100.0).abs() < 1e-6);
        assert!((m.boundary_value() - 100.0).abs() < 1e-9);
        assert!(m.gomp.a == boundary_intercept());
    }

    #[test]
    fn share_examples() {
        let sample = NormalizedSample::from_entries(vec![
            SampleEntry { x: 1.0, multiplicity: 99.0 },
            SampleEntry { x: 10.0, multiplicity: 1.0 },
        ]);
        let pop = population_shares(&sample, 7.4);
        assert!((pop.gompertz - 99.0).abs() < 1e-12 && (pop.pareto - 1.0).abs() < 1e-12);
        let inc = income_shares(&sample, 7.4).unwrap();
        assert!((inc.gompertz - 9900.0 / 109.0).abs() < 1e-12);
        assert!((inc.pareto - 1000.0 / 109.0).abs() < 1e-12);

        let low = NormalizedSample::from_values([0.5, 1.0, 2.0]);
        assert_eq!(population_shares(&low, 7.4).gompertz, 100.0);
        assert_eq!(income_shares(&low, 7.4).unwrap().pareto, 0.0);

        let broke = NormalizedSample::from_values([0.0, 0.0]);
        assert!(matches!(income_shares(&broke, 1.0), Err(ModelError::DegenerateSample)));
    }

    #[test]
    fn sampling_is_deterministic() {
        let m = reference_2005();
        let a = sample_model(&m, 100_000, 17);
        let b = sample_model(&m, 100_000, 17);
        let c = sample_model(&m, 100_000, 18);
        assert_eq!(a, b);
        assert_ne!(a, c);
        // A prefix of a longer run is the shorter run.
        let short = sample_model(&m, 70_000, 17);
        assert_eq!(short.entries(), &a.entries()[..70_000]);
    }

    #[test]
    fn branch_tie_goes_to_pareto() {
        let m = reference_2005();
        let level = m.gomp.ccdf(m.x_t);
        let x = m.quantile_from_level(level);
        assert!((x - m.x_t).abs() < 1e-9);
        assert!(m.quantile_from_level(level * 1.0001) < m.x_t);
    }
}
