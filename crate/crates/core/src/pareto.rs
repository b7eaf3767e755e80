//! Pareto power law for the high-income tail: `P(x) = β x^(-α)` (percent).
//!
//! Two estimators are provided. [`fit_pareto_lsf`] is a straight-line fit of
//! the binned CCDF in log-log space. [`fit_pareto_mle`] maximizes the
//! likelihood of the raw tail observations; `β` then follows from continuity
//! with the Gompertz curve at the transition income, and the error on `α` is
//! the width of the likelihood viewed as a distribution over `α > 1`.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::binning::BinnedCCDF;
use crate::gompertz::GompertzParams;
use crate::ingest::SampleEntry;
use crate::quadrature::{gauss_kronrod, QuadratureError};
use crate::regression::fit_line;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ParetoError {
    #[error("α must be positive and finite, got {0}")]
    BadExponent(f64),
    #[error("β must be positive and finite, got {0}")]
    BadAmplitude(f64),
    #[error("income must be positive, got {0}")]
    Domain(f64),
    #[error("tail observation {x} lies below the threshold {x_t}")]
    BelowThreshold { x: f64, x_t: f64 },
    #[error("need {needed} tail points, found {found}")]
    InsufficientData { needed: f64, found: f64 },
    #[error("every tail observation equals the threshold; α is unbounded")]
    InfiniteAlpha,
    #[error("likelihood width integration failed: {0}")]
    Quadrature(#[from] QuadratureError),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ParetoParams {
    pub alpha: f64,
    pub beta: f64,
}

impl ParetoParams {
    pub fn new(alpha: f64, beta: f64) -> Result<Self, ParetoError> {
        if !(alpha.is_finite() && alpha > 0.0) {
            return Err(ParetoError::BadExponent(alpha));
        }
        if !(beta.is_finite() && beta > 0.0) {
            return Err(ParetoError::BadAmplitude(beta));
        }
        Ok(Self { alpha, beta })
    }

    /// `P(x) = β x^(-α)`.
    pub fn ccdf(&self, x: f64) -> Result<f64, ParetoError> {
        check_positive(x)?;
        Ok(self.beta * x.powf(-self.alpha))
    }

    /// `p(x) = α β x^(-(1+α))`, equal to `-dP/dx`.
    pub fn density(&self, x: f64) -> Result<f64, ParetoError> {
        check_positive(x)?;
        Ok(self.alpha * self.beta * x.powf(-(1.0 + self.alpha)))
    }

    /// Income at which the tail CCDF equals `f` percent.
    pub fn inverse_ccdf(&self, f: f64) -> f64 {
        (self.beta / f).powf(1.0 / self.alpha)
    }
}

fn check_positive(x: f64) -> Result<(), ParetoError> {
    if x > 0.0 {
        Ok(())
    } else {
        Err(ParetoError::Domain(x))
    }
}

/// Amplitude making the Pareto tail meet the Gompertz curve at `x_t`:
/// `β = x_t^α · G(x_t)`.
pub fn normalized_beta(gomp: &GompertzParams, alpha: f64, x_t: f64) -> f64 {
    x_t.powf(alpha) * gomp.ccdf(x_t)
}

/// Log-log least-squares estimate.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LsfFit {
    pub alpha: f64,
    pub beta: f64,
    pub correlation: f64,
    pub points_used: usize,
    /// `(δα, δβ)`, filled in by a resampling step.
    pub errors: Option<(f64, f64)>,
}

/// Fits `ln F = ln β - α ln x` over the CCDF points with `x ≥ x_pmin` and
/// `F > 0`.
pub fn fit_pareto_lsf(ccdf: &BinnedCCDF, x_pmin: f64) -> Result<LsfFit, ParetoError> {
    const MIN_POINTS: usize = 3;
    check_positive(x_pmin)?;
    let (xs, ys): (Vec<f64>, Vec<f64>) = ccdf
        .points()
        .iter()
        .filter(|p| p.x >= x_pmin && p.f > 0.0)
        .map(|p| (p.x.ln(), p.f.ln()))
        .unzip();
    if xs.len() < MIN_POINTS {
        return Err(ParetoError::InsufficientData {
            needed: MIN_POINTS as f64,
            found: xs.len() as f64,
        });
    }
    let line = fit_line(&xs, &ys).ok_or(ParetoError::InsufficientData {
        needed: MIN_POINTS as f64,
        found: xs.len() as f64,
    })?;
    Ok(LsfFit {
        alpha: -line.slope,
        beta: line.intercept.exp(),
        correlation: line.fit_correlation(),
        points_used: line.points,
        errors: None,
    })
}

/// Likelihood of a Pareto tail above `x_t`, viewed as a function of `α`.
///
/// Multiplicities act as replication counts, so `n = Σ m_j` and
/// `b = Σ m_j ln x_j`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ParetoLikelihood {
    n: f64,
    /// `Σ m_j ln(x_j / x_t)`.
    sum_log_ratio: f64,
    sum_ln_x: f64,
    ln_x_t: f64,
    /// `ln a = n e^(A - B x_t)`: the α-independent factor from the
    /// continuity normalization.
    ln_prefactor: f64,
}

/// Mean and spread of `α` under the normalized likelihood on `[1, ∞)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AlphaMoments {
    pub mean: f64,
    pub second: f64,
    pub std: f64,
}

/// Nats below the peak at which the likelihood is treated as zero.
const LIKELIHOOD_CUTOFF: f64 = 60.0;
const MOMENT_REL_TOL: f64 = 1e-8;

impl ParetoLikelihood {
    pub fn new(tail: &[SampleEntry], x_t: f64, ln_prefactor: f64) -> Result<Self, ParetoError> {
        check_positive(x_t)?;
        let mut n = 0.0;
        let mut sum_log_ratio = 0.0;
        let mut sum_ln_x = 0.0;
        for e in tail {
            if !(e.x >= x_t) {
                return Err(ParetoError::BelowThreshold { x: e.x, x_t });
            }
            n += e.multiplicity;
            sum_log_ratio += e.multiplicity * (e.x / x_t).ln();
            sum_ln_x += e.multiplicity * e.x.ln();
        }
        if n < 2.0 {
            return Err(ParetoError::InsufficientData { needed: 2.0, found: n });
        }
        if sum_log_ratio <= 0.0 {
            return Err(ParetoError::InfiniteAlpha);
        }
        Ok(Self {
            n,
            sum_log_ratio,
            sum_ln_x,
            ln_x_t: x_t.ln(),
            ln_prefactor,
        })
    }

    /// Likelihood with the continuity prefactor `a = exp(n e^(A - B x_t))`.
    pub fn with_gompertz(tail: &[SampleEntry], x_t: f64, gomp: &GompertzParams) -> Result<Self, ParetoError> {
        let n: f64 = tail.iter().map(|e| e.multiplicity).sum();
        Self::new(tail, x_t, n * gomp.exponent(x_t).exp())
    }

    pub fn count(&self) -> f64 {
        self.n
    }

    pub fn ln_prefactor(&self) -> f64 {
        self.ln_prefactor
    }

    /// `n ln α + n α ln x_t + ln a - (1 + α) Σ ln x_j`.
    pub fn log_likelihood(&self, alpha: f64) -> f64 {
        self.n * alpha.ln() + self.n * alpha * self.ln_x_t + self.ln_prefactor - (1.0 + alpha) * self.sum_ln_x
    }

    /// Closed-form maximizer `n / Σ ln(x_j / x_t)`.
    pub fn mle(&self) -> f64 {
        self.n / self.sum_log_ratio
    }

    /// `L(α) - L(α_peak)` written without the large α-independent terms.
    fn relative_log_likelihood(&self, alpha: f64, peak: f64) -> f64 {
        self.n * (alpha / peak).ln() - (alpha - peak) * self.sum_log_ratio
    }

    /// Moments of `α` under the likelihood restricted to `α ≥ 1`.
    pub fn moments(&self) -> Result<AlphaMoments, ParetoError> {
        let peak = self.mle().max(1.0);
        let shifted = |a: f64| self.relative_log_likelihood(a, peak);
        let (lo, hi) = self.integration_window(peak, &shifted);
        moments_of(shifted, lo, hi)
    }

    fn integration_window(&self, peak: f64, shifted: &impl Fn(f64) -> f64) -> (f64, f64) {
        // The second-moment integrand carries an extra α², so the upper end
        // is placed with that factor included.
        let upper_drop = |a: f64| shifted(a) + 2.0 * (a / peak).ln() + LIKELIHOOD_CUTOFF;
        let mut step = (peak / (self.n + 1.0).sqrt()).max(1e-6);
        let mut hi = peak + step;
        while upper_drop(hi) > 0.0 {
            step *= 2.0;
            hi = peak + step;
        }
        let hi = bisect(upper_drop, hi - step / 2.0, hi);

        let lower_drop = |a: f64| shifted(a) + LIKELIHOOD_CUTOFF;
        let lo = if peak <= 1.0 || lower_drop(1.0) >= 0.0 {
            1.0
        } else {
            bisect(lower_drop, 1.0, peak)
        };
        (lo, hi)
    }
}

/// Root of a function changing sign on `[a, b]`.
fn bisect(f: impl Fn(f64) -> f64, mut a: f64, mut b: f64) -> f64 {
    let fa_positive = f(a) > 0.0;
    for _ in 0..200 {
        let m = 0.5 * (a + b);
        if m == a || m == b {
            break;
        }
        if (f(m) > 0.0) == fa_positive {
            a = m;
        } else {
            b = m;
        }
    }
    0.5 * (a + b)
}

/// Moments of `α` for an arbitrary log-weight (up to a constant) on
/// `[lo, hi]`. The weight is assumed already shifted near zero at its peak.
pub fn moments_of(log_weight: impl Fn(f64) -> f64, lo: f64, hi: f64) -> Result<AlphaMoments, ParetoError> {
    let weight = |a: f64| log_weight(a).exp();
    let z0 = gauss_kronrod(weight, lo, hi, MOMENT_REL_TOL, 0.0)?.value;
    let z1 = gauss_kronrod(|a| a * weight(a), lo, hi, MOMENT_REL_TOL, 0.0)?.value;
    let mean = z1 / z0;
    // Central form of <α²> - <α>², free of the cancellation between the two.
    let central = gauss_kronrod(|a| (a - mean) * (a - mean) * weight(a), lo, hi, MOMENT_REL_TOL, 0.0)?.value / z0;
    Ok(AlphaMoments {
        mean,
        second: central + mean * mean,
        std: central.sqrt(),
    })
}

/// Maximum-likelihood estimate with its uncertainties.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MleFit {
    pub alpha: f64,
    pub delta_alpha: f64,
    pub beta: f64,
    pub delta_beta: f64,
    /// Effective tail size `n`.
    pub tail_count: f64,
    /// `α ≤ 1`: the model mean diverges. The fit is still reported.
    pub mean_divergent: bool,
}

/// MLE of `α` over tail observations `x ≥ x_t`, with `β` from continuity at
/// `x_t`.
///
/// `δβ` propagates `δα` (and `δx_t` when positive) to first order:
/// `∂β/∂α = β ln x_t`, `∂β/∂x_t = β (α / x_t - B e^(A - B x_t))`.
pub fn fit_pareto_mle(
    tail: &[SampleEntry],
    x_t: f64,
    delta_x_t: f64,
    gomp: &GompertzParams,
) -> Result<MleFit, ParetoError> {
    let likelihood = ParetoLikelihood::with_gompertz(tail, x_t, gomp)?;
    let alpha = likelihood.mle();
    let moments = likelihood.moments()?;
    let delta_alpha = moments.std;
    let beta = normalized_beta(gomp, alpha, x_t);
    let d_alpha = beta * x_t.ln() * delta_alpha;
    let d_x_t = if delta_x_t > 0.0 {
        beta * (alpha / x_t - gomp.b * gomp.exponent(x_t).exp()) * delta_x_t
    } else {
        0.0
    };
    Ok(MleFit {
        alpha,
        delta_alpha,
        beta,
        delta_beta: d_alpha.hypot(d_x_t),
        tail_count: likelihood.count(),
        mean_divergent: alpha <= 1.0,
    })
}

/// Combined tail description.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ParetoFit {
    pub lsf: LsfFit,
    pub mle: MleFit,
    pub x_pmin: f64,
    /// Population in the tail.
    pub tail_count: f64,
    /// Percent of the population in the tail.
    pub tail_fraction: f64,
}
