//! Resampling with replacement for parameter uncertainties.
//!
//! Resample `i` draws from its own stream `(seed, Bootstrap, i)`; results
//! are accumulated in index order.

use rand::Rng;
use rand_distr::weighted::WeightedAliasIndex;
use rand_distr::Distribution;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::ingest::{NormalizedSample, SampleEntry};
use crate::rng::{substream, StreamDomain};

pub const DEFAULT_RESAMPLES: usize = 1000;
pub const DEFAULT_MAX_RESAMPLE_SIZE: usize = 1_000_000;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum BootstrapError {
    #[error("cannot resample an empty sample")]
    EmptySample,
    #[error("at least one resample is required")]
    NoResamples,
    #[error("fitter failed on {failures} of {resamples} resamples: {last}")]
    TooManyFailures {
        failures: usize,
        resamples: usize,
        last: String,
    },
    #[error("fitter returned {found} parameters, expected {expected}")]
    DimensionMismatch { expected: usize, found: usize },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BootstrapConfig {
    pub resamples: usize,
    pub seed: u64,
    /// Upper bound on the number of draws per resample.
    pub max_resample_size: usize,
}

impl BootstrapConfig {
    pub fn new(resamples: usize, seed: u64) -> Self {
        Self {
            resamples,
            seed,
            max_resample_size: DEFAULT_MAX_RESAMPLE_SIZE,
        }
    }
}

impl Default for BootstrapConfig {
    fn default() -> Self {
        Self::new(DEFAULT_RESAMPLES, 0)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BootstrapResult {
    /// One parameter vector per successful resample, in resample order.
    pub estimates: Vec<Vec<f64>>,
    pub mean: Vec<f64>,
    /// Sample standard deviation (`n - 1` denominator); zero with a single
    /// estimate.
    pub std: Vec<f64>,
    pub resamples: usize,
    pub seed: u64,
    pub failures: usize,
}

/// Number of draws per resample: the sample's population, rounded, capped.
pub fn resample_size(sample: &NormalizedSample, max_size: usize) -> usize {
    (sample.total_population().round() as usize).clamp(1, max_size.max(1))
}

enum Sampler {
    Uniform(usize),
    Weighted(WeightedAliasIndex<f64>),
}

impl Sampler {
    fn new(sample: &NormalizedSample) -> Self {
        let entries = sample.entries();
        if entries.iter().all(|e| e.multiplicity == 1.0) {
            Sampler::Uniform(entries.len())
        } else {
            let weights = entries.iter().map(|e| e.multiplicity).collect();
            Sampler::Weighted(WeightedAliasIndex::new(weights).expect("multiplicities are positive and finite"))
        }
    }

    fn draw<R: Rng>(&self, rng: &mut R) -> usize {
        match self {
            Sampler::Uniform(n) => rng.random_range(0..*n),
            Sampler::Weighted(alias) => alias.sample(rng),
        }
    }
}

/// Draws `size` entries with probability proportional to multiplicity.
///
/// Repeated draws of one entry are returned as a single entry whose
/// multiplicity is the draw count, in original entry order.
fn draw_resample<R: Rng>(sample: &NormalizedSample, sampler: &Sampler, size: usize, rng: &mut R) -> NormalizedSample {
    let entries = sample.entries();
    let mut counts = vec![0u32; entries.len()];
    for _ in 0..size {
        counts[sampler.draw(rng)] += 1;
    }
    NormalizedSample::from_entries(
        entries
            .iter()
            .zip(&counts)
            .filter(|(_, &c)| c > 0)
            .map(|(e, &c)| SampleEntry {
                x: e.x,
                multiplicity: f64::from(c),
            })
            .collect(),
    )
}

/// Resample `index` of the bootstrap configured by `config`.
pub fn resample(sample: &NormalizedSample, config: &BootstrapConfig, index: usize) -> Result<NormalizedSample, BootstrapError> {
    if sample.is_empty() {
        return Err(BootstrapError::EmptySample);
    }
    let sampler = Sampler::new(sample);
    let mut rng = substream(config.seed, StreamDomain::Bootstrap, index as u64);
    Ok(draw_resample(sample, &sampler, resample_size(sample, config.max_resample_size), &mut rng))
}

/// Applies `fitter` to `config.resamples` resamples of `sample`.
///
/// Resamples on which the fitter errors are counted and skipped; more than
/// half failing is an error.
pub fn bootstrap_fit<F, E>(sample: &NormalizedSample, config: &BootstrapConfig, mut fitter: F) -> Result<BootstrapResult, BootstrapError>
where
    F: FnMut(&NormalizedSample) -> Result<Vec<f64>, E>,
    E: std::fmt::Display,
{
    if sample.is_empty() {
        return Err(BootstrapError::EmptySample);
    }
    if config.resamples == 0 {
        return Err(BootstrapError::NoResamples);
    }
    let sampler = Sampler::new(sample);
    let size = resample_size(sample, config.max_resample_size);

    let mut estimates: Vec<Vec<f64>> = Vec::with_capacity(config.resamples);
    let mut failures = 0;
    let mut last_error = String::new();
    for i in 0..config.resamples {
        let mut rng = substream(config.seed, StreamDomain::Bootstrap, i as u64);
        let drawn = draw_resample(sample, &sampler, size, &mut rng);
        match fitter(&drawn) {
            Ok(params) => {
                if let Some(first) = estimates.first() {
                    if first.len() != params.len() {
                        return Err(BootstrapError::DimensionMismatch {
                            expected: first.len(),
                            found: params.len(),
                        });
                    }
                }
                estimates.push(params);
            }
            Err(e) => {
                failures += 1;
                last_error = e.to_string();
            }
        }
    }
    if 2 * failures > config.resamples {
        return Err(BootstrapError::TooManyFailures {
            failures,
            resamples: config.resamples,
            last: last_error,
        });
    }
    let (mean, std) = mean_and_std(&estimates);
    Ok(BootstrapResult {
        estimates,
        mean,
        std,
        resamples: config.resamples,
        seed: config.seed,
        failures,
    })
}

fn mean_and_std(estimates: &[Vec<f64>]) -> (Vec<f64>, Vec<f64>) {
    let dim = estimates.first().map_or(0, Vec::len);
    let n = estimates.len() as f64;
    let mean: Vec<f64> = (0..dim).map(|k| estimates.iter().map(|v| v[k]).sum::<f64>() / n).collect();
    let std = (0..dim)
        .map(|k| {
            if estimates.len() < 2 {
                return 0.0;
            }
            let ss: f64 = estimates.iter().map(|v| (v[k] - mean[k]).powi(2)).sum();
            (ss / (n - 1.0)).sqrt()
        })
        .collect();
    (mean, std)
}
