//! Two-class income distribution analysis.
//!
//! Weighted household microdata is reduced to a sample of per-capita incomes
//! normalized by their mean, the complementary cumulative distribution is
//! evaluated on a logarithmic grid, and the distribution is described by a
//! Gompertz curve for the lower incomes and a Pareto power law for the tail.
//!
//! The pipeline in [`pipeline`] ties the stages together; every stage is also
//! usable on its own.

pub mod binning;
pub mod bootstrap;
pub mod gompertz;
pub mod inequality;
pub mod ingest;
pub mod model;
pub mod pareto;
pub mod pipeline;
pub mod quadrature;
pub mod regression;
pub mod rng;

pub use binning::{build_log_bins, empirical_ccdf, BinnedCCDF, CcdfPoint, LogBinGrid};
pub use bootstrap::{bootstrap_fit, BootstrapConfig, BootstrapResult};
pub use gompertz::{fit_exponential, fit_gompertz, ExponentialFit, GompertzFit, GompertzParams};
pub use inequality::{gini, lorenz_curve, LorenzCurve};
pub use ingest::{
    equivalize_and_expand, normalize_incomes, parse_aggregated, parse_household_records,
    HouseholdRecord, InputFormat, NormalizedSample, SampleEntry, WeightedIncome,
};
pub use model::{income_shares, population_shares, sample_model, transition_income, Shares, TwoClassModel};
pub use pareto::{fit_pareto_lsf, fit_pareto_mle, normalized_beta, LsfFit, MleFit, ParetoParams};
pub use pipeline::{run_pipeline, AnalysisReport, PipelineConfig};
