//! End-to-end analysis: input file to report and plot data.

use std::fmt::Write as _;
use std::fs;
use std::io;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::binning::{build_log_bins, empirical_ccdf, BinnedCCDF, BinningError, DEFAULT_BIN_RATIO, DEFAULT_X_MIN};
use crate::bootstrap::{bootstrap_fit, BootstrapConfig, BootstrapError, DEFAULT_RESAMPLES};
use crate::gompertz::{fit_gompertz, linearized_points, GompertzError, GompertzFit, DEFAULT_A_TARGET, DEFAULT_A_TOL};
use crate::inequality::{gini, lorenz_curve, InequalityError, LorenzCurve};
use crate::ingest::{load_incomes, normalize_incomes, IngestError, InputFormat, NormalizedSample};
use crate::model::{income_shares, population_shares, transition_income, ModelError, Shares, TwoClassModel};
use crate::pareto::{fit_pareto_lsf, fit_pareto_mle, LsfFit, MleFit, ParetoError, ParetoParams};
use crate::rng::entropy_seed;

/// Lorenz exports above this many vertices are thinned.
pub const LORENZ_EXPORT_POINTS: usize = 10_001;

/// Tolerance on `|A - ln ln 100|` for the boundary-consistency flag.
const BOUNDARY_TOL: f64 = 0.1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ReportFormat {
    #[default]
    Json,
    Text,
}

impl FromStr for ReportFormat {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "json" | "structured" => Ok(Self::Json),
            "text" | "plain" => Ok(Self::Text),
            other => Err(format!("unknown report format `{other}` (json | text)")),
        }
    }
}

/// Fit settings shared by every subcommand.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitSettings {
    pub x_min: f64,
    pub bin_ratio: f64,
    pub a_target: f64,
    pub a_tol: f64,
    /// Start of the Pareto region. Defaults to the end of the Gompertz region.
    pub x_pmin: Option<f64>,
    pub bootstrap_resamples: usize,
    /// Master seed; a random one is drawn and reported when absent.
    pub seed: Option<u64>,
}

impl Default for FitSettings {
    fn default() -> Self {
        Self {
            x_min: DEFAULT_X_MIN,
            bin_ratio: DEFAULT_BIN_RATIO,
            a_target: DEFAULT_A_TARGET,
            a_tol: DEFAULT_A_TOL,
            x_pmin: None,
            bootstrap_resamples: DEFAULT_RESAMPLES,
            seed: None,
        }
    }
}

impl FitSettings {
    pub fn validate(&self) -> Result<(), PipelineError> {
        let bad = |what: String| Err(PipelineError::Config(what));
        if !(self.x_min.is_finite() && self.x_min > 0.0) {
            return bad(format!("x_min must be positive, got {}", self.x_min));
        }
        if !(self.bin_ratio.is_finite() && self.bin_ratio > 1.0) {
            return bad(format!("bin ratio must exceed 1, got {}", self.bin_ratio));
        }
        if !self.a_target.is_finite() {
            return bad(format!("a_target must be finite, got {}", self.a_target));
        }
        if !(self.a_tol.is_finite() && self.a_tol > 0.0) {
            return bad(format!("a_tol must be positive, got {}", self.a_tol));
        }
        if let Some(x) = self.x_pmin {
            if !(x.is_finite() && x > 0.0) {
                return bad(format!("x_pmin must be positive, got {x}"));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PipelineConfig {
    pub input: PathBuf,
    pub format: InputFormat,
    #[serde(flatten)]
    pub fit: FitSettings,
    /// Output directory; nothing is written when absent.
    pub out_dir: Option<PathBuf>,
    pub report_format: ReportFormat,
    pub label: Option<String>,
}

impl PipelineConfig {
    pub fn new(input: impl Into<PathBuf>, format: InputFormat) -> Self {
        Self {
            input: input.into(),
            format,
            fit: FitSettings::default(),
            out_dir: None,
            report_format: ReportFormat::default(),
            label: None,
        }
    }
}

#[derive(Debug, Error)]
pub enum PipelineError {
    #[error("config: {0}")]
    Config(String),
    #[error("ingest: {0}")]
    Ingest(#[from] IngestError),
    #[error("binning: {0}")]
    Binning(#[from] BinningError),
    #[error("gompertz: {0}")]
    Gompertz(#[from] GompertzError),
    #[error("transition: {0}")]
    Transition(ModelError),
    #[error("pareto: {0}")]
    Pareto(#[from] ParetoError),
    #[error("bootstrap: {0}")]
    Bootstrap(#[from] BootstrapError),
    #[error("model: {0}")]
    Model(ModelError),
    #[error("inequality: {0}")]
    Inequality(#[from] InequalityError),
    #[error("output: {0}")]
    Output(#[from] io::Error),
}

impl PipelineError {
    pub fn stage(&self) -> &'static str {
        match self {
            Self::Config(_) => "config",
            Self::Ingest(_) => "ingest",
            Self::Binning(_) => "binning",
            Self::Gompertz(_) => "gompertz",
            Self::Transition(_) => "transition",
            Self::Pareto(_) => "pareto",
            Self::Bootstrap(_) => "bootstrap",
            Self::Model(_) => "model",
            Self::Inequality(_) => "inequality",
            Self::Output(_) => "output",
        }
    }

    /// Process exit status for this failure; distinct per stage.
    pub fn exit_code(&self) -> i32 {
        match self {
            Self::Config(_) => 2,
            Self::Ingest(_) => 3,
            Self::Binning(_) => 4,
            Self::Gompertz(_) => 5,
            Self::Transition(_) => 6,
            Self::Pareto(_) => 7,
            Self::Bootstrap(_) => 8,
            Self::Model(_) => 9,
            Self::Inequality(_) => 10,
            Self::Output(_) => 11,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum UncertaintyMethod {
    Bootstrap,
    LikelihoodWidth,
    Propagation,
    /// Half the gap between the end of the Gompertz region and the start of
    /// the Pareto region.
    RegionBounds,
}

/// A value with an optional uncertainty; an uncertainty always names its
/// method.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Estimate {
    pub value: f64,
    pub error: Option<f64>,
    pub method: Option<UncertaintyMethod>,
}

impl Estimate {
    pub fn bare(value: f64) -> Self {
        Self {
            value,
            error: None,
            method: None,
        }
    }

    pub fn with(value: f64, error: f64, method: UncertaintyMethod) -> Self {
        Self {
            value,
            error: Some(error),
            method: Some(method),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SampleSummary {
    pub entries: usize,
    pub population: f64,
    pub mean_income_raw: f64,
    pub zero_income_population: f64,
    pub zero_income_entries: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GompertzReport {
    pub a: Estimate,
    pub b: Estimate,
    pub x_gmax: f64,
    pub correlation: f64,
    /// Percent of individuals below `x_gmax`.
    pub population_percent: f64,
    pub points_used: usize,
    /// `|A - ln ln 100| ≤ 0.1`.
    pub boundary_consistent: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LsfReport {
    pub alpha: Estimate,
    pub beta: Estimate,
    pub correlation: f64,
    pub points_used: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MleReport {
    pub alpha: Estimate,
    pub beta: Estimate,
    pub tail_count: f64,
    pub mean_divergent: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParetoReport {
    pub x_pmin: f64,
    pub x_t: Estimate,
    pub lsf: LsfReport,
    pub mle: MleReport,
    /// Percent of individuals at or above `x_t`.
    pub population_percent: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Provenance {
    pub tool: String,
    pub version: String,
    pub seed: u64,
    pub input: Option<PathBuf>,
    pub format: Option<InputFormat>,
    pub settings: FitSettings,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnalysisReport {
    pub label: Option<String>,
    pub sample: SampleSummary,
    pub grid_points: usize,
    pub gompertz: GompertzReport,
    pub pareto: ParetoReport,
    /// `(G(x_t) - P(x_t)) / P(x_t)` with the least-squares Pareto parameters.
    pub continuity_residual: f64,
    /// Mean of the fitted model; absent when it diverges.
    pub model_mean: Option<f64>,
    pub gini: f64,
    pub population_shares: Shares,
    pub income_shares: Shares,
    pub bootstrap_resamples: usize,
    pub bootstrap_failures: usize,
    pub provenance: Provenance,
}

impl AnalysisReport {
    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("report serializes");
        s.push('\n');
        s
    }

    pub fn to_text(&self) -> String {
        fn est(e: &Estimate) -> String {
            match (e.error, e.method) {
                (Some(err), Some(m)) => format!("{:.4} ± {:.4} ({})", e.value, err, method_name(m)),
                _ => format!("{:.4}", e.value),
            }
        }
        let mut s = String::new();
        if let Some(label) = &self.label {
            let _ = writeln!(s, "{label}");
        }
        let g = &self.gompertz;
        let p = &self.pareto;
        let _ = writeln!(s, "population        {:.6}", self.sample.population);
        let _ = writeln!(s, "mean income       {:.6}", self.sample.mean_income_raw);
        let _ = writeln!(s, "zero income       {} persons", self.sample.zero_income_population);
        let _ = writeln!(s, "gompertz A        {}", est(&g.a));
        let _ = writeln!(s, "gompertz B        {}", est(&g.b));
        let _ = writeln!(s, "x_gmax            {:.4}", g.x_gmax);
        let _ = writeln!(s, "gompertz r        {:.6}", g.correlation);
        let _ = writeln!(s, "gompertz %        {:.3}", g.population_percent);
        let _ = writeln!(s, "x_pmin            {:.4}", p.x_pmin);
        let _ = writeln!(s, "x_t               {}", est(&p.x_t));
        let _ = writeln!(s, "pareto LSF alpha  {}", est(&p.lsf.alpha));
        let _ = writeln!(s, "pareto LSF beta   {}", est(&p.lsf.beta));
        let _ = writeln!(s, "pareto LSF r      {:.6}", p.lsf.correlation);
        let _ = writeln!(s, "pareto MLE alpha  {}", est(&p.mle.alpha));
        let _ = writeln!(s, "pareto MLE beta   {}", est(&p.mle.beta));
        let _ = writeln!(s, "pareto %          {:.3}", p.population_percent);
        let _ = writeln!(s, "continuity resid  {:.4}", self.continuity_residual);
        match self.model_mean {
            Some(m) => {
                let _ = writeln!(s, "model mean        {m:.4}");
            }
            None => {
                let _ = writeln!(s, "model mean        divergent");
            }
        }
        let _ = writeln!(s, "gini              {:.4}", self.gini);
        let _ = writeln!(
            s,
            "income shares     {:.3} / {:.3}",
            self.income_shares.gompertz, self.income_shares.pareto
        );
        let _ = writeln!(s, "seed              {}", self.provenance.seed);
        s
    }
}

fn method_name(m: UncertaintyMethod) -> &'static str {
    match m {
        UncertaintyMethod::Bootstrap => "bootstrap",
        UncertaintyMethod::LikelihoodWidth => "likelihood-width",
        UncertaintyMethod::Propagation => "propagation",
        UncertaintyMethod::RegionBounds => "region-bounds",
    }
}

/// Report plus the data behind the plot exports.
#[derive(Debug, Clone)]
pub struct Analysis {
    pub report: AnalysisReport,
    pub ccdf: BinnedCCDF,
    pub gompertz_fit: GompertzFit,
    pub lsf: LsfFit,
    pub mle: MleFit,
    pub lorenz: LorenzCurve,
}

impl Analysis {
    pub fn ccdf_csv(&self) -> String {
        let mut s = String::from("x,F_percent\n");
        for p in self.ccdf.points() {
            let _ = writeln!(s, "{},{}", p.x, p.f);
        }
        s
    }

    pub fn gompertz_csv(&self) -> String {
        let params = self.gompertz_fit.params;
        let mut s = String::from("x,lnlnF,fitted\n");
        for (x, y) in linearized_points(&self.ccdf) {
            let _ = writeln!(s, "{},{},{}", x, y, params.exponent(x));
        }
        s
    }

    pub fn pareto_csv(&self) -> String {
        let x_pmin = self.report.pareto.x_pmin;
        let mut s = String::from("lnx,lnF,fitted_lsf,fitted_mle\n");
        for p in self.ccdf.points().iter().filter(|p| p.x >= x_pmin && p.f > 0.0) {
            let lnx = p.x.ln();
            let lsf = self.lsf.beta.ln() - self.lsf.alpha * lnx;
            let mle = self.mle.beta.ln() - self.mle.alpha * lnx;
            let _ = writeln!(s, "{},{},{},{}", lnx, p.f.ln(), lsf, mle);
        }
        s
    }

    pub fn lorenz_csv(&self) -> String {
        lorenz_csv(&self.lorenz)
    }
}

pub fn lorenz_csv(curve: &LorenzCurve) -> String {
    let mut s = String::from("p,L\n");
    for (p, l) in curve.thinned(LORENZ_EXPORT_POINTS).points() {
        let _ = writeln!(s, "{p},{l}");
    }
    s
}

/// Reads and normalizes an input file.
pub fn load_sample(path: &Path, format: InputFormat) -> Result<NormalizedSample, PipelineError> {
    let file = fs::File::open(path).map_err(IngestError::Io)?;
    let incomes = load_incomes(io::BufReader::new(file), format)?;
    Ok(normalize_incomes(&incomes)?)
}

struct CoreFit {
    gompertz: GompertzFit,
    x_pmin: f64,
    lsf: LsfFit,
}

fn fit_binned(ccdf: &BinnedCCDF, settings: &FitSettings) -> Result<CoreFit, PipelineError> {
    let gompertz = fit_gompertz(ccdf, settings.a_target, settings.a_tol)?;
    let x_pmin = settings.x_pmin.unwrap_or(gompertz.x_gmax);
    let lsf = fit_pareto_lsf(ccdf, x_pmin)?;
    Ok(CoreFit { gompertz, x_pmin, lsf })
}

/// Runs every fitting stage on an in-memory sample.
///
/// Zero incomes are counted in the report and in the Lorenz curve; the
/// distribution fits use the positive incomes only.
pub fn analyze_sample(sample: &NormalizedSample, settings: &FitSettings) -> Result<Analysis, PipelineError> {
    settings.validate()?;
    let seed = settings.seed.unwrap_or_else(entropy_seed);
    let positive = sample.positive_part();
    if positive.is_empty() {
        return Err(IngestError::DegenerateSample.into());
    }
    let x_max = positive.max_x().expect("nonempty");
    let grid = build_log_bins(settings.x_min, settings.bin_ratio, x_max)?;
    let ccdf = empirical_ccdf(&positive, &grid)?;
    let core = fit_binned(&ccdf, settings)?;
    let gomp = core.gompertz.params;

    let (x_t, delta_x_t) = transition_income(core.gompertz.x_gmax, core.x_pmin).map_err(PipelineError::Transition)?;
    let tail = positive.tail(x_t);
    let mle = fit_pareto_mle(&tail, x_t, delta_x_t, &gomp)?;

    let mut gompertz_fit = core.gompertz;
    let mut lsf = core.lsf;
    let mut failures = 0;
    if settings.bootstrap_resamples > 0 {
        let config = BootstrapConfig::new(settings.bootstrap_resamples, seed);
        let result = bootstrap_fit(&positive, &config, |resample| {
            let ccdf = empirical_ccdf(resample, &grid)?;
            let fit = fit_binned(&ccdf, settings)?;
            let g = fit.gompertz.params;
            Ok::<_, PipelineError>(vec![g.a, g.b, fit.lsf.alpha, fit.lsf.beta])
        })?;
        gompertz_fit = gompertz_fit.with_errors(result.std[0], result.std[1]);
        lsf.errors = Some((result.std[2], result.std[3]));
        failures = result.failures;
    }

    let lsf_params = ParetoParams::new(lsf.alpha, lsf.beta)?;
    let lsf_model = TwoClassModel::new(gomp, lsf_params, x_t, delta_x_t).map_err(PipelineError::Model)?;
    let mle_model = TwoClassModel::continuous(gomp, mle.alpha, x_t, delta_x_t).map_err(PipelineError::Model)?;
    let model_mean = match mle_model.mean_income() {
        Ok(m) => Some(m),
        Err(ModelError::MeanDivergence(_)) => None,
        Err(e) => return Err(PipelineError::Model(e)),
    };

    let lorenz = lorenz_curve(sample)?;
    let gini_value = gini(&lorenz);
    let pop_shares = population_shares(&positive, x_t);
    let inc_shares = income_shares(&positive, x_t).map_err(PipelineError::Model)?;

    let boot = |value: f64, err: Option<f64>| match err {
        Some(e) => Estimate::with(value, e, UncertaintyMethod::Bootstrap),
        None => Estimate::bare(value),
    };
    let report = AnalysisReport {
        label: None,
        sample: SampleSummary {
            entries: sample.len(),
            population: sample.total_population(),
            mean_income_raw: sample.mean_income_raw(),
            zero_income_population: sample.zero_income_population(),
            zero_income_entries: sample.zero_income_entries(),
        },
        grid_points: grid.len(),
        gompertz: GompertzReport {
            a: boot(gomp.a, gompertz_fit.param_errors.map(|e| e.0)),
            b: boot(gomp.b, gompertz_fit.param_errors.map(|e| e.1)),
            x_gmax: gompertz_fit.x_gmax,
            correlation: gompertz_fit.correlation,
            population_percent: gompertz_fit.population_fraction,
            points_used: gompertz_fit.points_used,
            boundary_consistent: gomp.is_boundary_consistent(BOUNDARY_TOL),
        },
        pareto: ParetoReport {
            x_pmin: core.x_pmin,
            x_t: Estimate::with(x_t, delta_x_t, UncertaintyMethod::RegionBounds),
            lsf: LsfReport {
                alpha: boot(lsf.alpha, lsf.errors.map(|e| e.0)),
                beta: boot(lsf.beta, lsf.errors.map(|e| e.1)),
                correlation: lsf.correlation,
                points_used: lsf.points_used,
            },
            mle: MleReport {
                alpha: Estimate::with(mle.alpha, mle.delta_alpha, UncertaintyMethod::LikelihoodWidth),
                beta: Estimate::with(mle.beta, mle.delta_beta, UncertaintyMethod::Propagation),
                tail_count: mle.tail_count,
                mean_divergent: mle.mean_divergent,
            },
            population_percent: pop_shares.pareto,
        },
        continuity_residual: lsf_model.continuity_residual(),
        model_mean,
        gini: gini_value,
        population_shares: pop_shares,
        income_shares: inc_shares,
        bootstrap_resamples: settings.bootstrap_resamples,
        bootstrap_failures: failures,
        provenance: Provenance {
            tool: env!("CARGO_PKG_NAME").to_string(),
            version: env!("CARGO_PKG_VERSION").to_string(),
            seed,
            input: None,
            format: None,
            settings: FitSettings {
                seed: Some(seed),
                ..settings.clone()
            },
        },
    };
    Ok(Analysis {
        report,
        ccdf,
        gompertz_fit,
        lsf,
        mle,
        lorenz,
    })
}

pub const REPORT_JSON: &str = "report.json";
pub const REPORT_TEXT: &str = "report.txt";
pub const CCDF_CSV: &str = "ccdf.csv";
pub const GOMPERTZ_CSV: &str = "gompertz_linearized.csv";
pub const PARETO_CSV: &str = "pareto_tail.csv";
pub const LORENZ_CSV: &str = "lorenz.csv";

/// Writes each file under a temporary name first, then renames it into place.
pub fn write_outputs(dir: &Path, files: &[(&str, String)]) -> Result<(), PipelineError> {
    fs::create_dir_all(dir)?;
    let mut staged = Vec::with_capacity(files.len());
    for (name, contents) in files {
        let tmp = dir.join(format!(".{name}.partial"));
        if let Err(e) = fs::write(&tmp, contents) {
            for (t, _) in &staged {
                let _ = fs::remove_file(t);
            }
            let _ = fs::remove_file(&tmp);
            return Err(e.into());
        }
        staged.push((tmp, dir.join(name)));
    }
    for (tmp, dest) in staged {
        fs::rename(tmp, dest)?;
    }
    Ok(())
}

/// Full pipeline from `config.input`; writes the report and plot data to
/// `config.out_dir` when one is set.
pub fn run_pipeline(config: &PipelineConfig) -> Result<AnalysisReport, PipelineError> {
    config.fit.validate()?;
    let sample = load_sample(&config.input, config.format)?;
    let mut analysis = analyze_sample(&sample, &config.fit)?;
    analysis.report.label = config.label.clone();
    analysis.report.provenance.input = Some(config.input.clone());
    analysis.report.provenance.format = Some(config.format);
    if let Some(dir) = &config.out_dir {
        let report = match config.report_format {
            ReportFormat::Json => (REPORT_JSON, analysis.report.to_json()),
            ReportFormat::Text => (REPORT_TEXT, analysis.report.to_text()),
        };
        write_outputs(
            dir,
            &[
                (CCDF_CSV, analysis.ccdf_csv()),
                (GOMPERTZ_CSV, analysis.gompertz_csv()),
                (PARETO_CSV, analysis.pareto_csv()),
                (LORENZ_CSV, analysis.lorenz_csv()),
                report,
            ],
        )?;
    }
    Ok(analysis.report)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults() {
        let s = FitSettings::default();
        assert_eq!((s.x_min, s.bin_ratio, s.a_target, s.a_tol), (0.01, 1.1, 1.5, 0.1));
        assert_eq!(s.bootstrap_resamples, 1000);
        assert!(s.x_pmin.is_none() && s.seed.is_none());
    }

    #[test]
    fn invalid_settings_are_config_errors() {
        let s = FitSettings {
            bin_ratio: 1.0,
            ..FitSettings::default()
        };
        let e = s.validate().unwrap_err();
        assert_eq!((e.stage(), e.exit_code()), ("config", 2));
    }

    #[test]
    fn estimate_json_names_method() {
        let e = Estimate::with(1.0, 0.5, UncertaintyMethod::LikelihoodWidth);
        let json = serde_json::to_string(&e).unwrap();
        assert_eq!(json, r#"{"value":1.0,"error":0.5,"method":"likelihood-width"}"#);
    }
}
