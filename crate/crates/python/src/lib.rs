//! Python bindings for the `incomedist` crate.

use std::path::PathBuf;

use pyo3::exceptions::PyValueError;
use pyo3::prelude::*;

use incomedist::binning::{build_log_bins, empirical_ccdf as ccdf_on_grid};
use incomedist::gompertz::GompertzParams;
use incomedist::inequality::{gini as gini_of, lorenz_curve as lorenz_of};
use incomedist::ingest::{normalize_incomes, InputFormat, NormalizedSample, SampleEntry, WeightedIncome};
use incomedist::model::{sample_model, TwoClassModel};
use incomedist::pareto::{fit_pareto_mle, ParetoParams};
use incomedist::pipeline::{analyze_sample, run_pipeline as run, FitSettings, PipelineConfig};

fn value_error(e: impl std::fmt::Display) -> PyErr {
    PyValueError::new_err(e.to_string())
}

fn json_to_py<'py>(py: Python<'py>, json: &str) -> PyResult<Bound<'py, PyAny>> {
    py.import("json")?.call_method1("loads", (json,))
}

fn sample_from(incomes: Vec<f64>, multiplicities: Option<Vec<f64>>) -> PyResult<NormalizedSample> {
    let weights = multiplicities.unwrap_or_else(|| vec![1.0; incomes.len()]);
    if weights.len() != incomes.len() {
        return Err(PyValueError::new_err("incomes and multiplicities differ in length"));
    }
    let mut entries = Vec::with_capacity(incomes.len());
    for (x, m) in incomes.into_iter().zip(weights) {
        if !(x.is_finite() && x >= 0.0 && m.is_finite() && m > 0.0) {
            return Err(PyValueError::new_err(format!("invalid entry ({x}, {m})")));
        }
        entries.push(SampleEntry { x, multiplicity: m });
    }
    Ok(NormalizedSample::from_entries(entries))
}

/// Gompertz branch `G(x) = exp(exp(a - b x))` in percent.
#[pyclass(name = "GompertzParams", frozen)]
struct PyGompertz(GompertzParams);

#[pymethods]
impl PyGompertz {
    #[new]
    fn new(a: f64, b: f64) -> PyResult<Self> {
        GompertzParams::new(a, b).map(Self).map_err(value_error)
    }

    #[getter]
    fn a(&self) -> f64 {
        self.0.a
    }

    #[getter]
    fn b(&self) -> f64 {
        self.0.b
    }

    fn ccdf(&self, x: f64) -> f64 {
        self.0.ccdf(x)
    }

    fn density(&self, x: f64) -> f64 {
        self.0.density(x)
    }

    fn __repr__(&self) -> String {
        format!("GompertzParams(a={}, b={})", self.0.a, self.0.b)
    }
}

/// Pareto branch `P(x) = beta x^-alpha` in percent.
#[pyclass(name = "ParetoParams", frozen)]
struct PyPareto(ParetoParams);

#[pymethods]
impl PyPareto {
    #[new]
    fn new(alpha: f64, beta: f64) -> PyResult<Self> {
        ParetoParams::new(alpha, beta).map(Self).map_err(value_error)
    }

    #[getter]
    fn alpha(&self) -> f64 {
        self.0.alpha
    }

    #[getter]
    fn beta(&self) -> f64 {
        self.0.beta
    }

    fn ccdf(&self, x: f64) -> PyResult<f64> {
        self.0.ccdf(x).map_err(value_error)
    }

    fn density(&self, x: f64) -> PyResult<f64> {
        self.0.density(x).map_err(value_error)
    }

    fn __repr__(&self) -> String {
        format!("ParetoParams(alpha={}, beta={})", self.0.alpha, self.0.beta)
    }
}

/// Gompertz below `x_t`, Pareto at and above. `beta` defaults to the
/// continuous value.
#[pyclass(name = "TwoClassModel", frozen)]
struct PyModel(TwoClassModel);

#[pymethods]
impl PyModel {
    #[new]
    #[pyo3(signature = (a, b, alpha, x_t, beta=None))]
    fn new(a: f64, b: f64, alpha: f64, x_t: f64, beta: Option<f64>) -> PyResult<Self> {
        let gomp = GompertzParams::new(a, b).map_err(value_error)?;
        let model = match beta {
            Some(beta) => TwoClassModel::new(gomp, ParetoParams::new(alpha, beta).map_err(value_error)?, x_t, 0.0),
            None => TwoClassModel::continuous(gomp, alpha, x_t, 0.0),
        };
        model.map(Self).map_err(value_error)
    }

    #[getter]
    fn gompertz(&self) -> PyGompertz {
        PyGompertz(self.0.gomp)
    }

    #[getter]
    fn pareto(&self) -> PyPareto {
        PyPareto(self.0.par)
    }

    #[getter]
    fn x_t(&self) -> f64 {
        self.0.x_t
    }

    fn ccdf(&self, x: f64) -> f64 {
        self.0.ccdf(x)
    }

    fn density(&self, x: f64) -> f64 {
        self.0.density(x)
    }

    fn continuity_residual(&self) -> f64 {
        self.0.continuity_residual()
    }

    fn mean_income(&self) -> PyResult<f64> {
        self.0.mean_income().map_err(value_error)
    }

    /// `count` draws, deterministic in `seed`.
    fn sample(&self, py: Python<'_>, count: usize, seed: u64) -> Vec<f64> {
        let model = self.0;
        py.detach(|| sample_model(&model, count, seed).into_entries().into_iter().map(|e| e.x).collect())
    }
}

/// CCDF in percent on the logarithmic grid: list of `(x, F)`.
#[pyfunction]
#[pyo3(signature = (incomes, multiplicities=None, x_min=0.01, ratio=1.1))]
fn empirical_ccdf(incomes: Vec<f64>, multiplicities: Option<Vec<f64>>, x_min: f64, ratio: f64) -> PyResult<Vec<(f64, f64)>> {
    let sample = sample_from(incomes, multiplicities)?;
    let x_max = sample.max_x().ok_or_else(|| PyValueError::new_err("empty sample"))?;
    let grid = build_log_bins(x_min, ratio, x_max).map_err(value_error)?;
    let ccdf = ccdf_on_grid(&sample, &grid).map_err(value_error)?;
    Ok(ccdf.points().iter().map(|p| (p.x, p.f)).collect())
}

/// Lorenz curve vertices `(p, L)`.
#[pyfunction]
#[pyo3(signature = (incomes, multiplicities=None))]
fn lorenz_curve(incomes: Vec<f64>, multiplicities: Option<Vec<f64>>) -> PyResult<Vec<(f64, f64)>> {
    let curve = lorenz_of(&sample_from(incomes, multiplicities)?).map_err(value_error)?;
    Ok(curve.points().to_vec())
}

#[pyfunction]
#[pyo3(signature = (incomes, multiplicities=None))]
fn gini(incomes: Vec<f64>, multiplicities: Option<Vec<f64>>) -> PyResult<f64> {
    let curve = lorenz_of(&sample_from(incomes, multiplicities)?).map_err(value_error)?;
    Ok(gini_of(&curve))
}

/// Maximum-likelihood Pareto fit of the values `≥ x_t`, with `beta` tied
/// to the Gompertz parameters `(a, b)`.
#[pyfunction]
fn pareto_mle<'py>(py: Python<'py>, tail: Vec<f64>, x_t: f64, a: f64, b: f64) -> PyResult<Bound<'py, PyAny>> {
    let gomp = GompertzParams::new(a, b).map_err(value_error)?;
    let entries: Vec<SampleEntry> = tail.into_iter().map(|x| SampleEntry { x, multiplicity: 1.0 }).collect();
    let fit = fit_pareto_mle(&entries, x_t, 0.0, &gomp).map_err(value_error)?;
    let dict = pyo3::types::PyDict::new(py);
    dict.set_item("alpha", fit.alpha)?;
    dict.set_item("delta_alpha", fit.delta_alpha)?;
    dict.set_item("beta", fit.beta)?;
    dict.set_item("delta_beta", fit.delta_beta)?;
    dict.set_item("tail_count", fit.tail_count)?;
    Ok(dict.into_any())
}

/// Full analysis of raw incomes, divided by their weighted mean unless
/// `normalize` is false; returns the report as a dict.
#[pyfunction]
#[pyo3(signature = (incomes, multiplicities=None, bootstrap=0, seed=0, x_pmin=None, normalize=true))]
fn analyze<'py>(
    py: Python<'py>,
    incomes: Vec<f64>,
    multiplicities: Option<Vec<f64>>,
    bootstrap: usize,
    seed: u64,
    x_pmin: Option<f64>,
    normalize: bool,
) -> PyResult<Bound<'py, PyAny>> {
    let mut sample = sample_from(incomes, multiplicities)?;
    if normalize {
        let raw: Vec<WeightedIncome> = sample
            .entries()
            .iter()
            .map(|e| WeightedIncome {
                income: e.x,
                multiplicity: e.multiplicity,
            })
            .collect();
        sample = normalize_incomes(&raw).map_err(value_error)?;
    }
    let settings = FitSettings {
        x_pmin,
        bootstrap_resamples: bootstrap,
        seed: Some(seed),
        ..FitSettings::default()
    };
    let analysis = py.detach(|| analyze_sample(&sample, &settings)).map_err(value_error)?;
    json_to_py(py, &analysis.report.to_json())
}

/// Runs the file pipeline; writes outputs to `out` when given.
#[pyfunction]
#[pyo3(signature = (input, format="household", out=None, bootstrap=1000, seed=None, x_pmin=None))]
fn run_pipeline<'py>(
    py: Python<'py>,
    input: PathBuf,
    format: &str,
    out: Option<PathBuf>,
    bootstrap: usize,
    seed: Option<u64>,
    x_pmin: Option<f64>,
) -> PyResult<Bound<'py, PyAny>> {
    let format: InputFormat = format.parse().map_err(PyValueError::new_err)?;
    let mut config = PipelineConfig::new(input, format);
    config.out_dir = out;
    config.fit.bootstrap_resamples = bootstrap;
    config.fit.seed = seed;
    config.fit.x_pmin = x_pmin;
    let report = py
        .detach(|| run(&config))
        .map_err(|e| PyValueError::new_err(format!("[{}] {e}", e.stage())))?;
    json_to_py(py, &report.to_json())
}

#[pymodule]
fn incomedist_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyGompertz>()?;
    m.add_class::<PyPareto>()?;
    m.add_class::<PyModel>()?;
    m.add_function(wrap_pyfunction!(empirical_ccdf, m)?)?;
    m.add_function(wrap_pyfunction!(lorenz_curve, m)?)?;
    m.add_function(wrap_pyfunction!(gini, m)?)?;
    m.add_function(wrap_pyfunction!(pareto_mle, m)?)?;
    m.add_function(wrap_pyfunction!(analyze, m)?)?;
    m.add_function(wrap_pyfunction!(run_pipeline, m)?)?;
    Ok(())
}
