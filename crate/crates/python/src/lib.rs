//! Python bindings. Structured results come back as plain dicts and lists.

use pyo3::exceptions::{PyIOError, PyValueError};
use pyo3::prelude::*;
use serde::Serialize;
use spacings_core::counts::{self, CountLimitLaw};
use spacings_core::distributions::{self, CentralRegime, DistConfig, DistributionSpec, Regime};
use spacings_core::experiment::{self, ExperimentConfig};
use spacings_core::inference::{self, CoverageConfig};
use spacings_core::limit_laws::{self, LimitLaw};
use spacings_core::rng::replicate_stream;
use spacings_core::sampling::{self, SamplingMethod, WindowSample};
use spacings_core::stats_tests;
use spacings_core::Error;

fn py_err(e: Error) -> PyErr {
    match e {
        Error::Io(m) => PyIOError::new_err(m),
        other => PyValueError::new_err(other.to_string()),
    }
}

fn to_py<'py, T: Serialize>(py: Python<'py>, value: &T) -> PyResult<Bound<'py, PyAny>> {
    let text = serde_json::to_string(value).map_err(|e| PyValueError::new_err(e.to_string()))?;
    py.import("json")?.call_method1("loads", (text,))
}

fn parse<T: serde::de::DeserializeOwned>(what: &str, text: &str) -> PyResult<T> {
    serde_json::from_str(text).map_err(|e| PyValueError::new_err(format!("bad {what}: {e}")))
}

fn parse_method(method: Option<&str>, n: u64, k: u64, r: u64) -> PyResult<SamplingMethod> {
    match method {
        None => Ok(SamplingMethod::auto(n, k, r)),
        Some(m) => parse("sampling method", &format!("\"{m}\"")),
    }
}

/// A parent distribution, e.g. `Distribution("pareto", alpha=2.0)`.
#[pyclass(name = "Distribution", module = "spacings_lab", frozen)]
struct PyDistribution {
    inner: DistributionSpec,
}

#[pymethods]
impl PyDistribution {
    #[new]
    #[pyo3(signature = (family, **params))]
    fn new(family: &str, params: Option<&Bound<'_, pyo3::types::PyDict>>) -> PyResult<Self> {
        let py = family_params_json(family, params)?;
        let cfg: DistConfig = parse("distribution", &py)?;
        Ok(PyDistribution { inner: cfg.build().map_err(py_err)? })
    }

    #[getter]
    fn name(&self) -> String {
        self.inner.name()
    }

    fn domain<'py>(&self, py: Python<'py>) -> PyResult<Bound<'py, PyAny>> {
        to_py(py, &self.inner.domain())
    }

    fn quantile(&self, u: f64) -> PyResult<f64> {
        self.inner.quantile(u).map_err(py_err)
    }

    fn cdf(&self, x: f64) -> f64 {
        self.inner.cdf(x)
    }

    fn pdf(&self, x: f64) -> f64 {
        self.inner.pdf(x)
    }

    fn mean_residual(&self, x: f64) -> PyResult<f64> {
        self.inner.mean_residual(x).map_err(py_err)
    }

    fn __repr__(&self) -> String {
        format!("Distribution({})", self.inner.name())
    }
}

fn family_params_json(family: &str, params: Option<&Bound<'_, pyo3::types::PyDict>>) -> PyResult<String> {
    let mut obj = serde_json::Map::new();
    obj.insert("family".into(), family.into());
    if let Some(p) = params.filter(|p| !p.is_empty()) {
        let py = p.py();
        let text: String = py.import("json")?.call_method1("dumps", (p,))?.extract()?;
        obj.insert("params".into(), parse("params", &text)?);
    }
    Ok(serde_json::Value::Object(obj).to_string())
}

/// `X_{k-s:n}, …, X_{k+r:n}` for replicate `replicate` under `seed`.
#[pyfunction]
#[pyo3(signature = (dist, n, k, r, s, seed, replicate=0, method=None))]
#[allow(clippy::too_many_arguments)]
fn sample_window(dist: &PyDistribution, n: u64, k: u64, r: u64, s: u64, seed: u64, replicate: u64, method: Option<&str>) -> PyResult<Vec<f64>> {
    let method = parse_method(method, n, k, r)?;
    sampling::sample_window(&dist.inner, n, k, r, s, method, &mut replicate_stream(seed, replicate)).map_err(py_err)
}

/// Windows for replicates `0..n_rep`.
#[pyfunction]
#[pyo3(signature = (dist, n, k, r, s, seed, n_rep, method=None))]
#[allow(clippy::too_many_arguments)]
fn simulate_windows(dist: &PyDistribution, n: u64, k: u64, r: u64, s: u64, seed: u64, n_rep: u64, method: Option<&str>) -> PyResult<Vec<Vec<f64>>> {
    let method = parse_method(method, n, k, r)?;
    let ws = sampling::simulate_windows(&dist.inner, n, k, r, s, method, seed, n_rep).map_err(py_err)?;
    Ok(ws.into_iter().map(|w| w.values).collect())
}

fn window(values: Vec<f64>, n: u64, k: u64, r: u64, s: u64) -> PyResult<WindowSample> {
    sampling::check_window(n, k, r, s).map_err(py_err)?;
    if values.len() as u64 != r + s + 1 {
        return Err(PyValueError::new_err(format!("window needs {} values, got {}", r + s + 1, values.len())));
    }
    Ok(WindowSample { n, k, r, s, values, seed: 0, replicate: 0, method: SamplingMethod::FullSort })
}

/// Spacings of a window: `{"center", "left", "right"}`.
#[pyfunction]
fn spacings<'py>(py: Python<'py>, values: Vec<f64>, n: u64, k: u64, r: u64, s: u64) -> PyResult<Bound<'py, PyAny>> {
    to_py(py, &sampling::spacings(&window(values, n, k, r, s)?))
}

/// Norming constants for `regime` in {"central", "intermediate", "extreme"}.
#[pyfunction]
#[pyo3(signature = (dist, n, k, regime, p=None))]
fn norming_constants<'py>(py: Python<'py>, dist: &PyDistribution, n: u64, k: u64, regime: &str, p: Option<f64>) -> PyResult<Bound<'py, PyAny>> {
    let regime: Regime = parse("regime", &format!("\"{regime}\""))?;
    let central: Option<CentralRegime> = match regime {
        Regime::Central => Some(dist.inner.central_regime(p.unwrap_or(k as f64 / n as f64)).map_err(py_err)?),
        _ => None,
    };
    to_py(py, &distributions::norming_constants(&dist.inner, n, k, regime, central.as_ref()).map_err(py_err)?)
}

/// `draws` samples from a limit law given as a tag such as `gumbel-w-vector:j=3`.
#[pyfunction]
fn sample_limit(law: &str, draws: u64, seed: u64) -> PyResult<Vec<Vec<f64>>> {
    let law: LimitLaw = law.parse().map_err(py_err)?;
    (0..draws).map(|i| limit_laws::sample_limit(&law, &mut replicate_stream(seed, i)).map_err(py_err)).collect()
}

#[pyfunction]
fn limit_cdf(law: &str, x: f64) -> PyResult<f64> {
    let law: LimitLaw = law.parse().map_err(py_err)?;
    limit_laws::limit_cdf(&law, x).map_err(py_err)
}

#[pyfunction]
fn hall_series_sample(k: u64, draws: u64, seed: u64) -> PyResult<Vec<f64>> {
    (0..draws).map(|i| limit_laws::hall_series_sample(k, &mut replicate_stream(seed, i)).map_err(py_err)).collect()
}

/// One-sample KS test of `samples` against the cdf of a scalar limit law.
#[pyfunction]
fn ks_one_sample<'py>(py: Python<'py>, samples: Vec<f64>, law: &str) -> PyResult<Bound<'py, PyAny>> {
    let law: LimitLaw = law.parse().map_err(py_err)?;
    limit_laws::limit_cdf(&law, 0.0).map_err(py_err)?;
    let rep = stats_tests::ks_one_sample(&samples, |x| limit_laws::limit_cdf(&law, x).unwrap_or(f64::NAN)).map_err(py_err)?;
    to_py(py, &rep)
}

#[pyfunction]
fn ks_two_sample<'py>(py: Python<'py>, a: Vec<f64>, b: Vec<f64>) -> PyResult<Bound<'py, PyAny>> {
    to_py(py, &stats_tests::ks_two_sample(&a, &b).map_err(py_err)?)
}

#[pyfunction]
fn independence_check<'py>(py: Python<'py>, x: Vec<f64>, y: Vec<f64>) -> PyResult<Bound<'py, PyAny>> {
    if x.len() != y.len() {
        return Err(PyValueError::new_err("x and y must have the same length"));
    }
    let pairs: Vec<(f64, f64)> = x.into_iter().zip(y).collect();
    to_py(py, &stats_tests::independence_check(&pairs).map_err(py_err)?)
}

/// `law` is a JSON object such as `{"kind": "binomial", "k": 3, "lambda": 1.0}`.
#[pyfunction]
fn count_limit_pmf(law: &str, j: u64) -> PyResult<f64> {
    let law: CountLimitLaw = parse("count law", law)?;
    counts::count_limit_pmf(&law, j).map_err(py_err)
}

/// Chi-square test of a histogram of counts against a count law.
#[pyfunction]
fn discrete_gof<'py>(py: Python<'py>, histogram: Vec<u64>, law: &str) -> PyResult<Bound<'py, PyAny>> {
    let law: CountLimitLaw = parse("count law", law)?;
    let rep = stats_tests::discrete_gof(&histogram, |j| counts::count_limit_pmf(&law, j).unwrap_or(f64::NAN), law.support_max())
        .map_err(py_err)?;
    to_py(py, &rep)
}

/// `(K₋, K₊)` around `X_{k:n}` in a sorted sample.
#[pyfunction]
fn count_neighbors(sample: Vec<f64>, k: u64, d: f64) -> PyResult<(u64, u64)> {
    if sample.windows(2).any(|w| w[0] > w[1]) {
        return Err(PyValueError::new_err("sample must be sorted"));
    }
    let rec = counts::count_neighbors(&sample, k, d).map_err(py_err)?;
    Ok((rec.k_minus, rec.k_plus))
}

#[pyfunction]
#[pyo3(signature = (r, s, p, level, seed, mc_size=200_000))]
fn pivot_quantiles<'py>(py: Python<'py>, r: u64, s: u64, p: f64, level: f64, seed: u64, mc_size: u64) -> PyResult<Bound<'py, PyAny>> {
    to_py(py, &inference::pivot_quantiles(r, s, p, level, mc_size, &mut replicate_stream(seed, 0)).map_err(py_err)?)
}

#[pyfunction]
#[pyo3(signature = (values, n, k, r, s, level=0.95))]
fn density_estimate<'py>(py: Python<'py>, values: Vec<f64>, n: u64, k: u64, r: u64, s: u64, level: f64) -> PyResult<Bound<'py, PyAny>> {
    to_py(py, &inference::density_estimate(&window(values, n, k, r, s)?, level).map_err(py_err)?)
}

#[pyfunction]
#[pyo3(signature = (dist, n, p, r, s, level, n_rep, seed, mc_size=200_000))]
#[allow(clippy::too_many_arguments)]
fn coverage_experiment<'py>(
    py: Python<'py>,
    dist: &PyDistribution,
    n: u64,
    p: f64,
    r: u64,
    s: u64,
    level: f64,
    n_rep: u64,
    seed: u64,
    mc_size: u64,
) -> PyResult<Bound<'py, PyAny>> {
    let cfg = CoverageConfig { n, p, r, s, level, n_rep, seed, mc_size };
    to_py(py, &inference::coverage_experiment(&dist.inner, &cfg).map_err(py_err)?)
}

/// Runs an experiment config (a JSON string); returns the report as a dict.
#[pyfunction]
#[pyo3(signature = (config, out_dir=None))]
fn run_experiment<'py>(py: Python<'py>, config: &str, out_dir: Option<std::path::PathBuf>) -> PyResult<Bound<'py, PyAny>> {
    let cfg = ExperimentConfig::from_json(config).map_err(py_err)?;
    let outcome = py.detach(|| experiment::run_experiment(&cfg, out_dir.as_deref())).map_err(py_err)?;
    to_py(py, &outcome.report)
}

#[pymodule]
fn spacings_lab(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyDistribution>()?;
    m.add_function(wrap_pyfunction!(sample_window, m)?)?;
    m.add_function(wrap_pyfunction!(simulate_windows, m)?)?;
    m.add_function(wrap_pyfunction!(spacings, m)?)?;
    m.add_function(wrap_pyfunction!(norming_constants, m)?)?;
    m.add_function(wrap_pyfunction!(sample_limit, m)?)?;
    m.add_function(wrap_pyfunction!(limit_cdf, m)?)?;
    m.add_function(wrap_pyfunction!(hall_series_sample, m)?)?;
    m.add_function(wrap_pyfunction!(ks_one_sample, m)?)?;
    m.add_function(wrap_pyfunction!(ks_two_sample, m)?)?;
    m.add_function(wrap_pyfunction!(independence_check, m)?)?;
    m.add_function(wrap_pyfunction!(count_limit_pmf, m)?)?;
    m.add_function(wrap_pyfunction!(discrete_gof, m)?)?;
    m.add_function(wrap_pyfunction!(count_neighbors, m)?)?;
    m.add_function(wrap_pyfunction!(pivot_quantiles, m)?)?;
    m.add_function(wrap_pyfunction!(density_estimate, m)?)?;
    m.add_function(wrap_pyfunction!(coverage_experiment, m)?)?;
    m.add_function(wrap_pyfunction!(run_experiment, m)?)?;
    m.add("__version__", env!("CARGO_PKG_VERSION"))?;
    Ok(())
}
