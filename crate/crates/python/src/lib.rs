//! Python bindings: sample sets, estimators, test distributions, sweeps and
//! the Monte Carlo checks. Reports come back as plain dicts with the same
//! keys as the CLI's JSON output.

use pyo3::exceptions::{PyIOError, PyRuntimeError, PyValueError};
use pyo3::prelude::*;
use pyo3::types::{PyDict, PyList};
use serde_json::Value;

use fixedk::io::{self, Format};
use fixedk::{theory, DistributionSpec, Error, FunctionalSpec, Norm, PlugInMap};

fn to_py_err(e: Error) -> PyErr {
    match e {
        Error::Io(_) => PyIOError::new_err(e.to_string()),
        Error::Numeric { .. } => PyRuntimeError::new_err(e.to_string()),
        _ => PyValueError::new_err(e.to_string()),
    }
}

fn parse_norm(r: &Bound<'_, PyAny>) -> PyResult<Norm> {
    let text = match r.extract::<f64>() {
        Ok(v) if v.is_infinite() => "inf".to_string(),
        Ok(v) => v.to_string(),
        Err(_) => r.extract::<String>()?,
    };
    text.parse().map_err(to_py_err)
}

fn json_to_py<'py>(py: Python<'py>, v: &Value) -> PyResult<Bound<'py, PyAny>> {
    Ok(match v {
        Value::Null => py.None().into_bound(py),
        Value::Bool(b) => b.into_pyobject(py)?.to_owned().into_any(),
        Value::Number(n) => match n.as_i64() {
            Some(i) => i.into_pyobject(py)?.into_any(),
            None => n.as_f64().unwrap_or(f64::NAN).into_pyobject(py)?.into_any(),
        },
        Value::String(s) => s.into_pyobject(py)?.into_any(),
        Value::Array(items) => {
            let list = PyList::empty(py);
            for item in items {
                list.append(json_to_py(py, item)?)?;
            }
            list.into_any()
        }
        Value::Object(map) => {
            let dict = PyDict::new(py);
            for (k, item) in map {
                dict.set_item(k, json_to_py(py, item)?)?;
            }
            dict.into_any()
        }
    })
}

fn report<'py>(py: Python<'py>, json: &str) -> PyResult<Bound<'py, PyAny>> {
    let v: Value = serde_json::from_str(json).map_err(|e| PyRuntimeError::new_err(e.to_string()))?;
    json_to_py(py, &v)
}

fn functional_spec(name: &str, alpha: Option<f64>) -> PyResult<FunctionalSpec> {
    let need = || alpha.ok_or_else(|| PyValueError::new_err(format!("{name} requires alpha")));
    match name {
        "shannon" => Ok(FunctionalSpec::shannon()),
        "renyi" => FunctionalSpec::renyi(need()?).map_err(to_py_err),
        "kl" => Ok(FunctionalSpec::kl()),
        "alpha-div" => FunctionalSpec::alpha_divergence(need()?).map_err(to_py_err),
        "plugin" => FunctionalSpec::plug_in(match alpha {
            Some(a) => PlugInMap::Power(a - 1.0),
            None => PlugInMap::Log,
        })
        .map_err(to_py_err),
        other => Err(PyValueError::new_err(format!("unknown functional {other:?}"))),
    }
}

/// Points in `R^D` with a fixed norm.
#[pyclass(name = "SampleSet", module = "pyfixedk", frozen)]
struct PySampleSet {
    inner: fixedk::SampleSet,
}

#[pymethods]
impl PySampleSet {
    /// `points` is a sequence of equal-length coordinate sequences, or of
    /// floats for one-dimensional data. `r` is 1, 2, "inf", or any real >= 1.
    #[new]
    #[pyo3(signature = (points, r = None))]
    fn new(points: &Bound<'_, PyAny>, r: Option<&Bound<'_, PyAny>>) -> PyResult<Self> {
        let norm = match r {
            Some(r) => parse_norm(r)?,
            None => Norm::L2,
        };
        let inner = if let Ok(flat) = points.extract::<Vec<f64>>() {
            fixedk::SampleSet::from_scalars(&flat, norm)
        } else {
            let rows: Vec<Vec<f64>> = points.extract()?;
            let d = rows.first().map_or(0, Vec::len);
            fixedk::MetricConfig::new(d, norm).and_then(|m| fixedk::SampleSet::new(rows, m))
        }
        .map_err(to_py_err)?;
        Ok(Self { inner })
    }

    /// Read a CSV file (one point per row, optional header).
    #[staticmethod]
    #[pyo3(signature = (path, dimension, r = None, allow_outside = false))]
    fn from_csv(
        path: &str,
        dimension: usize,
        r: Option<&Bound<'_, PyAny>>,
        allow_outside: bool,
    ) -> PyResult<Self> {
        let norm = match r {
            Some(r) => parse_norm(r)?,
            None => Norm::L2,
        };
        let inner = io::load_samples(path, dimension, norm, allow_outside).map_err(to_py_err)?;
        Ok(Self { inner })
    }

    fn __len__(&self) -> usize {
        self.inner.len()
    }

    #[getter]
    fn dimension(&self) -> usize {
        self.inner.dimension()
    }

    #[getter]
    fn norm(&self) -> String {
        self.inner.metric().norm.to_string()
    }

    fn to_list(&self) -> Vec<Vec<f64>> {
        self.inner.points().map(<[f64]>::to_vec).collect()
    }

    fn __repr__(&self) -> String {
        format!(
            "SampleSet(n={}, dimension={}, r={})",
            self.inner.len(),
            self.inner.dimension(),
            self.inner.metric().norm
        )
    }
}

#[pyclass(name = "Estimate", module = "pyfixedk", frozen, get_all)]
struct PyEstimate {
    value: f64,
    functional: String,
    k: usize,
    n: usize,
    m: Option<usize>,
    correction_description: String,
}

#[pymethods]
impl PyEstimate {
    fn __repr__(&self) -> String {
        format!("Estimate({}, k={}, n={}, value={})", self.functional, self.k, self.n, self.value)
    }

    fn __float__(&self) -> f64 {
        self.value
    }
}

impl From<fixedk::Estimate> for PyEstimate {
    fn from(e: fixedk::Estimate) -> Self {
        Self {
            value: e.value,
            functional: e.functional.to_string(),
            k: e.k,
            n: e.n,
            m: e.m,
            correction_description: e.correction_description,
        }
    }
}

/// Product of integer Beta laws on the unit cube, e.g. "beta:2,2^3".
#[pyclass(name = "Distribution", module = "pyfixedk", frozen)]
struct PyDistribution {
    inner: DistributionSpec,
}

#[pymethods]
impl PyDistribution {
    #[new]
    fn new(spec: &str) -> PyResult<Self> {
        Ok(Self {
            inner: spec.parse().map_err(to_py_err)?,
        })
    }

    #[getter]
    fn dimension(&self) -> usize {
        self.inner.dimension()
    }

    fn density(&self, x: Vec<f64>) -> PyResult<f64> {
        self.inner.density_at(&x).map_err(to_py_err)
    }

    #[pyo3(signature = (n, seed = 0, r = None))]
    fn sample(&self, n: usize, seed: u64, r: Option<&Bound<'_, PyAny>>) -> PyResult<PySampleSet> {
        let norm = match r {
            Some(r) => parse_norm(r)?,
            None => Norm::L2,
        };
        let inner = self.inner.sample(n, seed, norm).map_err(to_py_err)?;
        Ok(PySampleSet { inner })
    }

    fn __repr__(&self) -> String {
        format!("Distribution({:?})", self.inner.to_string())
    }
}

/// Estimate `functional` ("shannon", "renyi", "kl", "alpha-div", "plugin").
#[pyfunction]
#[pyo3(signature = (functional, p, q = None, k = 1, alpha = None))]
fn estimate(
    py: Python<'_>,
    functional: &str,
    p: &PySampleSet,
    q: Option<&PySampleSet>,
    k: usize,
    alpha: Option<f64>,
) -> PyResult<PyEstimate> {
    let spec = functional_spec(functional, alpha)?;
    let (p, q) = (&p.inner, q.map(|q| &q.inner));
    py.detach(|| fixedk::estimators::estimate(&spec, p, q, k))
        .map(PyEstimate::from)
        .map_err(to_py_err)
}

#[pyfunction]
#[pyo3(signature = (samples, k = 1))]
fn shannon_entropy(samples: &PySampleSet, k: usize) -> PyResult<PyEstimate> {
    fixedk::estimators::shannon_entropy(&samples.inner, k)
        .map(Into::into)
        .map_err(to_py_err)
}

#[pyfunction]
#[pyo3(signature = (samples, alpha, k = 1))]
fn renyi_functional(samples: &PySampleSet, alpha: f64, k: usize) -> PyResult<PyEstimate> {
    fixedk::estimators::renyi_functional(&samples.inner, k, alpha)
        .map(Into::into)
        .map_err(to_py_err)
}

#[pyfunction]
#[pyo3(signature = (p, q, k = 1))]
fn kl_divergence(p: &PySampleSet, q: &PySampleSet, k: usize) -> PyResult<PyEstimate> {
    fixedk::estimators::kl_divergence(&p.inner, &q.inner, k)
        .map(Into::into)
        .map_err(to_py_err)
}

#[pyfunction]
#[pyo3(signature = (p, q, alpha, k = 1))]
fn alpha_divergence(p: &PySampleSet, q: &PySampleSet, alpha: f64, k: usize) -> PyResult<PyEstimate> {
    fixedk::estimators::alpha_divergence_functional(&p.inner, &q.inner, k, alpha)
        .map(Into::into)
        .map_err(to_py_err)
}

/// Analytic value of `functional` for `p` (and `q` for divergences).
#[pyfunction]
#[pyo3(signature = (functional, p, q = None, alpha = None))]
fn true_functional<'py>(
    py: Python<'py>,
    functional: &str,
    p: &PyDistribution,
    q: Option<&PyDistribution>,
    alpha: Option<f64>,
) -> PyResult<Bound<'py, PyAny>> {
    let spec = functional_spec(functional, alpha)?;
    let t = fixedk::distributions::true_functional(&p.inner, q.map(|q| &q.inner), &spec)
        .map_err(to_py_err)?;
    report(py, &io::emit_truth(&t, Format::Json))
}

#[pyfunction]
#[pyo3(signature = (dist, n_grid, functional = "shannon", k = vec![1], trials = 64, seed = 0,
                    dist_q = None, alpha = None, r = None, expected_beta = None, threads = None))]
#[allow(clippy::too_many_arguments)]
fn run_sweep<'py>(
    py: Python<'py>,
    dist: &PyDistribution,
    n_grid: Vec<usize>,
    functional: &str,
    k: Vec<usize>,
    trials: usize,
    seed: u64,
    dist_q: Option<&PyDistribution>,
    alpha: Option<f64>,
    r: Option<&Bound<'py, PyAny>>,
    expected_beta: Option<f64>,
    threads: Option<usize>,
) -> PyResult<Bound<'py, PyAny>> {
    let config = fixedk::SweepConfig {
        dist_p: dist.inner.clone(),
        dist_q: dist_q.map(|q| q.inner.clone()),
        functional: functional_spec(functional, alpha)?,
        ks: k,
        norm: match r {
            Some(r) => parse_norm(r)?,
            None => Norm::L2,
        },
        n_grid,
        trials,
        master_seed: seed,
        expected_beta,
        threads,
    };
    let result = py.detach(|| fixedk::run_sweep(&config)).map_err(to_py_err)?;
    report(py, &io::emit_sweep(&result, Format::Json))
}

#[pyfunction]
fn fit_loglog_slope(points: Vec<(f64, f64)>) -> PyResult<(f64, f64)> {
    fixedk::fit_loglog_slope(&points).map_err(to_py_err)
}

#[pyfunction]
#[pyo3(signature = (n, k, dimension, trials = 5000, seed = 0, radii = None))]
fn concentration_check<'py>(
    py: Python<'py>,
    n: usize,
    k: usize,
    dimension: usize,
    trials: usize,
    seed: u64,
    radii: Option<Vec<f64>>,
) -> PyResult<Bound<'py, PyAny>> {
    let radii = radii.unwrap_or_else(|| theory::default_radii(n, k, dimension));
    let rep = py
        .detach(|| theory::concentration_check(n, k, dimension, &radii, trials, seed))
        .map_err(to_py_err)?;
    report(py, &io::emit_concentration(&rep, Format::Json))
}

#[pyfunction]
#[pyo3(signature = (n, k, dimension, trials = 2000, seed = 0))]
fn erlang_check<'py>(
    py: Python<'py>,
    n: usize,
    k: usize,
    dimension: usize,
    trials: usize,
    seed: u64,
) -> PyResult<Bound<'py, PyAny>> {
    let rep = py
        .detach(|| theory::erlang_check(n, k, dimension, trials, seed))
        .map_err(to_py_err)?;
    report(py, &io::emit_erlang(&rep, Format::Json))
}

#[pyfunction]
#[pyo3(signature = (n, k, dimension, alpha, trials = 5000, seed = 0))]
fn moment_bound_check<'py>(
    py: Python<'py>,
    n: usize,
    k: usize,
    dimension: usize,
    alpha: f64,
    trials: usize,
    seed: u64,
) -> PyResult<Bound<'py, PyAny>> {
    let rep = py
        .detach(|| theory::moment_bound_check(n, k, dimension, alpha, trials, seed))
        .map_err(to_py_err)?;
    report(py, &io::emit_moments(&rep, Format::Json))
}

#[pyfunction]
fn selftest<'py>(py: Python<'py>) -> PyResult<Bound<'py, PyAny>> {
    let cases = fixedk::selftest::run_selftest().map_err(to_py_err)?;
    report(py, &io::emit_selftest(&cases, Format::Json))
}

#[pymodule]
fn pyfixedk(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PySampleSet>()?;
    m.add_class::<PyEstimate>()?;
    m.add_class::<PyDistribution>()?;
    m.add_function(wrap_pyfunction!(estimate, m)?)?;
    m.add_function(wrap_pyfunction!(shannon_entropy, m)?)?;
    m.add_function(wrap_pyfunction!(renyi_functional, m)?)?;
    m.add_function(wrap_pyfunction!(kl_divergence, m)?)?;
    m.add_function(wrap_pyfunction!(alpha_divergence, m)?)?;
    m.add_function(wrap_pyfunction!(true_functional, m)?)?;
    m.add_function(wrap_pyfunction!(run_sweep, m)?)?;
    m.add_function(wrap_pyfunction!(fit_loglog_slope, m)?)?;
    m.add_function(wrap_pyfunction!(concentration_check, m)?)?;
    m.add_function(wrap_pyfunction!(erlang_check, m)?)?;
    m.add_function(wrap_pyfunction!(moment_bound_check, m)?)?;
    m.add_function(wrap_pyfunction!(selftest, m)?)?;
    Ok(())
}
