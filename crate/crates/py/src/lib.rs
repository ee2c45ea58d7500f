//! Python bindings: operators, GHZ-like states, sampling, noise and device
//! chains, plus the experiment runners. Structured results come back as
//! plain dicts and lists.

use std::collections::BTreeMap;

use merminlab::device::{enumerate_chains, extend_violating_chains, Chain, CouplingGraph};
use merminlab::experiment::{self, ChainSelection, ExperimentConfig, Mode};
use merminlab::measurement::{estimate_operator, sample_counts};
use merminlab::mermin::{self, AnalyticSpec};
use merminlab::noise::{self, TrajectoryEnsemble};
use merminlab::statevector::{self, StateVector as CoreState};
use merminlab::{fixtures, verify, WeightedPauliSum};
use pyo3::exceptions::PyValueError;
use pyo3::prelude::*;
use pyo3::types::{PyDict, PyList};
use pyo3::IntoPyObjectExt;
use serde_json::Value;

fn err(e: merminlab::Error) -> PyErr {
    PyValueError::new_err(e.to_string())
}

fn json_err(e: serde_json::Error) -> PyErr {
    PyValueError::new_err(e.to_string())
}

/// Converts a JSON tree into Python objects.
fn to_py(py: Python<'_>, v: &Value) -> PyResult<Py<PyAny>> {
    match v {
        Value::Null => Ok(py.None()),
        Value::Bool(b) => b.into_py_any(py),
        Value::Number(n) => match (n.as_i64(), n.as_u64()) {
            (Some(i), _) => i.into_py_any(py),
            (None, Some(u)) => u.into_py_any(py),
            _ => n.as_f64().unwrap_or(f64::NAN).into_py_any(py),
        },
        Value::String(s) => s.into_py_any(py),
        Value::Array(items) => {
            let list = PyList::empty(py);
            for item in items {
                list.append(to_py(py, item)?)?;
            }
            list.into_py_any(py)
        }
        Value::Object(map) => {
            let dict = PyDict::new(py);
            for (k, item) in map {
                dict.set_item(k, to_py(py, item)?)?;
            }
            dict.into_py_any(py)
        }
    }
}

fn serialize_to_py<T: serde::Serialize>(py: Python<'_>, value: &T) -> PyResult<Py<PyAny>> {
    to_py(py, &serde_json::to_value(value).map_err(json_err)?)
}

/// Weighted sum of Pauli strings.
#[pyclass(name = "PauliSum", module = "pymerminlab", skip_from_py_object)]
#[derive(Clone)]
pub struct PyPauliSum {
    inner: WeightedPauliSum,
}

#[pymethods]
impl PyPauliSum {
    /// `PauliSum({"XY": 1.0, "YX": -1.0})`
    #[new]
    fn new(terms: BTreeMap<String, f64>) -> PyResult<Self> {
        let inner = WeightedPauliSum::parse(terms.iter().map(|(s, c)| (s.as_str(), *c)))
            .map_err(err)?;
        Ok(Self { inner })
    }

    #[getter]
    fn arity(&self) -> usize {
        self.inner.arity()
    }

    fn terms(&self) -> Vec<(String, f64)> {
        self.inner.iter().map(|(s, c)| (s.to_string(), c)).collect()
    }

    fn coeff(&self, term: &str) -> PyResult<f64> {
        let s = term.parse().map_err(err)?;
        Ok(self.inner.coeff(&s))
    }

    fn scale(&self, k: f64) -> Self {
        Self {
            inner: self.inner.scale(k),
        }
    }

    fn __add__(&self, other: &Self) -> PyResult<Self> {
        Ok(Self {
            inner: self.inner.add(&other.inner).map_err(err)?,
        })
    }

    fn __len__(&self) -> usize {
        self.inner.len()
    }

    fn __eq__(&self, other: &Self) -> bool {
        self.inner == other.inner
    }

    fn __repr__(&self) -> String {
        format!("PauliSum({})", self.inner)
    }

    fn to_json(&self) -> PyResult<String> {
        serde_json::to_string(&self.inner).map_err(json_err)
    }

    #[staticmethod]
    fn from_json(text: &str) -> PyResult<Self> {
        Ok(Self {
            inner: serde_json::from_str(text).map_err(json_err)?,
        })
    }
}

/// Dense `n`-qubit statevector.
#[pyclass(name = "StateVector", module = "pymerminlab", skip_from_py_object)]
#[derive(Clone)]
pub struct PyStateVector {
    inner: CoreState,
}

#[pymethods]
impl PyStateVector {
    /// `(|0..0> + e^{i phi}|1..1>)/sqrt2` prepared by the CNOT-ladder circuit.
    #[staticmethod]
    fn ghz(n: usize, phi: f64) -> PyResult<Self> {
        let circuit = statevector::build_ghz_circuit(n, phi).map_err(err)?;
        Ok(Self {
            inner: circuit.run().map_err(err)?,
        })
    }

    /// `sin(theta)|0..0> + cos(theta) e^{i phi}|1..1>`.
    #[staticmethod]
    fn theta(n: usize, theta: f64, phi: f64) -> PyResult<Self> {
        Ok(Self {
            inner: statevector::prepare_theta_state(n, theta, phi).map_err(err)?,
        })
    }

    #[getter]
    fn n(&self) -> usize {
        self.inner.num_qubits()
    }

    fn probabilities(&self) -> Vec<f64> {
        self.inner.probabilities()
    }

    fn amplitudes(&self) -> Vec<(f64, f64)> {
        self.inner.amplitudes().iter().map(|a| (a.re, a.im)).collect()
    }

    fn expectation(&self, op: &PyPauliSum) -> PyResult<f64> {
        self.inner.expectation(&op.inner).map_err(err)
    }

    fn fidelity(&self, other: &Self) -> PyResult<f64> {
        self.inner.fidelity(&other.inner).map_err(err)
    }

    /// Computational-basis counts keyed by bitstring (qubit 0 first).
    fn sample_counts(&self, py: Python<'_>, shots: u64, seed: u64) -> PyResult<Py<PyAny>> {
        serialize_to_py(py, &sample_counts(&self.inner, shots, seed).map_err(err)?)
    }

    /// Shot-based estimate of `op` with `shots` per Pauli term.
    fn estimate(&self, py: Python<'_>, op: &PyPauliSum, shots: u64, seed: u64) -> PyResult<Py<PyAny>> {
        serialize_to_py(py, &estimate_operator(&self.inner, &op.inner, shots, seed).map_err(err)?)
    }
}

#[pyclass(name = "NoiseSpec", module = "pymerminlab", skip_from_py_object, get_all, set_all)]
#[derive(Clone)]
pub struct PyNoiseSpec {
    theta: Option<f64>,
    depol_p: f64,
    readout_eps: f64,
}

impl PyNoiseSpec {
    fn core(&self) -> PyResult<noise::NoiseSpec> {
        let spec = noise::NoiseSpec {
            theta: self.theta,
            depol_p: self.depol_p,
            readout_eps: self.readout_eps,
        };
        spec.validate().map_err(err)?;
        Ok(spec)
    }
}

#[pymethods]
impl PyNoiseSpec {
    #[new]
    #[pyo3(signature = (theta=None, depol_p=0.0, readout_eps=0.0))]
    fn new(theta: Option<f64>, depol_p: f64, readout_eps: f64) -> PyResult<Self> {
        let s = Self {
            theta,
            depol_p,
            readout_eps,
        };
        s.core()?;
        Ok(s)
    }

    fn __repr__(&self) -> String {
        format!(
            "NoiseSpec(theta={:?}, depol_p={}, readout_eps={})",
            self.theta, self.depol_p, self.readout_eps
        )
    }

    /// Trajectory-averaged `<op>` on the GHZ-like state at `phi`.
    #[pyo3(signature = (op, phi, trajectories=128, seed=0))]
    fn expectation(&self, op: &PyPauliSum, phi: f64, trajectories: usize, seed: u64) -> PyResult<f64> {
        let spec = self.core()?;
        let ensemble = TrajectoryEnsemble::prepare(op.inner.arity(), phi, &spec, trajectories, seed)
            .map_err(err)?;
        ensemble.expectation(&op.inner, spec.readout_eps).map_err(err)
    }
}

#[pyclass(name = "CouplingGraph", module = "pymerminlab", skip_from_py_object)]
#[derive(Clone)]
pub struct PyCouplingGraph {
    inner: CouplingGraph,
}

fn chains_to_lists(chains: &[Chain]) -> Vec<Vec<usize>> {
    chains.iter().map(|c| c.qubits().to_vec()).collect()
}

#[pymethods]
impl PyCouplingGraph {
    #[new]
    fn new(edges: Vec<(usize, usize)>) -> PyResult<Self> {
        Ok(Self {
            inner: CouplingGraph::from_edges(edges).map_err(err)?,
        })
    }

    /// The bundled 53-qubit heavy-hex map.
    #[staticmethod]
    fn rochester() -> Self {
        Self {
            inner: fixtures::rochester(),
        }
    }

    #[staticmethod]
    fn parse(text: &str) -> PyResult<Self> {
        Ok(Self {
            inner: CouplingGraph::parse_edge_list(text).map_err(err)?,
        })
    }

    #[getter]
    fn num_vertices(&self) -> usize {
        self.inner.num_vertices()
    }

    #[getter]
    fn num_edges(&self) -> usize {
        self.inner.num_edges()
    }

    fn edges(&self) -> Vec<(usize, usize)> {
        self.inner.edges().collect()
    }

    fn is_path(&self, qubits: Vec<usize>) -> PyResult<bool> {
        Ok(self.inner.is_path(&Chain::new(qubits).map_err(err)?))
    }

    fn enumerate_chains(&self, length: usize) -> Vec<Vec<usize>> {
        chains_to_lists(&enumerate_chains(&self.inner, length))
    }

    #[pyo3(signature = (prior, threshold=1.0))]
    fn extend_violating_chains(&self, prior: Vec<(Vec<usize>, f64)>, threshold: f64) -> PyResult<Vec<Vec<usize>>> {
        let prior = prior
            .into_iter()
            .map(|(q, v)| Ok((Chain::new(q).map_err(err)?, v)))
            .collect::<PyResult<Vec<_>>>()?;
        Ok(chains_to_lists(&extend_violating_chains(&prior, &self.inner, threshold)))
    }
}

fn parse_mode(mode: &str) -> PyResult<Mode> {
    match mode {
        "exact" => Ok(Mode::Exact),
        "sampled" => Ok(Mode::Sampled),
        other => Err(PyValueError::new_err(format!(
            "mode must be 'exact' or 'sampled', got {other:?}"
        ))),
    }
}

#[allow(clippy::too_many_arguments)]
fn build_config(
    n: usize,
    chains: Option<Vec<Vec<usize>>>,
    phi: Option<f64>,
    shots: u64,
    repeats: usize,
    seed: u64,
    mode: &str,
    noise: Option<&PyNoiseSpec>,
    trajectories: usize,
) -> PyResult<ExperimentConfig> {
    let mut c = ExperimentConfig::new(n);
    c.chains = match chains {
        None => ChainSelection::All,
        Some(list) => ChainSelection::List(
            list.into_iter()
                .map(|q| Chain::new(q).map_err(err))
                .collect::<PyResult<_>>()?,
        ),
    };
    c.phi = phi;
    c.shots = shots;
    c.repeats = repeats;
    c.seed = seed;
    c.mode = parse_mode(mode)?;
    if let Some(spec) = noise {
        c.noise = spec.core()?;
    }
    c.trajectories = trajectories;
    c.validate().map_err(err)?;
    Ok(c)
}

#[pyfunction]
fn canonical_operator(n: usize) -> PyResult<(PyPauliSum, PyPauliSum)> {
    let pair = mermin::canonical_operator(n).map_err(err)?;
    Ok((PyPauliSum { inner: pair.m }, PyPauliSum { inner: pair.m_prime }))
}

#[pyfunction]
fn build_recursive(n: usize) -> PyResult<(PyPauliSum, PyPauliSum)> {
    let pair = mermin::build_recursive(n).map_err(err)?;
    Ok((PyPauliSum { inner: pair.m }, PyPauliSum { inner: pair.m_prime }))
}

#[pyfunction]
fn recursion_scale(n: usize) -> PyResult<f64> {
    mermin::recursion_scale(n).map_err(err)
}

#[pyfunction]
fn lr_bound(n: usize) -> f64 {
    mermin::lr_bound(n)
}

#[pyfunction]
fn phi_max(n: usize) -> f64 {
    mermin::phi_max(n)
}

#[pyfunction]
fn analytic_expectation(n: usize, phi: f64) -> (f64, f64) {
    mermin::analytic_expectation(AnalyticSpec::new(n, phi))
}

#[pyfunction]
fn lhv_max(n: usize) -> PyResult<f64> {
    mermin::lhv_max_bruteforce(&mermin::canonical_operator(n).map_err(err)?).map_err(err)
}

#[pyfunction]
fn theta_radius(theta: f64) -> f64 {
    noise::theta_radius(theta)
}

#[pyfunction]
#[allow(clippy::too_many_arguments)]
#[pyo3(signature = (n, chains=None, phi=None, shots=1024, repeats=5, seed=0, mode="sampled", noise=None, trajectories=128, graph=None))]
fn run_orthogonal_pair(
    py: Python<'_>,
    n: usize,
    chains: Option<Vec<Vec<usize>>>,
    phi: Option<f64>,
    shots: u64,
    repeats: usize,
    seed: u64,
    mode: &str,
    noise: Option<PyRef<'_, PyNoiseSpec>>,
    trajectories: usize,
    graph: Option<PyRef<'_, PyCouplingGraph>>,
) -> PyResult<Py<PyAny>> {
    let config = build_config(n, chains, phi, shots, repeats, seed, mode, noise.as_deref(), trajectories)?;
    let graph = graph.map(|g| g.inner.clone()).unwrap_or_else(fixtures::rochester);
    let results = py
        .detach(|| experiment::run_orthogonal_pair(&config, &graph))
        .map_err(err)?;
    serialize_to_py(py, &results)
}

#[pyfunction]
#[pyo3(signature = (n, phis, mode="exact", shots=1024, repeats=1, seed=0, noise=None, trajectories=128))]
#[allow(clippy::too_many_arguments)]
fn sweep_phase(
    py: Python<'_>,
    n: usize,
    phis: Vec<f64>,
    mode: &str,
    shots: u64,
    repeats: usize,
    seed: u64,
    noise: Option<PyRef<'_, PyNoiseSpec>>,
    trajectories: usize,
) -> PyResult<Py<PyAny>> {
    let config = build_config(n, None, None, shots, repeats, seed, mode, noise.as_deref(), trajectories)?;
    let rows = py
        .detach(|| experiment::sweep_phase(&config, &phis))
        .map_err(err)?;
    serialize_to_py(py, &rows)
}

/// Runs the self-check suite and returns its verdicts.
#[pyfunction]
#[pyo3(signature = (seed=None, trials=None))]
fn verify_all(py: Python<'_>, seed: Option<u64>, trials: Option<usize>) -> PyResult<Py<PyAny>> {
    let mut opts = verify::VerifyOptions::default();
    if let Some(s) = seed {
        opts.seed = s;
    }
    if let Some(t) = trials {
        opts.seed_trials = t.max(1);
    }
    let report = py.detach(|| verify::verify_with(&opts));
    serialize_to_py(py, &report)
}

#[pymodule]
fn pymerminlab(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyPauliSum>()?;
    m.add_class::<PyStateVector>()?;
    m.add_class::<PyNoiseSpec>()?;
    m.add_class::<PyCouplingGraph>()?;
    m.add_function(wrap_pyfunction!(canonical_operator, m)?)?;
    m.add_function(wrap_pyfunction!(build_recursive, m)?)?;
    m.add_function(wrap_pyfunction!(recursion_scale, m)?)?;
    m.add_function(wrap_pyfunction!(lr_bound, m)?)?;
    m.add_function(wrap_pyfunction!(phi_max, m)?)?;
    m.add_function(wrap_pyfunction!(analytic_expectation, m)?)?;
    m.add_function(wrap_pyfunction!(lhv_max, m)?)?;
    m.add_function(wrap_pyfunction!(theta_radius, m)?)?;
    m.add_function(wrap_pyfunction!(run_orthogonal_pair, m)?)?;
    m.add_function(wrap_pyfunction!(sweep_phase, m)?)?;
    m.add_function(wrap_pyfunction!(verify_all, m)?)?;
    m.add("__version__", env!("CARGO_PKG_VERSION"))?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use pyo3::types::PyModule;

    #[test]
    fn module_exposes_operators_and_runs() {
        Python::initialize();
        Python::attach(|py| {
            let m = PyModule::new(py, "pymerminlab").unwrap();
            pymerminlab(&m).unwrap();
            let bound: f64 = m
                .getattr("lr_bound")
                .unwrap()
                .call1((6,))
                .unwrap()
                .extract()
                .unwrap();
            assert_eq!(bound, 8.0);

            let results = run_orthogonal_pair(
                py, 2, Some(vec![vec![29, 36]]), None, 1024, 5, 0, "exact", None, 128, None,
            )
            .unwrap();
            let m_norm: f64 = results
                .bind(py)
                .get_item(0)
                .unwrap()
                .get_item("stats")
                .unwrap()
                .get_item("m_norm")
                .unwrap()
                .extract()
                .unwrap();
            assert!((m_norm - std::f64::consts::SQRT_2).abs() < 1e-12);
        });
    }

    #[test]
    fn json_values_convert() {
        Python::initialize();
        Python::attach(|py| {
            let v = serde_json::json!({"a": [1, -2, 2.5, null, true, "x"]});
            let obj = to_py(py, &v).unwrap();
            let repr = obj.bind(py).repr().unwrap().to_string();
            assert_eq!(repr, "{'a': [1, -2, 2.5, None, True, 'x']}");
        });
    }

    #[test]
    fn bad_mode_is_a_value_error() {
        Python::initialize();
        Python::attach(|py| {
            let e = parse_mode("fast").unwrap_err();
            assert!(e.is_instance_of::<PyValueError>(py));
        });
    }
}
