//! Python module `pynrqae`.

use std::collections::BTreeMap;

use nrqae::circuit::{Sampling, Simulator};
use nrqae::estimator::{self, EstimationResult, RunOptions};
use nrqae::iqae::{iqae_run, IqaeOptions, IqaeResult};
use nrqae::linalg::{ComplexMatrix, C64};
use nrqae::model::{
    angle_state, avg_gate_fidelity, noise_superop, pauli_string, random_state, EstimationProblem,
    Mode, NoiseSpec,
};
use nrqae::perturb::{analyze, perturbed_phase};
use nrqae::rng::StreamKey;
use pyo3::create_exception;
use pyo3::exceptions::{PyException, PyValueError};
use pyo3::prelude::*;
use pyo3::types::{PyDict, PyList};

create_exception!(pynrqae, NrqaeError, PyException, "Estimation or simulation failure.");

fn err(e: nrqae::Error) -> PyErr {
    NrqaeError::new_err(e.to_string())
}

fn mode_name(mode: Mode) -> &'static str {
    match mode {
        Mode::Amplitude => "amplitude",
        Mode::Observable => "observable",
    }
}

fn parse_mode(mode: &str) -> PyResult<Mode> {
    match mode {
        "amplitude" => Ok(Mode::Amplitude),
        "observable" => Ok(Mode::Observable),
        other => Err(PyValueError::new_err(format!("unknown mode {other:?}"))),
    }
}

/// Target states (and observable) of one estimation task.
#[pyclass(name = "Problem", module = "pynrqae", frozen)]
struct PyProblem {
    inner: EstimationProblem,
}

#[pymethods]
impl PyProblem {
    /// Estimate |<phi|psi>|^2 from two unit state vectors.
    #[staticmethod]
    fn amplitude(psi: Vec<C64>, phi: Vec<C64>) -> PyResult<Self> {
        Ok(Self {
            inner: EstimationProblem::amplitude(psi, phi).map_err(err)?,
        })
    }

    /// Estimate <psi|O|psi> for a Pauli string such as "ZX".
    #[staticmethod]
    fn observable(psi: Vec<C64>, pauli: &str) -> PyResult<Self> {
        let obs = pauli_string(pauli).map_err(err)?;
        Ok(Self {
            inner: EstimationProblem::observable(psi, obs).map_err(err)?,
        })
    }

    /// Amplitude problem on cos(a)|0..00> + sin(a)|0..01> states.
    #[staticmethod]
    fn from_angles(qubits: usize, psi_angle: f64, phi_angle: f64) -> PyResult<Self> {
        Self::amplitude(angle_state(qubits, psi_angle), angle_state(qubits, phi_angle))
    }

    #[getter]
    fn mode(&self) -> &'static str {
        mode_name(self.inner.mode())
    }

    #[getter]
    fn qubits(&self) -> usize {
        self.inner.qubits()
    }

    #[getter]
    fn psi(&self) -> Vec<C64> {
        self.inner.psi().to_vec()
    }

    /// Ideal amplitude or expectation value.
    #[getter]
    fn exact_value(&self) -> f64 {
        self.inner.exact_value()
    }

    #[getter]
    fn ideal_theta_ch(&self) -> f64 {
        self.inner.ideal_theta_ch()
    }

    /// Grover operator as a list of rows.
    fn grover(&self) -> Vec<Vec<C64>> {
        matrix_rows(&self.inner.grover())
    }

    fn __repr__(&self) -> String {
        format!(
            "Problem(mode={:?}, qubits={}, exact_value={})",
            self.mode(),
            self.qubits(),
            self.exact_value()
        )
    }
}

fn matrix_rows(m: &ComplexMatrix) -> Vec<Vec<C64>> {
    (0..m.rows()).map(|r| (0..m.cols()).map(|c| m[(r, c)]).collect()).collect()
}

/// Random unit state on `qubits` qubits.
#[pyfunction]
fn random_state_vector(qubits: usize, seed: u64) -> Vec<C64> {
    random_state(qubits, seed)
}

/// Noise model, e.g. `Noise("pauli")` or `Noise("depolarizing", p=0.1)`.
#[pyclass(name = "Noise", module = "pynrqae", frozen)]
struct PyNoise {
    inner: NoiseSpec,
}

#[pymethods]
impl PyNoise {
    #[new]
    #[pyo3(signature = (kind = "none", **params))]
    fn new(kind: &str, params: Option<&Bound<'_, PyDict>>) -> PyResult<Self> {
        let mut obj = serde_json::Map::new();
        obj.insert("kind".into(), serde_json::Value::String(kind.into()));
        if let Some(params) = params {
            for (k, v) in params.iter() {
                let key: String = k.extract()?;
                let value = if v.is_none() {
                    serde_json::Value::Null
                } else if let Ok(i) = v.extract::<u64>() {
                    serde_json::Value::from(i)
                } else {
                    serde_json::Value::from(v.extract::<f64>()?)
                };
                obj.insert(key, value);
            }
        }
        let spec: NoiseSpec = serde_json::from_value(serde_json::Value::Object(obj))
            .map_err(|e| PyValueError::new_err(e.to_string()))?;
        spec.validate().map_err(err)?;
        Ok(Self { inner: spec })
    }

    #[getter]
    fn kind(&self) -> &'static str {
        self.inner.kind()
    }

    /// Average gate fidelity of the single-qubit channel.
    fn avg_gate_fidelity(&self) -> PyResult<f64> {
        let n = noise_superop(&self.inner, 2).map_err(err)?;
        avg_gate_fidelity(&n, &ComplexMatrix::identity(4), 2).map_err(err)
    }

    fn to_json(&self) -> String {
        serde_json::to_string(&self.inner).expect("noise serializes")
    }

    fn __repr__(&self) -> String {
        format!("Noise({})", self.to_json())
    }
}

fn noise_of(noise: Option<&PyNoise>) -> NoiseSpec {
    noise.map_or(NoiseSpec::None, |n| n.inner.clone())
}

fn sampling(shots: Option<u64>, perturbation: Option<f64>) -> Sampling {
    match (perturbation, shots) {
        (Some(p), _) => Sampling::Perturbed(p),
        (None, Some(s)) => Sampling::Shots(s),
        (None, None) => Sampling::Exact,
    }
}

/// Outcome of one estimator run.
#[pyclass(name = "EstimationResult", module = "pynrqae", frozen)]
struct PyEstimation {
    inner: EstimationResult,
}

#[pymethods]
impl PyEstimation {
    #[getter]
    fn mode(&self) -> &'static str {
        mode_name(self.inner.mode)
    }
    #[getter]
    fn theta_ch(&self) -> f64 {
        self.inner.theta_ch
    }
    #[getter]
    fn value(&self) -> f64 {
        self.inner.value
    }
    #[getter]
    fn mirror(&self) -> f64 {
        self.inner.mirror
    }
    #[getter]
    fn seed_theta(&self) -> f64 {
        self.inner.seed_theta
    }
    #[getter]
    fn decay(&self) -> Option<f64> {
        self.inner.decay
    }
    #[getter]
    fn oracle_calls(&self) -> u64 {
        self.inner.oracle_calls
    }
    #[getter]
    fn final_fallback(&self) -> bool {
        self.inner.final_fallback
    }
    #[getter]
    fn no_signal(&self) -> bool {
        self.inner.no_signal
    }

    /// t-values keyed by depth.
    #[getter]
    fn series(&self) -> BTreeMap<usize, f64> {
        self.inner.series.values().into_iter().collect()
    }

    /// One dict per doubling iteration.
    #[getter]
    fn iterations<'py>(&self, py: Python<'py>) -> PyResult<Bound<'py, PyList>> {
        let list = PyList::empty(py);
        for r in &self.inner.iterations {
            let d = PyDict::new(py);
            d.set_item("n", r.n)?;
            d.set_item("triplet", r.triplet.to_vec())?;
            d.set_item("y", r.y)?;
            d.set_item("roots", r.roots.clone())?;
            d.set_item("candidates", r.candidates.clone())?;
            d.set_item("theta", r.theta)?;
            d.set_item("status", r.status.label())?;
            list.append(d)?;
        }
        Ok(list)
    }

    fn __repr__(&self) -> String {
        format!(
            "EstimationResult(theta_ch={}, value={}, mirror={}, oracle_calls={})",
            self.inner.theta_ch, self.inner.value, self.inner.mirror, self.inner.oracle_calls
        )
    }
}

/// Runs the doubling loop up to depth 2**k. Exact probabilities unless `shots` or
/// `perturbation` is given.
#[pyfunction]
#[pyo3(signature = (problem, noise = None, k = 6, shots = None, perturbation = None, seed = 0, trial = 0, retry = false))]
#[allow(clippy::too_many_arguments)]
fn estimate(
    problem: &PyProblem,
    noise: Option<&PyNoise>,
    k: u32,
    shots: Option<u64>,
    perturbation: Option<f64>,
    seed: u64,
    trial: u32,
    retry: bool,
) -> PyResult<PyEstimation> {
    let sim = Simulator::new(problem.inner.clone(), &noise_of(noise)).map_err(err)?;
    let opts = RunOptions {
        retry,
        ..RunOptions::new(k)
    };
    let inner = estimator::run(&sim, sampling(shots, perturbation), StreamKey::new(seed, trial), &opts)
        .map_err(err)?;
    Ok(PyEstimation { inner })
}

fn iqae_dict<'py>(py: Python<'py>, r: &IqaeResult) -> PyResult<Bound<'py, PyDict>> {
    let d = PyDict::new(py);
    d.set_item("mode", mode_name(r.mode))?;
    d.set_item("amplitude", r.amplitude)?;
    d.set_item("ci", (r.ci.0, r.ci.1))?;
    d.set_item("value", r.value)?;
    d.set_item("oracle_calls", r.oracle_calls)?;
    d.set_item("converged", r.converged)?;
    d.set_item("budget_exhausted", r.budget_exhausted)?;
    d.set_item("rounds", r.state.rounds.len())?;
    d.set_item("final_k", r.state.k)?;
    Ok(d)
}

/// Iterative amplitude estimation baseline.
#[pyfunction]
#[pyo3(signature = (problem, noise = None, shots = 1000, target_eps = 1e-3, confidence = 0.95, max_rounds = 100, max_k = None, max_oracle_calls = None, seed = 0, trial = 0))]
#[allow(clippy::too_many_arguments)]
fn iqae<'py>(
    py: Python<'py>,
    problem: &PyProblem,
    noise: Option<&PyNoise>,
    shots: u64,
    target_eps: f64,
    confidence: f64,
    max_rounds: u32,
    max_k: Option<usize>,
    max_oracle_calls: Option<u64>,
    seed: u64,
    trial: u32,
) -> PyResult<Bound<'py, PyDict>> {
    let sim = Simulator::new(problem.inner.clone(), &noise_of(noise)).map_err(err)?;
    let opts = IqaeOptions {
        confidence,
        max_rounds,
        max_k,
        max_oracle_calls,
        ..IqaeOptions::new(shots, target_eps)
    };
    let r = iqae_run(&sim, &opts, StreamKey::new(seed, trial)).map_err(err)?;
    iqae_dict(py, &r)
}

/// Exact t-value of the four-circuit combination at depth `n`.
#[pyfunction]
#[pyo3(signature = (problem, n, noise = None))]
fn exact_t(problem: &PyProblem, n: usize, noise: Option<&PyNoise>) -> PyResult<f64> {
    let sim = Simulator::new(problem.inner.clone(), &noise_of(noise)).map_err(err)?;
    sim.exact_t(n).map_err(err)
}

/// Channel phase of the noisy layer continuing the ideal e^{i theta_ch}.
#[pyfunction]
#[pyo3(signature = (problem, noise = None))]
fn perturbed_theta(problem: &PyProblem, noise: Option<&PyNoise>) -> PyResult<f64> {
    let sim = Simulator::new(problem.inner.clone(), &noise_of(noise)).map_err(err)?;
    perturbed_phase(&sim).map_err(err)
}

/// Perturbation analysis of N(s)·M_G; returns the per-row quantities as a dict.
#[pyfunction]
#[pyo3(signature = (problem, noise, s, depths = None))]
fn verify_perturbation<'py>(
    py: Python<'py>,
    problem: &PyProblem,
    noise: &PyNoise,
    s: f64,
    depths: Option<Vec<usize>>,
) -> PyResult<Bound<'py, PyDict>> {
    let n = noise_superop(&noise.inner, problem.inner.dim()).map_err(err)?;
    let depths = depths.unwrap_or_else(|| (1..=64).collect());
    let r = analyze(&problem.inner, &n, s, &depths).map_err(err)?;
    let d = PyDict::new(py);
    d.set_item("s", r.s)?;
    d.set_item("eps", r.eps)?;
    d.set_item("lemma1_residual", r.lemma1().residual)?;
    d.set_item("first_order_shift", r.lemma1().first_order_shift)?;
    d.set_item("lemma2_residual", r.lemma2_residual)?;
    d.set_item("c1_error", r.c1_error)?;
    d.set_item("c2_error", r.c2_error)?;
    d.set_item("theorem1_max_error", r.theorem1().max_error())?;
    d.set_item("tn_errors", r.tn_errors.clone())?;
    d.set_item("theta_ideal", r.theta_ideal)?;
    d.set_item("theta_pert", r.theta_pert)?;
    d.set_item("overlaps", r.overlaps.to_vec())?;
    d.set_item("flagged", r.flagged)?;
    Ok(d)
}

/// t_n·t_3n / t_2n² with the exact-mode guard.
#[pyfunction]
fn ratio_y(t_n: f64, t_2n: f64, t_3n: f64) -> PyResult<f64> {
    estimator::ratio_y(t_n, t_2n, t_3n).map_err(err)
}

/// Real roots in [-1, 1] of 2(y-1)x² - x + 1 = 0.
#[pyfunction]
fn roots_cos(y: f64) -> Vec<f64> {
    estimator::roots_cos(y)
}

/// All theta in [0, pi] with cos(2n·theta) = x.
#[pyfunction]
fn candidate_angles(x: f64, n: usize) -> PyResult<Vec<f64>> {
    if n == 0 {
        return Err(PyValueError::new_err("n must be at least 1"));
    }
    Ok(estimator::candidate_angles(x, n))
}

/// `(value, mirror)` for a channel phase.
#[pyfunction]
#[pyo3(signature = (theta_ch, mode = "amplitude"))]
fn theta_to_value(theta_ch: f64, mode: &str) -> PyResult<(f64, f64)> {
    nrqae::model::theta_to_value(theta_ch, parse_mode(mode)?).map_err(err)
}

/// Smallest shot count m with 2·exp(-2·eps²·m) <= delta.
#[pyfunction]
fn hoeffding_shots(eps: f64, delta: f64) -> PyResult<u64> {
    nrqae::stats::hoeffding_shots(eps, delta).map_err(|e| PyValueError::new_err(e.to_string()))
}

#[pymodule]
fn pynrqae(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add("NrqaeError", m.py().get_type::<NrqaeError>())?;
    m.add_class::<PyProblem>()?;
    m.add_class::<PyNoise>()?;
    m.add_class::<PyEstimation>()?;
    m.add_function(wrap_pyfunction!(random_state_vector, m)?)?;
    m.add_function(wrap_pyfunction!(estimate, m)?)?;
    m.add_function(wrap_pyfunction!(iqae, m)?)?;
    m.add_function(wrap_pyfunction!(exact_t, m)?)?;
    m.add_function(wrap_pyfunction!(perturbed_theta, m)?)?;
    m.add_function(wrap_pyfunction!(verify_perturbation, m)?)?;
    m.add_function(wrap_pyfunction!(ratio_y, m)?)?;
    m.add_function(wrap_pyfunction!(roots_cos, m)?)?;
    m.add_function(wrap_pyfunction!(candidate_angles, m)?)?;
    m.add_function(wrap_pyfunction!(theta_to_value, m)?)?;
    m.add_function(wrap_pyfunction!(hoeffding_shots, m)?)?;
    Ok(())
}
