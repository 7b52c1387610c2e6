//! Python bindings: `import lmg_qsl`.

use lmg_qsl::experiments::{self, Axis, QuenchSetup, ScanGrid};
use lmg_qsl::qsl_metrics::{self, QubitAngles};
use lmg_qsl::quench::{self, energy_moments};
use lmg_qsl::{CollectiveHamiltonian, Error, Frame, Parity};
use num_complex::Complex64;
use pyo3::exceptions::{PyOSError, PyRuntimeError, PyValueError};
use pyo3::prelude::*;

fn py_err(e: Error) -> PyErr {
    match e.exit_code() {
        2 => PyValueError::new_err(e.to_string()),
        4 => PyOSError::new_err(e.to_string()),
        _ => PyRuntimeError::new_err(e.to_string()),
    }
}

fn parse_frame(frame: &str) -> PyResult<Frame> {
    frame.parse().map_err(PyValueError::new_err)
}

fn parse_parity(parity: &str) -> PyResult<Parity> {
    match parity {
        "even" => Ok(Parity::Even),
        "odd" => Ok(Parity::Odd),
        other => Err(PyValueError::new_err(format!("unknown parity `{other}` (even or odd)"))),
    }
}

/// Spectral decomposition of the quenched ground state.
#[pyclass(name = "QuenchDecomposition", frozen)]
struct PyQuench {
    inner: quench::QuenchDecomposition,
}

#[pymethods]
impl PyQuench {
    #[new]
    #[pyo3(signature = (n, alpha, coupling, frame = "critical"))]
    fn new(n: usize, alpha: f64, coupling: f64, frame: &str) -> PyResult<Self> {
        let inner = quench::decompose_quench(n, alpha, coupling, parse_frame(frame)?).map_err(py_err)?;
        Ok(PyQuench { inner })
    }

    #[getter]
    fn weights(&self) -> Vec<f64> {
        self.inner.weights.clone()
    }

    #[getter]
    fn energies(&self) -> Vec<f64> {
        self.inner.energies.clone()
    }

    #[getter]
    fn ground_energy(&self) -> f64 {
        self.inner.ground_energy
    }

    #[getter]
    fn frame(&self) -> String {
        self.inner.frame.to_string()
    }

    /// `(mean, variance)` of the quenched energy distribution.
    fn moments(&self) -> (f64, f64) {
        energy_moments(&self.inner)
    }

    /// `(M(t), dM/dt)` at time `t`.
    fn evaluate(&self, t: f64) -> (Complex64, Complex64) {
        self.inner.evaluate(t)
    }

    /// Uniformly sampled `(times, M)` on `[0, tau_e]`.
    #[pyo3(signature = (tau_e, dt = None))]
    fn series(&self, tau_e: f64, dt: Option<f64>) -> PyResult<(Vec<f64>, Vec<Complex64>)> {
        let s = quench::decoherence_series(&self.inner, tau_e, dt).map_err(py_err)?;
        Ok(((0..s.len()).map(|i| s.time(i)).collect(), s.m))
    }

    /// Speed-limit time, asymptotic rate and non-Markovianity as a dict.
    #[pyo3(signature = (tau_e, theta = std::f64::consts::FRAC_PI_2, phi = 0.0, dt = None))]
    fn metrics(&self, py: Python<'_>, tau_e: f64, theta: f64, phi: f64, dt: Option<f64>) -> PyResult<Py<PyAny>> {
        let angles = QubitAngles::new(theta, phi).map_err(py_err)?;
        let s = qsl_metrics::evaluate_metrics(&self.inner, tau_e, &angles, dt).map_err(py_err)?;
        let d = pyo3::types::PyDict::new(py);
        d.set_item("tau_e", s.tau_e)?;
        d.set_item("tau_qsl", s.tau_qsl)?;
        d.set_item("gamma_inf", s.gamma_inf)?;
        d.set_item("nm", s.nm)?;
        d.set_item("dt", s.dt)?;
        Ok(d.into_any().unbind())
    }

    fn __repr__(&self) -> String {
        format!(
            "QuenchDecomposition(n={}, alpha={}, coupling={}, frame='{}')",
            self.inner.n, self.inner.alpha, self.inner.lambda, self.inner.frame
        )
    }
}

/// Eigenvalues of one parity block of the bath Hamiltonian, ascending.
#[pyfunction]
#[pyo3(signature = (n, alpha, parity = "even"))]
fn spectrum(n: usize, alpha: f64, parity: &str) -> PyResult<Vec<f64>> {
    let h = CollectiveHamiltonian::lmg(n, alpha).map_err(py_err)?;
    h.block_tridiagonal(parse_parity(parity)?).eigenvalues().map_err(py_err)
}

/// Ground-state energy of the unperturbed branch.
#[pyfunction]
fn ground_energy(n: usize, alpha: f64) -> PyResult<f64> {
    quench::ground_state(n, alpha).map(|g| g.energy).map_err(py_err)
}

#[pyfunction]
fn critical_coupling(alpha: f64) -> PyResult<f64> {
    experiments::analytic_critical_coupling(alpha).map_err(py_err)
}

fn setup(n: usize, alpha: f64, frame: &str, theta: f64) -> PyResult<QuenchSetup> {
    Ok(QuenchSetup {
        angles: QubitAngles::new(theta, 0.0).map_err(py_err)?,
        frame: parse_frame(frame)?,
        ..QuenchSetup::new(n, alpha)
    })
}

/// Speed-limit time for each coupling in `couplings`.
#[pyfunction]
#[pyo3(signature = (n, alpha, tau_e, couplings, frame = "critical", theta = std::f64::consts::FRAC_PI_2))]
fn qsl_scan(
    py: Python<'_>,
    n: usize,
    alpha: f64,
    tau_e: f64,
    couplings: Vec<f64>,
    frame: &str,
    theta: f64,
) -> PyResult<Vec<f64>> {
    let setup = setup(n, alpha, frame, theta)?;
    let grid = ScanGrid::from_values(Axis::Lambda, couplings).map_err(py_err)?;
    let result = py.detach(|| experiments::lambda_scan(&grid, &setup, tau_e)).map_err(py_err)?;
    Ok(result.values())
}

/// Non-Markovianity for each coupling in `couplings`.
#[pyfunction]
#[pyo3(signature = (n, alpha, tau_e, couplings, frame = "critical", theta = std::f64::consts::FRAC_PI_2))]
fn nm_scan(
    py: Python<'_>,
    n: usize,
    alpha: f64,
    tau_e: f64,
    couplings: Vec<f64>,
    frame: &str,
    theta: f64,
) -> PyResult<Vec<f64>> {
    let setup = setup(n, alpha, frame, theta)?;
    let grid = ScanGrid::from_values(Axis::Lambda, couplings).map_err(py_err)?;
    let result = py.detach(|| experiments::nm_scan(&grid, &setup, tau_e)).map_err(py_err)?;
    Ok(result.values())
}

#[pymodule]
#[pyo3(name = "lmg_qsl")]
fn lmg_qsl_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyQuench>()?;
    m.add_function(wrap_pyfunction!(spectrum, m)?)?;
    m.add_function(wrap_pyfunction!(ground_energy, m)?)?;
    m.add_function(wrap_pyfunction!(critical_coupling, m)?)?;
    m.add_function(wrap_pyfunction!(qsl_scan, m)?)?;
    m.add_function(wrap_pyfunction!(nm_scan, m)?)?;
    m.add("__version__", env!("CARGO_PKG_VERSION"))?;
    Ok(())
}
