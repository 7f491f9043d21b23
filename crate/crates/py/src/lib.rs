//! Python module `relmor`: state-space models, the four reduction methods and
//! the relative-error measures.

use std::path::PathBuf;

use pyo3::create_exception;
use pyo3::exceptions::PyException;
use pyo3::prelude::*;

use relmor::algorithms::{Initialization, ReductionConfig};
use relmor::io::{load_model as load, save_model as save, ModelMeta};
use relmor::linalg::Matrix;
use relmor::report::{self, Algorithm};
use relmor::{relerr, ss, MorError};

create_exception!(relmor, RelmorError, PyException);

fn err(e: MorError) -> PyErr {
    RelmorError::new_err(e.to_string())
}

fn to_matrix(rows: Vec<Vec<f64>>, what: &str) -> PyResult<Matrix> {
    let nr = rows.len();
    let nc = rows.first().map_or(0, Vec::len);
    if rows.iter().any(|r| r.len() != nc) {
        return Err(RelmorError::new_err(format!("{what}: rows have different lengths")));
    }
    Ok(Matrix::from_fn(nr, nc, |i, j| rows[i][j]))
}

fn to_rows(m: &Matrix) -> Vec<Vec<f64>> {
    (0..m.nrows()).map(|i| m.row(i).iter().copied().collect()).collect()
}

/// Parses a serializable value into native Python objects through `json`.
fn to_py<'py, T: serde::Serialize>(py: Python<'py>, v: &T) -> PyResult<Bound<'py, PyAny>> {
    let s = serde_json::to_string(v).map_err(|e| RelmorError::new_err(e.to_string()))?;
    py.import("json")?.call_method1("loads", (s,))
}

/// Continuous-time model `ẋ = Ax + Bu, y = Cx + Du` with square `D`.
#[pyclass(name = "StateSpace", module = "relmor", frozen, skip_from_py_object)]
#[derive(Clone)]
struct PyStateSpace {
    inner: ss::StateSpace,
}

#[pymethods]
impl PyStateSpace {
    #[new]
    fn new(a: Vec<Vec<f64>>, b: Vec<Vec<f64>>, c: Vec<Vec<f64>>, d: Vec<Vec<f64>>) -> PyResult<Self> {
        let (b, c) = (to_matrix(b, "B")?, to_matrix(c, "C")?);
        // An empty A list still needs a 0x0 shape.
        let a = if a.is_empty() { Matrix::zeros(0, 0) } else { to_matrix(a, "A")? };
        let b = if b.nrows() == 0 { Matrix::zeros(0, c.nrows()) } else { b };
        let c = if c.ncols() == 0 { Matrix::zeros(b.ncols(), 0) } else { c };
        let inner = ss::StateSpace::new(a, b, c, to_matrix(d, "D")?).map_err(err)?;
        Ok(PyStateSpace { inner })
    }

    #[getter]
    fn n(&self) -> usize {
        self.inner.n()
    }

    #[getter]
    fn m(&self) -> usize {
        self.inner.m()
    }

    #[getter]
    fn a(&self) -> Vec<Vec<f64>> {
        to_rows(self.inner.a())
    }

    #[getter]
    fn b(&self) -> Vec<Vec<f64>> {
        to_rows(self.inner.b())
    }

    #[getter]
    fn c(&self) -> Vec<Vec<f64>> {
        to_rows(self.inner.c())
    }

    #[getter]
    fn d(&self) -> Vec<Vec<f64>> {
        to_rows(self.inner.d())
    }

    fn is_stable(&self) -> bool {
        self.inner.is_stable()
    }

    fn is_minimum_phase(&self) -> bool {
        self.inner.is_minimum_phase()
    }

    /// Eigenvalues of `A` as Python complex numbers.
    fn poles(&self) -> PyResult<Vec<num_complex::Complex64>> {
        Ok(self.inner.poles().map_err(err)?.eigenvalues)
    }

    fn h2_norm(&self) -> PyResult<f64> {
        ss::h2_norm_factored(&self.inner).map_err(err)
    }

    #[pyo3(signature = (rel_tol = 1e-6))]
    fn hinf_norm(&self, rel_tol: f64) -> PyResult<f64> {
        ss::hinf_norm(&self.inner, rel_tol).map_err(err)
    }

    /// Singular values of `H(jω)`, largest first.
    fn sigma(&self, omega: f64) -> PyResult<Vec<f64>> {
        let t = ss::frequency_response(&self.inner, &[omega]).map_err(err)?;
        t.singular_values
            .into_iter()
            .next()
            .flatten()
            .ok_or_else(|| RelmorError::new_err(format!("singular resolvent at ω = {omega}")))
    }

    fn __repr__(&self) -> String {
        format!("StateSpace(n={}, m={})", self.inner.n(), self.inner.m())
    }
}

fn config(order: usize, seed: u64, epsilon: f64, max_iters: usize, tol: f64, init: &str) -> PyResult<ReductionConfig> {
    let mut c = ReductionConfig::new(order);
    c.seed = seed;
    c.epsilon = epsilon;
    c.max_iterations = max_iters;
    c.tol = tol;
    c.init = match init {
        "random" => Initialization::Random,
        "dominant" => Initialization::DominantPoles,
        _ => return Err(RelmorError::new_err(format!("unknown init {init:?}"))),
    };
    Ok(c)
}

#[pyfunction]
#[pyo3(signature = (path))]
fn load_model(path: PathBuf) -> PyResult<(PyStateSpace, Option<String>)> {
    let f = load(&path, None).map_err(err)?;
    Ok((PyStateSpace { inner: f.sys }, f.meta.name))
}

#[pyfunction]
#[pyo3(signature = (path, sys, name = None))]
fn save_model(path: PathBuf, sys: &PyStateSpace, name: Option<String>) -> PyResult<()> {
    save(&path, &sys.inner, &ModelMeta { name, source: None }).map_err(err)
}

/// Reduces `sys` to `order` states. Returns `(rom, outcome)`; `rom` is `None`
/// when the reduction failed, and `outcome` holds the error norms or the failure.
#[pyfunction]
#[pyo3(signature = (sys, algorithm, order, seed = 0, epsilon = 1e-3, max_iters = 200, tol = 1e-6, init = "random"))]
#[allow(clippy::too_many_arguments)]
fn reduce<'py>(
    py: Python<'py>,
    sys: &PyStateSpace,
    algorithm: &str,
    order: usize,
    seed: u64,
    epsilon: f64,
    max_iters: usize,
    tol: f64,
    init: &str,
) -> PyResult<(Option<PyStateSpace>, Bound<'py, PyAny>)> {
    let algo: Algorithm = algorithm.parse().map_err(err)?;
    let cfg = config(order, seed, epsilon, max_iters, tol, init)?;
    let (rom, outcome) = py.detach(|| report::reduce_and_evaluate(&sys.inner, algo, &cfg));
    Ok((rom.map(|inner| PyStateSpace { inner }), to_py(py, &outcome)?))
}

/// `‖H̄r⁻¹(H - H̄r)‖_H2` with its independent check value.
#[pyfunction]
fn relative_error<'py>(py: Python<'py>, full: &PyStateSpace, rom: &PyStateSpace) -> PyResult<Bound<'py, PyAny>> {
    let v = relerr::delta_mul_norm(&full.inner, &rom.inner).map_err(err)?;
    to_py(py, &v)
}

/// Gradient and Gramian-identity checks at a reduced model of `order`.
#[pyfunction]
#[pyo3(signature = (sys, order, seed = 0, epsilon = 1e-3))]
fn verify<'py>(py: Python<'py>, sys: &PyStateSpace, order: usize, seed: u64, epsilon: f64) -> PyResult<Bound<'py, PyAny>> {
    let cfg = config(order, seed, epsilon, 200, 1e-6, "random")?;
    let rep = py.detach(|| report::verify_model(&sys.inner, &cfg)).map_err(err)?;
    to_py(py, &rep)
}

/// Seeded random model that is stable and minimum phase, with `D = I`.
#[pyfunction]
#[pyo3(signature = (n, m, seed = 0))]
fn random_minimum_phase(n: usize, m: usize, seed: u64) -> PyStateSpace {
    let inner = relmor::random::minimum_phase_system(n, m, &mut relmor::random::rng(seed));
    PyStateSpace { inner }
}

#[pymodule]
#[pyo3(name = "relmor")]
fn relmor_module(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add("RelmorError", m.py().get_type::<RelmorError>())?;
    m.add_class::<PyStateSpace>()?;
    m.add_function(wrap_pyfunction!(load_model, m)?)?;
    m.add_function(wrap_pyfunction!(save_model, m)?)?;
    m.add_function(wrap_pyfunction!(reduce, m)?)?;
    m.add_function(wrap_pyfunction!(relative_error, m)?)?;
    m.add_function(wrap_pyfunction!(verify, m)?)?;
    m.add_function(wrap_pyfunction!(random_minimum_phase, m)?)?;
    Ok(())
}
