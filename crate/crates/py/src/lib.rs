//! Python bindings. Build with `maturin develop` from this directory.

use std::sync::Arc;

use num_complex::Complex64;
use pyo3::exceptions::{PyRuntimeError, PyValueError};
use pyo3::prelude::*;
use pyo3::types::PyDict;

use entvol::estimator::{Experiment, ExperimentConfig, RatioEstimate, DEFAULT_CHAINS};
use entvol::slice::{flip_point, SliceCriterion};
use entvol::{Alpha, CMatrix, CriterionVerdict, DensityMatrix, Error, FamilyKind, HrChain, HrConfig};

fn to_py_err(e: Error) -> PyErr {
    match e {
        Error::InvalidDimension(_)
        | Error::DimensionMismatch { .. }
        | Error::NotInFamily { .. }
        | Error::NotAState(_)
        | Error::InvalidParameter(_)
        | Error::Config(_) => PyValueError::new_err(e.to_string()),
        _ => PyRuntimeError::new_err(e.to_string()),
    }
}

fn parse_alphas(alphas: Option<Vec<f64>>) -> PyResult<Vec<Alpha>> {
    match alphas {
        None => Ok(Alpha::default_grid()),
        Some(v) => v.into_iter().map(|a| Alpha::new(a).map_err(to_py_err)).collect(),
    }
}

fn matrix_from_rows(rows: Vec<Vec<Complex64>>) -> PyResult<CMatrix> {
    let n = rows.len();
    if rows.iter().any(|r| r.len() != n) {
        return Err(PyValueError::new_err("matrix must be square"));
    }
    Ok(CMatrix::from_fn(n, n, |i, j| rows[i][j]))
}

fn matrix_to_rows(m: &CMatrix) -> Vec<Vec<Complex64>> {
    (0..m.nrows()).map(|i| m.row(i).iter().copied().collect()).collect()
}

/// A family of bipartite states parametrized by Euclidean coordinates.
#[pyclass(name = "StateFamily", module = "entvol", frozen)]
pub struct PyStateFamily {
    inner: Arc<entvol::StateFamily>,
}

#[pymethods]
impl PyStateFamily {
    /// `kind` is one of general, bell-diagonal, x-state, rebit-rebit,
    /// qbqt-i, qbqt-ii; `dims` is required for general.
    #[new]
    #[pyo3(signature = (kind, dims=None))]
    fn new(kind: &str, dims: Option<(usize, usize)>) -> PyResult<Self> {
        let kind: FamilyKind = kind.parse().map_err(to_py_err)?;
        let inner = entvol::StateFamily::new(kind, dims).map_err(to_py_err)?;
        Ok(Self { inner: Arc::new(inner) })
    }

    #[getter]
    fn kind(&self) -> &'static str {
        self.inner.kind().name()
    }

    #[getter]
    fn dims(&self) -> (usize, usize) {
        self.inner.dims()
    }

    /// Number of coordinates.
    #[getter]
    fn dimension(&self) -> usize {
        self.inner.dimension()
    }

    fn to_matrix(&self, coords: Vec<f64>) -> PyResult<Vec<Vec<Complex64>>> {
        let m = self.inner.to_matrix(&coords).map_err(to_py_err)?;
        Ok(matrix_to_rows(&m))
    }

    fn coordinates_of(&self, matrix: Vec<Vec<Complex64>>) -> PyResult<Vec<f64>> {
        self.inner
            .coordinates_of(&matrix_from_rows(matrix)?)
            .map_err(to_py_err)
    }

    fn is_state(&self, coords: Vec<f64>) -> PyResult<bool> {
        if coords.len() != self.inner.dimension() {
            return Err(PyValueError::new_err(format!(
                "expected {} coordinates, got {}",
                self.inner.dimension(),
                coords.len()
            )));
        }
        Ok(self.inner.is_state(&coords))
    }

    /// Criterion verdicts for the state at `coords`.
    #[pyo3(signature = (coords, alphas=None))]
    fn evaluate<'py>(
        &self,
        py: Python<'py>,
        coords: Vec<f64>,
        alphas: Option<Vec<f64>>,
    ) -> PyResult<Bound<'py, PyDict>> {
        let alphas = parse_alphas(alphas)?;
        let m = self.inner.to_matrix(&coords).map_err(to_py_err)?;
        let (n_a, n_b) = self.inner.dims();
        let rho = DensityMatrix::new(n_a, n_b, m).map_err(to_py_err)?;
        verdict_dict(py, &entvol::evaluate_all(&rho, &alphas))
    }

    fn __repr__(&self) -> String {
        format!("StateFamily('{}')", self.inner.label())
    }
}

/// A hit-and-run chain over one family.
#[pyclass(name = "Chain", module = "entvol")]
pub struct PyChain {
    inner: HrChain,
}

#[pymethods]
impl PyChain {
    #[new]
    #[pyo3(signature = (family, seed=0, burn_in=0, thinning=1))]
    fn new(family: &PyStateFamily, seed: u64, burn_in: u64, thinning: u64) -> PyResult<Self> {
        let config = HrConfig {
            burn_in,
            thinning,
            ..HrConfig::new(family.inner.clone(), seed)
        };
        Ok(Self { inner: HrChain::new(config).map_err(to_py_err)? })
    }

    /// Coordinates of the next emitted sample.
    fn next_sample(&mut self) -> PyResult<Vec<f64>> {
        self.inner.next_sample().map(<[f64]>::to_vec).map_err(to_py_err)
    }

    fn sample(&mut self, count: usize) -> PyResult<Vec<Vec<f64>>> {
        self.inner
            .sample(count)
            .map(|v| v.map(|b| b.into_coords()).map_err(to_py_err))
            .collect()
    }

    #[getter]
    fn steps_taken(&self) -> u64 {
        self.inner.steps_taken()
    }

    #[getter]
    fn current(&self) -> Vec<f64> {
        self.inner.current().to_vec()
    }
}

fn verdict_dict<'py>(py: Python<'py>, v: &CriterionVerdict) -> PyResult<Bound<'py, PyDict>> {
    let d = PyDict::new(py);
    for (name, verdict) in [("ppt", v.ppt), ("reduction", v.reduction), ("majorization", v.majorization)] {
        d.set_item(name, (verdict.fulfilled, verdict.margin))?;
    }
    let renyi = PyDict::new(py);
    for (a, verdict) in &v.renyi {
        renyi.set_item(a.value(), (verdict.fulfilled, verdict.margin))?;
    }
    d.set_item("renyi", renyi)?;
    Ok(d)
}

fn estimate_dict<'py>(py: Python<'py>, e: &RatioEstimate) -> PyResult<Bound<'py, PyDict>> {
    let d = PyDict::new(py);
    d.set_item("criterion", e.criterion.name())?;
    d.set_item("alpha", e.criterion.alpha().map(Alpha::value))?;
    d.set_item("count", e.count_fulfilled)?;
    d.set_item("total", e.total)?;
    d.set_item("ratio", e.ratio)?;
    d.set_item("std_error", e.std_error)?;
    d.set_item("binomial_std_error", e.binomial_std_error)?;
    d.set_item("inconclusive", e.inconclusive)?;
    Ok(d)
}

/// Criterion verdicts for a density matrix on an `n_a x n_b` system.
/// Returns a dict of `(fulfilled, margin)` pairs.
#[pyfunction]
#[pyo3(signature = (matrix, dims, alphas=None))]
fn evaluate_all<'py>(
    py: Python<'py>,
    matrix: Vec<Vec<Complex64>>,
    dims: (usize, usize),
    alphas: Option<Vec<f64>>,
) -> PyResult<Bound<'py, PyDict>> {
    let alphas = parse_alphas(alphas)?;
    let rho = DensityMatrix::new(dims.0, dims.1, matrix_from_rows(matrix)?).map_err(to_py_err)?;
    verdict_dict(py, &entvol::evaluate_all(&rho, &alphas))
}

#[pyfunction]
fn renyi_entropy(matrix: Vec<Vec<Complex64>>, alpha: f64) -> PyResult<f64> {
    entvol::renyi_entropy(&matrix_from_rows(matrix)?, alpha).map_err(to_py_err)
}

/// Volume-ratio estimates for every criterion, one dict per criterion.
#[pyfunction]
#[pyo3(signature = (family, samples, chains=DEFAULT_CHAINS, seed=0, alphas=None, burn_in=0, thinning=1))]
#[allow(clippy::too_many_arguments)]
fn run_experiment<'py>(
    py: Python<'py>,
    family: &PyStateFamily,
    samples: u64,
    chains: u64,
    seed: u64,
    alphas: Option<Vec<f64>>,
    burn_in: u64,
    thinning: u64,
) -> PyResult<Vec<Bound<'py, PyDict>>> {
    let config = ExperimentConfig {
        chains,
        seed,
        alphas: parse_alphas(alphas)?,
        burn_in,
        thinning,
        ..ExperimentConfig::new(family.inner.clone(), samples)
    };
    let estimates = py
        .detach(|| {
            let mut exp = Experiment::new(config)?;
            exp.run_to_completion(None)?;
            Ok::<_, Error>(exp.estimates())
        })
        .map_err(to_py_err)?;
    estimates.iter().map(|e| estimate_dict(py, e)).collect()
}

/// Largest `x` on the Bell-diagonal line `(x, -x, 1/3)` where `criterion`
/// (ppt, reduction, majorization, renyi_inf, renyi_1) still holds.
#[pyfunction]
#[pyo3(signature = (criterion, tol=1e-12))]
fn slice_flip_point(criterion: &str, tol: f64) -> PyResult<f64> {
    let c = SliceCriterion::ALL
        .into_iter()
        .find(|c| c.name() == criterion)
        .ok_or_else(|| PyValueError::new_err(format!("unknown slice criterion '{criterion}'")))?;
    Ok(flip_point(c, tol))
}

#[pymodule]
#[pyo3(name = "entvol")]
fn entvol_module(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add("__version__", env!("CARGO_PKG_VERSION"))?;
    m.add_class::<PyStateFamily>()?;
    m.add_class::<PyChain>()?;
    m.add_function(wrap_pyfunction!(evaluate_all, m)?)?;
    m.add_function(wrap_pyfunction!(renyi_entropy, m)?)?;
    m.add_function(wrap_pyfunction!(run_experiment, m)?)?;
    m.add_function(wrap_pyfunction!(slice_flip_point, m)?)?;
    Ok(())
}
