//! Python bindings: `import schlesinger`.

use num_complex::Complex64 as C64;
use pyo3::create_exception;
use pyo3::exceptions::PyException;
use pyo3::prelude::*;
use pyo3::types::PyDict;

use schlesinger_core as core;
use schlesinger_core::flow::{self, FlowParams, FlowState, ReducedOptions};
use schlesinger_core::sampling;

create_exception!(schlesinger, SchlesingerError, PyException);

fn err(e: core::Error) -> PyErr {
    SchlesingerError::new_err(e.to_string())
}

/// An element of sl(2,C) stored as `(x1, x2, x3)` for `[[x3, x1], [x2, -x3]]`.
#[pyclass(name = "Sl2Element", module = "schlesinger", frozen, skip_from_py_object)]
#[derive(Clone, Copy)]
pub struct PySl2 {
    inner: core::Sl2Element,
}

#[pymethods]
impl PySl2 {
    #[new]
    fn new(x1: C64, x2: C64, x3: C64) -> Self {
        Self { inner: core::Sl2Element::new(x1, x2, x3) }
    }

    #[getter]
    fn x1(&self) -> C64 {
        self.inner.x1
    }

    #[getter]
    fn x2(&self) -> C64 {
        self.inner.x2
    }

    #[getter]
    fn x3(&self) -> C64 {
        self.inner.x3
    }

    /// The 2x2 matrix as nested lists.
    fn matrix(&self) -> [[C64; 2]; 2] {
        self.inner.matrix()
    }

    fn casimir(&self) -> C64 {
        self.inner.casimir()
    }

    fn killing(&self, other: &PySl2) -> C64 {
        core::killing(self.inner, other.inner)
    }

    fn bracket(&self, other: &PySl2) -> PySl2 {
        PySl2 { inner: core::bracket(self.inner, other.inner) }
    }

    fn __repr__(&self) -> String {
        let a = self.inner;
        format!("Sl2Element({}, {}, {})", a.x1, a.x2, a.x3)
    }
}

/// `n + 1` orbit points with zero sum and optional pole positions.
#[pyclass(name = "Configuration", module = "schlesinger", frozen, skip_from_py_object)]
#[derive(Clone)]
pub struct PyConfiguration {
    inner: core::Configuration,
}

#[pymethods]
impl PyConfiguration {
    /// `matrices[k]` is `(x1, x2, x3)`; a zero matrix needs its nilpotent
    /// direction in `directions[k]`.
    #[new]
    #[pyo3(signature = (matrices, roots, lambdas=None, directions=None))]
    fn new(
        matrices: Vec<[C64; 3]>,
        roots: Vec<C64>,
        lambdas: Option<Vec<C64>>,
        directions: Option<Vec<Option<[C64; 3]>>>,
    ) -> PyResult<Self> {
        if matrices.len() != roots.len() {
            return Err(SchlesingerError::new_err("matrices and roots differ in length"));
        }
        let dirs = directions.unwrap_or_else(|| vec![None; matrices.len()]);
        if dirs.len() != matrices.len() {
            return Err(SchlesingerError::new_err("matrices and directions differ in length"));
        }
        let points = matrices
            .iter()
            .zip(&roots)
            .zip(&dirs)
            .map(|((m, &r), d)| {
                core::OrbitPoint::new(core::Sl2Element::from_array(*m), d.map(core::Sl2Element::from_array), r)
            })
            .collect::<core::Result<Vec<_>>>()
            .map_err(err)?;
        Ok(Self { inner: core::Configuration::new(points, lambdas).map_err(err)? })
    }

    /// A seeded random non-triangularizable configuration with `λj = j`.
    #[staticmethod]
    fn random(seed: u64, n: usize) -> PyResult<Self> {
        if n < 3 {
            return Err(SchlesingerError::new_err("n must be at least 3"));
        }
        Ok(Self { inner: sampling::random_configuration(&mut sampling::rng(seed), n) })
    }

    #[getter]
    fn n(&self) -> usize {
        self.inner.n()
    }

    fn matrices(&self) -> Vec<[C64; 3]> {
        self.inner.affine_parts().iter().map(|a| a.to_array()).collect()
    }

    fn roots(&self) -> Vec<C64> {
        self.inner.roots()
    }

    fn lambdas(&self) -> Option<Vec<C64>> {
        self.inner.lambdas().ok().map(|l| l.to_vec())
    }

    fn with_lambdas(&self, lambdas: Vec<C64>) -> PyResult<Self> {
        Ok(Self { inner: self.inner.clone().with_lambdas(lambdas).map_err(err)? })
    }

    fn is_triangularizable(&self) -> bool {
        self.inner.is_triangularizable()
    }

    /// Conjugates every point by `[[g11, g12], [g21, g22]]` (determinant 1).
    fn conjugate(&self, g: [[C64; 2]; 2]) -> PyResult<Self> {
        let g = core::GroupElement::new(g[0][0], g[0][1], g[1][0], g[1][1]).map_err(err)?;
        Ok(Self { inner: self.inner.conjugate(&g) })
    }

    /// The pairing table `a[i][j] = tr(A(i) A(j))`.
    fn invariants(&self) -> Vec<Vec<C64>> {
        core::invariants(&self.inner).a
    }

    /// `(i, j, score)` of the most robust chart.
    fn chart_select(&self) -> PyResult<(usize, usize, f64)> {
        let (c, s) = core::chart_select(&self.inner).map_err(err)?;
        Ok((c.index_i, c.index_j, s))
    }

    /// Reduces in chart `(i, j)`, or in the selected chart when omitted.
    #[pyo3(signature = (i=None, j=None))]
    fn reduce(&self, i: Option<usize>, j: Option<usize>) -> PyResult<PyReducedPoint> {
        let chart = match (i, j) {
            (Some(i), Some(j)) => core::ChartSpec {
                root0: self.inner.points()[0].root(),
                index_i: i,
                root_i: self.inner.points().get(i).map(|p| p.root()).unwrap_or_default(),
                index_j: j,
            },
            (None, None) => core::chart_select(&self.inner).map_err(err)?.0,
            _ => return Err(SchlesingerError::new_err("give both i and j or neither")),
        };
        Ok(PyReducedPoint { inner: core::reduce(&self.inner, &chart).map_err(err)? })
    }

    fn hamiltonian(&self, k: usize) -> PyResult<C64> {
        flow::hamiltonian_k(&self.inner, k).map_err(err)
    }

    /// Integrates with `λk` following `path`; returns `(t, matrices)` samples.
    #[pyo3(signature = (k, path, tol_local=1e-10, samples_per_segment=10))]
    fn flow(&self, k: usize, path: Vec<C64>, tol_local: f64, samples_per_segment: usize) -> PyResult<Vec<(C64, Vec<[C64; 3]>)>> {
        let params = FlowParams { tol_local, samples_per_segment, ..FlowParams::with_path(path) };
        let state = FlowState::new(self.inner.clone(), k).map_err(err)?;
        let traj = flow::integrate(&state, &params).map_err(err)?;
        Ok(traj
            .samples
            .iter()
            .map(|s| (s.t, s.config.affine_parts().iter().map(|a| a.to_array()).collect()))
            .collect())
    }

    /// Runs the full and the reduced flow and compares them.
    #[pyo3(signature = (k, path, tol_local=1e-12))]
    fn compare_flows<'py>(&self, py: Python<'py>, k: usize, path: Vec<C64>, tol_local: f64) -> PyResult<Bound<'py, PyDict>> {
        let params = FlowParams { tol_local, ..FlowParams::with_path(path) };
        let cmp = flow::compare_flows(&self.inner, k, &params, ReducedOptions::default()).map_err(err)?;
        let d = PyDict::new(py);
        d.set_item("chart", (cmp.chart.index_i, cmp.chart.index_j))?;
        d.set_item("sup_distance", cmp.sup_distance)?;
        d.set_item("max_invariant_mismatch", cmp.max_invariant_mismatch)?;
        d.set_item("max_casimir_drift", cmp.max_casimir_drift)?;
        d.set_item("max_sum_drift", cmp.max_sum_drift)?;
        Ok(d)
    }

    fn __repr__(&self) -> String {
        format!("Configuration(n={})", self.inner.n())
    }
}

/// Coordinates `(β, q, q')` of the non-special points in the accompanying basis.
#[pyclass(name = "ReducedPoint", module = "schlesinger", frozen, skip_from_py_object)]
#[derive(Clone)]
pub struct PyReducedPoint {
    inner: core::ReducedPoint,
}

#[pymethods]
impl PyReducedPoint {
    #[getter]
    fn n(&self) -> usize {
        self.inner.n
    }

    #[getter]
    fn chart(&self) -> (usize, usize) {
        (self.inner.chart.index_i, self.inner.chart.index_j)
    }

    #[getter]
    fn beta(&self) -> Vec<C64> {
        self.inner.beta.clone()
    }

    #[getter]
    fn q(&self) -> Vec<C64> {
        self.inner.q.clone()
    }

    #[getter]
    fn qp(&self) -> Vec<C64> {
        self.inner.qp.clone()
    }

    /// The normal-form configuration (without pole positions).
    fn lift(&self) -> PyResult<PyConfiguration> {
        Ok(PyConfiguration { inner: core::lift(&self.inner).map_err(err)? })
    }

    /// `tr(A(i) A(j))` as a polynomial in the reduced coordinates.
    fn hamiltonian_value(&self, i: usize, j: usize) -> PyResult<C64> {
        if i > self.inner.n || j > self.inner.n {
            return Err(SchlesingerError::new_err("index out of range"));
        }
        Ok(core::hamiltonian_value(&self.inner, i, j))
    }

    fn distance(&self, other: &PyReducedPoint) -> f64 {
        self.inner.distance(&other.inner)
    }

    fn __repr__(&self) -> String {
        format!("ReducedPoint(n={}, chart={:?})", self.inner.n, self.chart())
    }
}

#[pyfunction]
fn killing(a: &PySl2, b: &PySl2) -> C64 {
    core::killing(a.inner, b.inner)
}

#[pyfunction]
fn bracket(a: &PySl2, b: &PySl2) -> PySl2 {
    PySl2 { inner: core::bracket(a.inner, b.inner) }
}

#[pymodule]
fn schlesinger(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PySl2>()?;
    m.add_class::<PyConfiguration>()?;
    m.add_class::<PyReducedPoint>()?;
    m.add_function(wrap_pyfunction!(killing, m)?)?;
    m.add_function(wrap_pyfunction!(bracket, m)?)?;
    m.add("SchlesingerError", m.py().get_type::<SchlesingerError>())?;
    Ok(())
}
