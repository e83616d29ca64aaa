//! Python bindings: lattices, fields, transformations, the optimizer and the
//! uniqueness checks.

use pyo3::exceptions::{PyRuntimeError, PyValueError};
use pyo3::prelude::*;
use pyo3::types::PyDict;

use curlgrid::diffops::{self, StencilConvention};
use curlgrid::monitor;
use curlgrid::optimizer::{self, OptimizerConfig, OptimizerTrace, StopReason};
use curlgrid::poisson::{self, Backend, SolverConfig};
use curlgrid::{io, synthetic, uniqueness, Error};

fn err(e: Error) -> PyErr {
    match e {
        Error::SolverDiverged { .. } => PyRuntimeError::new_err(e.to_string()),
        other => PyValueError::new_err(other.to_string()),
    }
}

#[pyclass(name = "GridSpec", frozen, eq, from_py_object)]
#[derive(Clone, Copy, PartialEq)]
struct PyGridSpec(curlgrid::GridSpec);

#[pymethods]
impl PyGridSpec {
    #[new]
    fn new(dim: usize, n: usize) -> PyResult<Self> {
        curlgrid::GridSpec::new(dim, n).map(Self).map_err(err)
    }

    #[getter]
    fn dim(&self) -> usize {
        self.0.dim()
    }

    #[getter]
    fn n(&self) -> usize {
        self.0.n()
    }

    #[getter]
    fn spacing(&self) -> f64 {
        self.0.spacing()
    }

    fn __len__(&self) -> usize {
        self.0.len()
    }

    /// Coordinates of a linear node index.
    fn coords(&self, idx: usize) -> PyResult<Vec<f64>> {
        if idx >= self.0.len() {
            return Err(PyValueError::new_err(format!("node {idx} out of range")));
        }
        Ok(self.0.coords(idx)[..self.0.dim()].to_vec())
    }

    fn __repr__(&self) -> String {
        format!("GridSpec(dim={}, n={})", self.0.dim(), self.0.n())
    }
}

#[pyclass(name = "ScalarField", frozen, from_py_object)]
#[derive(Clone)]
struct PyScalarField(curlgrid::ScalarField);

#[pymethods]
impl PyScalarField {
    #[new]
    fn new(grid: PyGridSpec, values: Vec<f64>) -> PyResult<Self> {
        curlgrid::ScalarField::new(grid.0, values).map(Self).map_err(err)
    }

    #[getter]
    fn grid(&self) -> PyGridSpec {
        PyGridSpec(*self.0.grid())
    }

    fn values(&self) -> Vec<f64> {
        self.0.values().to_vec()
    }

    fn l2_norm(&self) -> PyResult<f64> {
        self.0.l2_norm().map_err(err)
    }

    fn max_norm(&self) -> f64 {
        self.0.max_norm()
    }

    fn integral(&self) -> f64 {
        self.0.integral()
    }

    fn min(&self) -> f64 {
        self.0.min_value()
    }

    fn __len__(&self) -> usize {
        self.0.values().len()
    }
}

#[pyclass(name = "VectorField", frozen, from_py_object)]
#[derive(Clone)]
struct PyVectorField(curlgrid::VectorField);

#[pymethods]
impl PyVectorField {
    /// Builds a field from one list of nodal values per component.
    #[new]
    fn new(grid: PyGridSpec, components: Vec<Vec<f64>>) -> PyResult<Self> {
        let comps = components
            .into_iter()
            .map(|v| curlgrid::ScalarField::new(grid.0, v))
            .collect::<curlgrid::Result<Vec<_>>>()
            .map_err(err)?;
        curlgrid::VectorField::new(comps).map(Self).map_err(err)
    }

    #[getter]
    fn grid(&self) -> PyGridSpec {
        PyGridSpec(*self.0.grid())
    }

    fn components(&self) -> Vec<Vec<f64>> {
        self.0.components().iter().map(|c| c.values().to_vec()).collect()
    }

    fn component(&self, c: usize) -> PyResult<PyScalarField> {
        if c >= self.0.component_count() {
            return Err(PyValueError::new_err(format!("component {c} out of range")));
        }
        Ok(PyScalarField(self.0.component(c).clone()))
    }

    fn l2_norm(&self) -> PyResult<f64> {
        self.0.l2_norm().map_err(err)
    }

    fn max_norm(&self) -> f64 {
        self.0.max_norm()
    }

    fn __len__(&self) -> usize {
        self.0.component_count()
    }
}

#[pyclass(name = "Transformation", frozen, from_py_object)]
#[derive(Clone)]
struct PyTransformation(curlgrid::Transformation);

#[pymethods]
impl PyTransformation {
    #[staticmethod]
    fn identity(grid: PyGridSpec) -> Self {
        Self(curlgrid::Transformation::identity(grid.0))
    }

    #[staticmethod]
    fn from_positions(positions: PyVectorField) -> PyResult<Self> {
        curlgrid::Transformation::from_positions(positions.0).map(Self).map_err(err)
    }

    #[staticmethod]
    fn from_displacement(u: PyVectorField) -> PyResult<Self> {
        curlgrid::Transformation::from_displacement(&u.0).map(Self).map_err(err)
    }

    /// `id + amp·(sin πx₁ sin 2πx₂, sin 2πx₁ sin πx₂)`.
    #[staticmethod]
    fn sine_target(grid: PyGridSpec, amp: f64) -> PyResult<Self> {
        synthetic::sine_target(grid.0, amp).map(Self).map_err(err)
    }

    #[getter]
    fn grid(&self) -> PyGridSpec {
        PyGridSpec(*self.0.grid())
    }

    fn positions(&self) -> PyVectorField {
        PyVectorField(self.0.positions().clone())
    }

    fn displacement(&self) -> PyVectorField {
        PyVectorField(self.0.displacement())
    }

    fn distance(&self, other: &PyTransformation) -> PyResult<f64> {
        self.0.distance(&other.0).map_err(err)
    }
}

#[pyclass(name = "MonitorPair", frozen, from_py_object)]
#[derive(Clone)]
struct PyMonitorPair(monitor::MonitorPair);

#[pymethods]
impl PyMonitorPair {
    #[new]
    #[pyo3(signature = (f0, g0, curl_enabled=true))]
    fn new(f0: PyScalarField, g0: PyVectorField, curl_enabled: bool) -> PyResult<Self> {
        monitor::MonitorPair::new(f0.0, g0.0, curl_enabled).map(Self).map_err(err)
    }

    #[staticmethod]
    #[pyo3(signature = (t, use_curl=true))]
    fn from_transformation(t: &PyTransformation, use_curl: bool) -> PyResult<Self> {
        monitor::monitor_from_transformation(&t.0, use_curl).map(Self).map_err(err)
    }

    #[getter]
    fn f0(&self) -> PyScalarField {
        PyScalarField(self.0.f0().clone())
    }

    #[getter]
    fn g0(&self) -> PyVectorField {
        PyVectorField(self.0.g0().clone())
    }

    #[getter]
    fn curl_enabled(&self) -> bool {
        self.0.curl_enabled()
    }
}

#[pyfunction]
#[pyo3(signature = (path, grid, beta=monitor::DEFAULT_BETA, curl_enabled=false))]
fn monitor_from_image(path: &str, grid: PyGridSpec, beta: f64, curl_enabled: bool) -> PyResult<PyMonitorPair> {
    let image = io::read_pgm_file(path).map_err(err)?;
    monitor::monitor_from_image(&image, beta, grid.0, curl_enabled)
        .map(PyMonitorPair)
        .map_err(err)
}

#[pyfunction]
fn jacobian_det(phi: &PyTransformation) -> PyScalarField {
    PyScalarField(diffops::jacobian_det(&phi.0))
}

#[pyfunction]
fn curl(v: &PyVectorField) -> PyResult<PyVectorField> {
    diffops::curl(&v.0).map(PyVectorField).map_err(err)
}

#[pyfunction]
fn gradient(s: &PyScalarField) -> PyVectorField {
    PyVectorField(diffops::gradient(&s.0, StencilConvention::CENTRAL))
}

#[pyfunction]
fn divergence(v: &PyVectorField) -> PyResult<PyScalarField> {
    diffops::divergence(&v.0, StencilConvention::CENTRAL)
        .map(PyScalarField)
        .map_err(err)
}

#[pyfunction]
fn laplacian(s: &PyScalarField) -> PyScalarField {
    PyScalarField(diffops::laplacian(&s.0))
}

#[pyfunction]
fn expansion_f(u: &PyVectorField) -> PyResult<PyScalarField> {
    diffops::expansion_f(&u.0).map(PyScalarField).map_err(err)
}

fn solver(backend: &str) -> PyResult<SolverConfig> {
    match backend {
        "spectral" => Ok(SolverConfig::default()),
        "sor" => Ok(SolverConfig {
            backend: Backend::Sor,
            ..SolverConfig::sor()
        }),
        other => Err(PyValueError::new_err(format!("unknown backend {other:?}"))),
    }
}

/// Solves `Δₕs = rhs` with zero Dirichlet data.
#[pyfunction]
#[pyo3(signature = (rhs, backend="spectral"))]
fn solve_dirichlet(rhs: &PyScalarField, backend: &str) -> PyResult<PyScalarField> {
    poisson::solve_dirichlet(&rhs.0, &solver(backend)?)
        .map(PyScalarField)
        .map_err(err)
}

#[pyfunction]
fn solve_div_curl(f: &PyScalarField, g: &PyVectorField) -> PyResult<PyVectorField> {
    poisson::solve_div_curl(&f.0, &g.0, &SolverConfig::default())
        .map(|s| PyVectorField(s.u))
        .map_err(err)
}

#[pyfunction]
fn poincare_constant(grid: PyGridSpec) -> f64 {
    poisson::poincare_constant(&grid.0)
}

fn optimizer_config(sigma: f64, max_outer: usize, tol: f64) -> OptimizerConfig {
    OptimizerConfig {
        step_sigma: sigma,
        max_outer,
        ssd_rel_tol: tol,
        ..OptimizerConfig::default()
    }
}

fn trace_dict<'py>(py: Python<'py>, trace: &OptimizerTrace) -> PyResult<Bound<'py, PyDict>> {
    let d = PyDict::new(py);
    d.set_item("ssd", trace.records.iter().map(|r| r.ssd).collect::<Vec<_>>())?;
    d.set_item("jac_residual", trace.records.iter().map(|r| r.jac_residual).collect::<Vec<_>>())?;
    d.set_item("curl_residual", trace.records.iter().map(|r| r.curl_residual).collect::<Vec<_>>())?;
    d.set_item("min_jacobian", trace.records.iter().map(|r| r.min_jacobian).collect::<Vec<_>>())?;
    d.set_item("sigma", trace.records.iter().map(|r| r.sigma).collect::<Vec<_>>())?;
    let stop = match &trace.stop {
        StopReason::Converged => "converged".to_string(),
        StopReason::SigmaExhausted => "sigma_exhausted".to_string(),
        StopReason::MaxOuter => "max_outer".to_string(),
        StopReason::SolverFailure(m) => format!("solver_failure: {m}"),
    };
    d.set_item("stop", stop)?;
    d.set_item("folded", trace.folded)?;
    d.set_item("normalization_bias", trace.normalization_bias)?;
    d.set_item("target_errors", trace.target_errors.clone())?;
    Ok(d)
}

#[pyfunction]
#[pyo3(signature = (m, sigma=0.1, max_outer=500, tol=1e-8))]
fn minimize<'py>(
    py: Python<'py>,
    m: &PyMonitorPair,
    sigma: f64,
    max_outer: usize,
    tol: f64,
) -> PyResult<(PyTransformation, Bound<'py, PyDict>)> {
    let start = curlgrid::Transformation::identity(*m.0.grid());
    let (phi, trace) = optimizer::minimize(&start, &m.0, &optimizer_config(sigma, max_outer, tol)).map_err(err)?;
    Ok((PyTransformation(phi), trace_dict(py, &trace)?))
}

#[pyfunction]
#[pyo3(signature = (t0, use_curl=true, sigma=0.1, max_outer=500, tol=1e-8))]
fn reconstruct<'py>(
    py: Python<'py>,
    t0: &PyTransformation,
    use_curl: bool,
    sigma: f64,
    max_outer: usize,
    tol: f64,
) -> PyResult<(PyTransformation, Bound<'py, PyDict>)> {
    let (phi, trace) =
        optimizer::reconstruct(&t0.0, use_curl, &optimizer_config(sigma, max_outer, tol)).map_err(err)?;
    Ok((PyTransformation(phi), trace_dict(py, &trace)?))
}

/// `(u_l2, grad_l2, lap_l2)` of a zero-boundary field.
#[pyfunction]
fn norm_triple(u: &PyVectorField) -> PyResult<(f64, f64, f64)> {
    let t = uniqueness::norm_triple(&u.0).map_err(err)?;
    Ok((t.u_l2, t.grad_l2, t.lap_l2))
}

#[pyfunction]
fn green_identity_gap(u: &PyVectorField) -> PyResult<f64> {
    uniqueness::green_identity_gap(&u.0).map_err(err)
}

#[pyfunction]
fn bound_sequence<'py>(py: Python<'py>, epsilon: f64, c: f64, k_max: usize) -> PyResult<Bound<'py, PyDict>> {
    let b = uniqueness::bound_sequence(epsilon, c, k_max).map_err(err)?;
    let d = PyDict::new(py);
    d.set_item("convergent", b.convergent)?;
    d.set_item("bound_u", b.rows.iter().map(|r| r.bound_u).collect::<Vec<_>>())?;
    d.set_item("bound_grad", b.rows.iter().map(|r| r.bound_grad).collect::<Vec<_>>())?;
    d.set_item("bound_lap", b.rows.iter().map(|r| r.bound_lap).collect::<Vec<_>>())?;
    Ok(d)
}

/// `(relation, lhs, rhs, pass, conditional)`.
type ChainRow = (String, f64, f64, bool, bool);

/// Rows of the inequality chain.
#[pyfunction]
fn chain_report(u: &PyVectorField, c: f64) -> PyResult<Vec<ChainRow>> {
    let r = uniqueness::chain_report(&u.0, c).map_err(err)?;
    Ok(r.rows
        .into_iter()
        .map(|row| (row.relation.to_string(), row.lhs, row.rhs, row.pass, row.conditional))
        .collect())
}

#[pyfunction]
#[pyo3(signature = (seed, m_max=40))]
fn fixed_point<'py>(py: Python<'py>, seed: &PyVectorField, m_max: usize) -> PyResult<Bound<'py, PyDict>> {
    let run = uniqueness::fixed_point_iteration(&seed.0, m_max, &SolverConfig::default()).map_err(err)?;
    let d = PyDict::new(py);
    d.set_item("u_l2", run.triples.iter().map(|t| t.u_l2).collect::<Vec<_>>())?;
    d.set_item("grad_l2", run.triples.iter().map(|t| t.grad_l2).collect::<Vec<_>>())?;
    d.set_item("lap_l2", run.triples.iter().map(|t| t.lap_l2).collect::<Vec<_>>())?;
    d.set_item("forcing", run.forcing.clone())?;
    d.set_item("diverged", run.diverged)?;
    Ok(d)
}

#[pyfunction]
#[pyo3(signature = (grid, components, seed=0))]
fn random_zero_boundary(grid: PyGridSpec, components: usize, seed: u64) -> PyVectorField {
    PyVectorField(uniqueness::random_zero_boundary(grid.0, components, seed))
}

/// Smooth zero-boundary seed with `max(norm_triple) = epsilon`.
#[pyfunction]
#[pyo3(signature = (grid, epsilon, seed=0))]
fn scaled_seed(grid: PyGridSpec, epsilon: f64, seed: u64) -> PyResult<PyVectorField> {
    uniqueness::scaled_seed(grid.0, seed, epsilon).map(PyVectorField).map_err(err)
}

#[pymodule]
#[pyo3(name = "curlgrid")]
fn curlgrid_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyGridSpec>()?;
    m.add_class::<PyScalarField>()?;
    m.add_class::<PyVectorField>()?;
    m.add_class::<PyTransformation>()?;
    m.add_class::<PyMonitorPair>()?;
    m.add_function(wrap_pyfunction!(monitor_from_image, m)?)?;
    m.add_function(wrap_pyfunction!(jacobian_det, m)?)?;
    m.add_function(wrap_pyfunction!(curl, m)?)?;
    m.add_function(wrap_pyfunction!(gradient, m)?)?;
    m.add_function(wrap_pyfunction!(divergence, m)?)?;
    m.add_function(wrap_pyfunction!(laplacian, m)?)?;
    m.add_function(wrap_pyfunction!(expansion_f, m)?)?;
    m.add_function(wrap_pyfunction!(solve_dirichlet, m)?)?;
    m.add_function(wrap_pyfunction!(solve_div_curl, m)?)?;
    m.add_function(wrap_pyfunction!(poincare_constant, m)?)?;
    m.add_function(wrap_pyfunction!(minimize, m)?)?;
    m.add_function(wrap_pyfunction!(reconstruct, m)?)?;
    m.add_function(wrap_pyfunction!(norm_triple, m)?)?;
    m.add_function(wrap_pyfunction!(green_identity_gap, m)?)?;
    m.add_function(wrap_pyfunction!(bound_sequence, m)?)?;
    m.add_function(wrap_pyfunction!(chain_report, m)?)?;
    m.add_function(wrap_pyfunction!(fixed_point, m)?)?;
    m.add_function(wrap_pyfunction!(random_zero_boundary, m)?)?;
    m.add_function(wrap_pyfunction!(scaled_seed, m)?)?;
    Ok(())
}
