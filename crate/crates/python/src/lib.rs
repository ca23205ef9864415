//! Python bindings. The `Graph` class wraps a spatial graph; the free functions
//! take graphs and configurations as JSON strings in the schema the `srg` CLI uses.

use pyo3::exceptions::{PyArithmeticError, PyValueError};
use pyo3::prelude::*;
use srg::bounds::{coupling_bound_bstar, stein_factor_edge, stein_factor_vertex, NStar};
use srg::experiments::{
    run_boolean_experiment, run_discretisation_experiment, run_soft_rgg_experiment, BooleanConfig,
    DiscretisationConfig, SoftRggConfig,
};
use srg::gospa::{GospaParams, GospaVariant};
use srg::graph::{sample_rgg, EdgeModel, SpatialGraph};
use srg::point_process::{GibbsModel, PointPattern};
use srg::space::{BaseMetricParams, Point, RngStream};
use srg::transport::{empirical_wasserstein, OtMethod};

fn to_py(e: srg::Error) -> PyErr {
    if e.is_validation() {
        PyValueError::new_err(e.to_string())
    } else {
        PyArithmeticError::new_err(e.to_string())
    }
}

fn from_json<T: serde::de::DeserializeOwned>(text: &str) -> PyResult<T> {
    serde_json::from_str(text).map_err(|e| PyValueError::new_err(format!("json: {e}")))
}

fn metric(cv: f64, ce: f64, variant: u8) -> PyResult<GospaParams> {
    let base = BaseMetricParams::new(cv, ce).map_err(to_py)?;
    let variant = GospaVariant::try_from(variant).map_err(to_py)?;
    Ok(GospaParams::new(base, variant))
}

fn graph(text: &str) -> PyResult<SpatialGraph> {
    SpatialGraph::from_json(text).map_err(to_py)
}

/// A spatial graph: vertex coordinates plus undirected edges `(i, j)` with `i < j`.
#[pyclass(name = "Graph", eq, frozen, skip_from_py_object)]
#[derive(Clone, PartialEq)]
struct PyGraph(SpatialGraph);

#[pymethods]
impl PyGraph {
    #[new]
    #[pyo3(signature = (vertices, edges=Vec::new()))]
    fn new(vertices: Vec<Vec<f64>>, edges: Vec<(usize, usize)>) -> PyResult<Self> {
        let pattern = PointPattern::new(vertices.iter().map(|c| Point::new(c)).collect()).map_err(to_py)?;
        SpatialGraph::new(pattern, edges).map(Self).map_err(to_py)
    }

    #[staticmethod]
    fn from_json(text: &str) -> PyResult<Self> {
        graph(text).map(Self)
    }

    fn to_json(&self) -> String {
        self.0.to_json()
    }

    #[getter]
    fn n_vertices(&self) -> usize {
        self.0.n_vertices()
    }

    #[getter]
    fn n_edges(&self) -> usize {
        self.0.n_edges()
    }

    #[getter]
    fn vertices(&self) -> Vec<Vec<f64>> {
        self.0.points().iter().map(|p| p.coords().to_vec()).collect()
    }

    #[getter]
    fn edges(&self) -> Vec<(usize, usize)> {
        self.0.edges().iter().copied().collect()
    }

    /// GOSPA distance to `other`.
    #[pyo3(signature = (other, cv=1.0, ce=1.0, variant=1))]
    fn gospa(&self, other: &PyGraph, cv: f64, ce: f64, variant: u8) -> PyResult<f64> {
        Ok(srg::gospa::gospa(&self.0, &other.0, &metric(cv, ce, variant)?))
    }

    fn __repr__(&self) -> String {
        format!(
            "Graph(n_vertices={}, n_edges={})",
            self.0.n_vertices(),
            self.0.n_edges()
        )
    }
}

/// GOSPA distance between two graphs given as JSON.
#[pyfunction]
#[pyo3(signature = (a, b, cv=1.0, ce=1.0, variant=1))]
fn gospa(a: &str, b: &str, cv: f64, ce: f64, variant: u8) -> PyResult<f64> {
    Ok(srg::gospa::gospa(&graph(a)?, &graph(b)?, &metric(cv, ce, variant)?))
}

/// Exact empirical Wasserstein distance between two lists of JSON graphs.
#[pyfunction]
#[pyo3(signature = (a, b, cv=1.0, ce=1.0, variant=1))]
fn wasserstein(py: Python<'_>, a: Vec<String>, b: Vec<String>, cv: f64, ce: f64, variant: u8) -> PyResult<f64> {
    let params = metric(cv, ce, variant)?;
    let a = a.iter().map(|g| graph(g)).collect::<PyResult<Vec<_>>>()?;
    let b = b.iter().map(|g| graph(g)).collect::<PyResult<Vec<_>>>()?;
    py.detach(|| empirical_wasserstein(&a, &b, &params, &OtMethod::ExactOt))
        .map(|w| w.value)
        .map_err(to_py)
}

/// Vertex and edge Stein factors `(c_V, c_E)` at total intensity `lam`.
#[pyfunction]
#[pyo3(signature = (lam, cv=1.0, ce=1.0, variant=1))]
fn stein_factors(lam: f64, cv: f64, ce: f64, variant: u8) -> PyResult<(f64, f64)> {
    let params = metric(cv, ce, variant)?;
    let c_v = stein_factor_vertex(lam, &params).map_err(to_py)?;
    let c_e = stein_factor_edge(lam, ce).map_err(to_py)?;
    Ok((c_v, c_e))
}

/// Coupling-time bound B*; `n_star=None` selects the infinite form.
#[pyfunction]
#[pyo3(signature = (epsilon, c, n_star=None))]
fn coupling_bound(epsilon: f64, c: f64, n_star: Option<u64>) -> PyResult<f64> {
    let n_star = n_star.map_or(NStar::Infinite, NStar::Finite);
    coupling_bound_bstar(epsilon, c, n_star).map_err(to_py)
}

/// One graph from JSON vertex and edge models, drawn from stream `stream` of `seed`.
#[pyfunction]
#[pyo3(signature = (vertex, edge, seed, stream=0))]
fn sample_graph(vertex: &str, edge: &str, seed: u64, stream: u64) -> PyResult<String> {
    let model: GibbsModel = from_json(vertex)?;
    let edges: EdgeModel = from_json(edge)?;
    let g = sample_rgg(&model, &edges, &mut RngStream::new(seed, stream)).map_err(to_py)?;
    Ok(g.to_json())
}

/// Runs `"boolean"`, `"discretisation"` or `"soft-rgg"` and returns the CSV table.
#[pyfunction]
#[pyo3(signature = (kind, config, seed, cv=1.0, ce=1.0, variant=1))]
fn run_experiment(
    py: Python<'_>,
    kind: &str,
    config: &str,
    seed: u64,
    cv: f64,
    ce: f64,
    variant: u8,
) -> PyResult<String> {
    let params = metric(cv, ce, variant)?;
    let table = match kind {
        "boolean" => {
            let cfg: BooleanConfig = from_json(config)?;
            py.detach(|| run_boolean_experiment(&cfg, &params, seed))
        }
        "discretisation" => {
            let cfg: DiscretisationConfig = from_json(config)?;
            py.detach(|| run_discretisation_experiment(&cfg, &params, seed))
        }
        "soft-rgg" => {
            let cfg: SoftRggConfig = from_json(config)?;
            py.detach(|| run_soft_rgg_experiment(&cfg, &params, seed))
        }
        other => return Err(PyValueError::new_err(format!("unknown experiment {other:?}"))),
    }
    .map_err(to_py)?;
    Ok(table.to_csv_string())
}

#[pymodule]
fn srg_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyGraph>()?;
    m.add_function(wrap_pyfunction!(gospa, m)?)?;
    m.add_function(wrap_pyfunction!(wasserstein, m)?)?;
    m.add_function(wrap_pyfunction!(stein_factors, m)?)?;
    m.add_function(wrap_pyfunction!(coupling_bound, m)?)?;
    m.add_function(wrap_pyfunction!(sample_graph, m)?)?;
    m.add_function(wrap_pyfunction!(run_experiment, m)?)?;
    Ok(())
}
