//! Python module `cce_py`.

use std::collections::BTreeMap;

use pyo3::create_exception;
use pyo3::exceptions::PyException;
use pyo3::prelude::*;
use pyo3::types::{PyDict, PyList};

use cce_core::compactify::{self, CompactificationChecks, EigenfunctionSolution};
use cce_core::gb::{self, DomainTag, QuadratureSpec};
use cce_core::models::{self, ModelSpec};
use cce_core::pipeline::{self, RunConfig};
use cce_core::tensor::curvature;
use cce_core::topology::{self, TopologyInputs, TopologyOptions};
use cce_core::volume::{self, VolumeOptions};

create_exception!(cce_py, CceError, PyException);

fn err(e: cce_core::Error) -> PyErr {
    CceError::new_err(e.to_string())
}

/// A model from the library, e.g. `Model("ads-schwarzschild", 1.0)`.
#[pyclass(name = "Model", frozen)]
struct PyModel {
    inner: models::Model,
}

#[pymethods]
impl PyModel {
    #[new]
    #[pyo3(signature = (family, parameter=None))]
    fn new(family: &str, parameter: Option<f64>) -> PyResult<Self> {
        let mut spec = ModelSpec::from_name(family, None).map_err(err)?;
        if let Some(p) = parameter {
            spec = spec.with_parameter(p).map_err(err)?;
        }
        Ok(PyModel {
            inner: models::instantiate(&spec).map_err(err)?,
        })
    }

    #[staticmethod]
    fn library() -> Vec<String> {
        ModelSpec::library().iter().map(|s| s.name().to_string()).collect()
    }

    #[getter]
    fn name(&self) -> String {
        self.inner.spec.to_string()
    }

    #[getter]
    fn einstein(&self) -> bool {
        self.inner.flags.einstein
    }

    #[getter]
    fn closed(&self) -> bool {
        self.inner.flags.closed
    }

    #[getter]
    fn yamabe_positive(&self) -> bool {
        self.inner.flags.yamabe_positive
    }

    #[getter]
    fn chi(&self) -> i64 {
        self.inner.flags.known_chi
    }

    #[getter]
    fn dim(&self) -> usize {
        self.inner.metric.dim()
    }

    /// `(lower, upper)` corners of the chart box.
    fn domain(&self) -> (Vec<f64>, Vec<f64>) {
        let d = self.inner.metric.domain();
        (d.lower.clone(), d.upper.clone())
    }

    #[getter]
    fn s_max(&self) -> PyResult<f64> {
        Ok(self.inner.fg().map_err(err)?.s_max())
    }

    /// Closed-form renormalized volume, or `None`.
    fn exact_volume(&self) -> Option<f64> {
        models::exact_reference(&self.inner.spec).ok().and_then(|r| r.renormalized_volume)
    }

    /// Scalar invariants of the curvature at `point`.
    #[pyo3(signature = (point, orientation=1.0))]
    fn curvature<'py>(&self, py: Python<'py>, point: Vec<f64>, orientation: f64) -> PyResult<Bound<'py, PyDict>> {
        let c = curvature(&self.inner.metric, &point, orientation).map_err(err)?;
        let d = PyDict::new(py);
        d.set_item("volume_density", c.volume_density)?;
        d.set_item("scalar", c.scalar)?;
        d.set_item("sigma2", c.sigma2)?;
        d.set_item("traceless_ricci_norm2", c.traceless_ricci_norm2)?;
        d.set_item("weyl_norm2", c.weyl_norm2)?;
        d.set_item("weyl_plus_norm2", c.weyl_plus_norm2)?;
        d.set_item("weyl_minus_norm2", c.weyl_minus_norm2)?;
        d.set_item("bianchi_defect", c.bianchi_defect())?;
        let n = c.dim;
        let ricci: Vec<Vec<f64>> = (0..n).map(|i| c.ricci[i][..n].to_vec()).collect();
        d.set_item("ricci", ricci)?;
        Ok(d)
    }

    fn __repr__(&self) -> String {
        format!("Model({})", self.inner.spec)
    }
}

/// Renormalized volume fit; `ladder` defaults to the built-in one.
#[pyfunction]
#[pyo3(signature = (model, ladder=None, tol_fit=1e-4, tol_quadrature=1e-12))]
fn fit_volume(
    model: &PyModel,
    ladder: Option<Vec<f64>>,
    tol_fit: f64,
    tol_quadrature: f64,
) -> PyResult<BTreeMap<String, f64>> {
    let fg = model.inner.fg().map_err(err)?;
    let ladder = ladder.unwrap_or_else(volume::default_ladder);
    let opts = VolumeOptions {
        quadrature_tol: tol_quadrature,
        fit_tol: tol_fit,
        ..VolumeOptions::default()
    };
    let fit = volume::fit_renormalized_volume(fg, &ladder, &opts).map_err(err)?;
    Ok(BTreeMap::from([
        ("v".to_string(), fit.v),
        ("c0".to_string(), fit.c0),
        ("c2".to_string(), fit.c2),
        ("residual".to_string(), fit.residual),
        ("stability".to_string(), fit.stability),
        ("uncertainty".to_string(), fit.uncertainty()),
        ("boundary_volume".to_string(), fit.boundary_volume),
    ]))
}

/// Radial solution of `Δu = 4u` with `u ~ 1/s` at the boundary.
#[pyclass(name = "Eigenfunction", frozen)]
struct PyEigenfunction {
    sol: EigenfunctionSolution,
    model: models::Model,
}

fn checks_dict<'py>(py: Python<'py>, c: &CompactificationChecks) -> PyResult<Bound<'py, PyDict>> {
    let d = PyDict::new(py);
    d.set_item("boundary_scalar", c.boundary_scalar)?;
    d.set_item("second_fundamental_form", c.second_fundamental_form)?;
    d.set_item("min_scalar", c.min_scalar)?;
    d.set_item("scalar_margin", c.scalar_margin)?;
    d.set_item("bochner_residual", c.bochner_residual)?;
    d.set_item("all_pass", c.all_pass())?;
    Ok(d)
}

#[pymethods]
impl PyEigenfunction {
    #[getter]
    fn w2(&self) -> f64 {
        self.sol.w2
    }

    #[getter]
    fn s_max(&self) -> f64 {
        self.sol.s_max
    }

    #[getter]
    fn pde_residual(&self) -> f64 {
        self.sol.pde_residual
    }

    fn u(&self, s: f64) -> f64 {
        self.sol.u(s)
    }

    /// Scalar curvature of `u⁻²g` at `s`.
    fn compactified_scalar(&self, s: f64) -> PyResult<f64> {
        compactify::compactified_scalar(&self.sol, self.model.fg().map_err(err)?, s).map_err(err)
    }

    #[pyo3(signature = (tol=1e-4))]
    fn checks<'py>(&self, py: Python<'py>, tol: f64) -> PyResult<Bound<'py, PyDict>> {
        let c = compactify::compactification_checks(&self.sol, self.model.fg().map_err(err)?, tol).map_err(err)?;
        checks_dict(py, &c)
    }
}

#[pyfunction]
fn solve_eigenfunction(model: &PyModel) -> PyResult<PyEigenfunction> {
    let sol = compactify::solve_eigenfunction(model.inner.fg().map_err(err)?).map_err(err)?;
    Ok(PyEigenfunction {
        sol,
        model: model.inner.clone(),
    })
}

/// Curvature integrals over a closed model.
#[pyfunction]
#[pyo3(signature = (model, nodes=24, tolerance=1e-8))]
fn integrate_curvature(model: &PyModel, nodes: usize, tolerance: f64) -> PyResult<BTreeMap<String, f64>> {
    let spec = QuadratureSpec {
        nodes,
        tolerance,
        orientation: 1.0,
    };
    let suite = gb::integrate_curvature(&model.inner.metric, &spec, DomainTag::ClosedModel, None).map_err(err)?;
    Ok(suite.entries("").into_iter().collect())
}

/// `8π²χ − ¼∫|W|² − 6V`.
#[pyfunction]
fn identity_residual(chi: i64, weyl_energy: f64, v: f64) -> f64 {
    gb::anderson_identity_residual(chi, weyl_energy, v)
}

#[pyfunction]
fn indicial_roots(n: u32) -> (i64, i64) {
    compactify::indicial_roots(n)
}

#[pyfunction]
#[pyo3(signature = (lo=0, hi=100))]
fn betti_parity_argument(lo: u64, hi: u64) -> Vec<u64> {
    topology::betti_parity_argument(lo..=hi)
}

/// Decision layer on `(χ, V, ∫|W|²)`; the double is filled in by doubling.
#[pyfunction]
#[pyo3(signature = (chi, v, weyl_energy, yamabe_positive=true, comparison_tol=1e-9, consistency_tol=1e-3))]
fn evaluate_topology<'py>(
    py: Python<'py>,
    chi: i64,
    v: f64,
    weyl_energy: f64,
    yamabe_positive: bool,
    comparison_tol: f64,
    consistency_tol: f64,
) -> PyResult<Bound<'py, PyDict>> {
    let inputs = TopologyInputs::from_volume(chi, v, weyl_energy, yamabe_positive);
    let t = topology::evaluate(
        &inputs,
        &TopologyOptions {
            comparison_tol,
            consistency_tol,
        },
    );
    let d = PyDict::new(py);
    d.set_item("identity_residual", t.identity_residual)?;
    d.set_item("consistent", t.consistent)?;
    let checks = PyDict::new(py);
    for c in t.checks.iter().chain(t.homology.all()) {
        let e = PyDict::new(py);
        e.set_item("value", c.value)?;
        e.set_item("threshold", c.threshold)?;
        e.set_item("margin", c.margin)?;
        e.set_item("verdict", c.verdict.as_str())?;
        e.set_item("note", c.note.clone())?;
        checks.set_item(&c.name, e)?;
    }
    d.set_item("checks", checks)?;
    let conclusions: Vec<&str> = t.conclusions.iter().map(|c| c.statement.as_str()).collect();
    d.set_item("conclusions", PyList::new(py, conclusions)?)?;
    d.set_item("notes", t.notes.clone())?;
    Ok(d)
}

/// Runs the full pipeline; returns `(passed, report)` with report values as strings.
#[pyfunction]
#[pyo3(signature = (model, config=None))]
fn analyze(model: &PyModel, config: Option<&str>) -> PyResult<(bool, Vec<(String, String)>)> {
    let mut cfg = match config {
        Some(text) => RunConfig::from_toml(text).map_err(err)?,
        None => RunConfig::default(),
    };
    cfg.model = model.inner.spec.clone();
    let out = pipeline::run_analyze(&cfg).map_err(err)?;
    Ok((out.passed(), out.report.entries().to_vec()))
}

#[pymodule]
fn cce_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add("CceError", m.py().get_type::<CceError>())?;
    m.add_class::<PyModel>()?;
    m.add_class::<PyEigenfunction>()?;
    m.add_function(wrap_pyfunction!(fit_volume, m)?)?;
    m.add_function(wrap_pyfunction!(solve_eigenfunction, m)?)?;
    m.add_function(wrap_pyfunction!(integrate_curvature, m)?)?;
    m.add_function(wrap_pyfunction!(identity_residual, m)?)?;
    m.add_function(wrap_pyfunction!(indicial_roots, m)?)?;
    m.add_function(wrap_pyfunction!(betti_parity_argument, m)?)?;
    m.add_function(wrap_pyfunction!(evaluate_topology, m)?)?;
    m.add_function(wrap_pyfunction!(analyze, m)?)?;
    Ok(())
}
