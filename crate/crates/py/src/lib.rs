//! Python bindings. Structured results cross the boundary as JSON and are
//! decoded with the stdlib `json` module, so they arrive as plain dicts.

use std::collections::BTreeMap;

use pyo3::exceptions::{PyKeyError, PyValueError};
use pyo3::prelude::*;
use serde::Serialize;

use sstlab::auditor::{audit_conditions, hypothesis_scan as scan, AuditOptions, ConditionId};
use sstlab::catalog;
use sstlab::geodesics::{integrate_geodesic, GeodesicOptions};
use sstlab::markowitz::{projective_parameter, segment_distance, ProjectiveOptions, SchwarzianSign};
use sstlab::specfile::{load_spacetime_json, SpacetimeSpecFile};
use sstlab::{Error, GridSpec};

fn err(e: Error) -> PyErr {
    match e {
        Error::UnknownEntry(_) => PyKeyError::new_err(e.to_string()),
        _ => PyValueError::new_err(e.to_string()),
    }
}

fn to_py<T: Serialize>(py: Python<'_>, value: &T) -> PyResult<Py<PyAny>> {
    let text = serde_json::to_string(value).map_err(|e| PyValueError::new_err(e.to_string()))?;
    Ok(py.import("json")?.call_method1("loads", (text,))?.unbind())
}

fn matrix(m: &nalgebra::DMatrix<f64>) -> Vec<Vec<f64>> {
    m.row_iter().map(|r| r.iter().copied().collect()).collect()
}

fn grid(per_axis: usize, interior: bool) -> GridSpec {
    if interior {
        GridSpec::interior(per_axis)
    } else {
        GridSpec::closed(per_axis)
    }
}

/// A standard static or GRW space-time.
#[pyclass(name = "Spacetime", frozen)]
struct PySpacetime {
    inner: sstlab::spacetime::Spacetime,
}

#[pymethods]
impl PySpacetime {
    /// Build from the JSON spec-file text.
    #[staticmethod]
    fn from_json(text: &str) -> PyResult<Self> {
        Ok(PySpacetime { inner: load_spacetime_json(text).map_err(err)? })
    }

    /// A catalog space-time with optional parameter overrides.
    #[staticmethod]
    #[pyo3(signature = (name, params=None))]
    fn catalog(name: &str, params: Option<BTreeMap<String, f64>>) -> PyResult<Self> {
        let inner = catalog::catalog_spacetime(name, &params.unwrap_or_default()).map_err(err)?;
        Ok(PySpacetime { inner })
    }

    fn to_json(&self) -> String {
        SpacetimeSpecFile::from_spacetime(&self.inner).to_json()
    }

    #[getter]
    fn dim(&self) -> usize {
        self.inner.dim()
    }

    #[getter]
    fn kind(&self) -> &'static str {
        match self.inner.kind() {
            sstlab::spacetime::SpacetimeKind::Static => "static",
            sstlab::spacetime::SpacetimeKind::Grw => "grw",
        }
    }

    #[getter]
    fn coords(&self) -> Vec<String> {
        let mut c = vec!["t".to_string()];
        c.extend(self.inner.base().coords().iter().cloned());
        c
    }

    fn warp(&self, event: Vec<f64>) -> PyResult<f64> {
        self.inner.warp_value(&event).map_err(err)
    }

    fn metric(&self, event: Vec<f64>) -> PyResult<Vec<Vec<f64>>> {
        Ok(matrix(&self.inner.metric_at(&event).map_err(err)?))
    }

    fn ricci(&self, event: Vec<f64>) -> PyResult<Vec<Vec<f64>>> {
        Ok(matrix(&self.inner.lorentz_geometry_at(&event).map_err(err)?.ricci))
    }

    fn scalar_curvature(&self, event: Vec<f64>) -> PyResult<f64> {
        Ok(self.inner.lorentz_geometry_at(&event).map_err(err)?.scalar)
    }

    fn stress_energy(&self, event: Vec<f64>) -> PyResult<Vec<Vec<f64>>> {
        Ok(matrix(&self.inner.stress_energy_at(&event).map_err(err)?.t))
    }

    /// Condition reports as a list of dicts. `conditions=None` audits the
    /// standard set; `"all"` adds the reversed conditions.
    #[pyo3(signature = (conditions=None, grid_per_axis=5, interior=false, samples=16, seed=0, tol=1e-9))]
    fn audit(
        &self,
        py: Python<'_>,
        conditions: Option<Vec<String>>,
        grid_per_axis: usize,
        interior: bool,
        samples: usize,
        seed: u64,
        tol: f64,
    ) -> PyResult<Py<PyAny>> {
        let ids: Vec<ConditionId> = match conditions {
            None => ConditionId::STANDARD.to_vec(),
            Some(list) if list.len() == 1 && list[0].eq_ignore_ascii_case("all") => ConditionId::ALL.to_vec(),
            Some(list) => list
                .iter()
                .map(|n| ConditionId::parse(n).map_err(err))
                .collect::<PyResult<_>>()?,
        };
        let opts = AuditOptions {
            grid: grid(grid_per_axis, interior),
            samples_per_event: samples,
            seed,
            tol,
        };
        let reports = py.detach(|| audit_conditions(&self.inner, &ids, &opts)).map_err(err)?;
        to_py(py, &reports)
    }

    /// Definiteness classes and fired theorems (static space-times only).
    #[pyo3(signature = (grid_per_axis=5, interior=false, tol=1e-9))]
    fn hypothesis_scan(&self, py: Python<'_>, grid_per_axis: usize, interior: bool, tol: f64) -> PyResult<Py<PyAny>> {
        let s = scan(&self.inner, &grid(grid_per_axis, interior), tol).map_err(err)?;
        to_py(py, &s)
    }

    /// Geodesic samples `{r, event, velocity, norm, energy}` over `span`.
    #[pyo3(signature = (event, velocity, span=(0.0, 10.0), rtol=1e-10, atol=1e-12))]
    fn geodesic(
        &self,
        py: Python<'_>,
        event: Vec<f64>,
        velocity: Vec<f64>,
        span: (f64, f64),
        rtol: f64,
        atol: f64,
    ) -> PyResult<Py<PyAny>> {
        let opts = GeodesicOptions { rtol, atol, h_max: 0.0 };
        let traj = integrate_geodesic(&self.inner, &event, &velocity, span, &opts).map_err(err)?;
        to_py(py, &(traj.samples, traj.exit))
    }

    /// Future-directed null vector over the spatial direction `v` at `event`.
    #[pyo3(signature = (event, v, future=true))]
    fn null_vector(&self, event: Vec<f64>, v: Vec<f64>, future: bool) -> PyResult<Vec<f64>> {
        self.inner.null_initial(&event, &v, future).map_err(err)
    }

    /// Projective-parameter bound between affine parameters `r_a` and `r_b`
    /// on the null geodesic through `event` with velocity `w` at `r = 0`.
    #[pyo3(signature = (event, w, r_a, r_b, span, plus_ricci=false))]
    fn null_segment_distance(
        &self,
        py: Python<'_>,
        event: Vec<f64>,
        w: Vec<f64>,
        r_a: f64,
        r_b: f64,
        span: (f64, f64),
        plus_ricci: bool,
    ) -> PyResult<Py<PyAny>> {
        let opts = ProjectiveOptions {
            sign: if plus_ricci { SchwarzianSign::PlusRicci } else { SchwarzianSign::MinusRicci },
            ..Default::default()
        };
        let d = py
            .detach(|| {
                let pp = projective_parameter(&self.inner, &event, &w, 0.0, span, &opts)?;
                segment_distance(&pp, r_a, r_b)
            })
            .map_err(err)?;
        to_py(py, &d)
    }

    fn __repr__(&self) -> String {
        format!("Spacetime(kind={}, dim={}, warp={:?})", self.kind(), self.dim(), self.inner.warp_text())
    }
}

#[pyfunction]
fn catalog_list() -> Vec<&'static str> {
    catalog::ENTRY_NAMES.to_vec()
}

#[pyfunction]
#[pyo3(signature = (name, params=None))]
fn catalog_info(py: Python<'_>, name: &str, params: Option<BTreeMap<String, f64>>) -> PyResult<Py<PyAny>> {
    to_py(py, &catalog::catalog_info(name, &params.unwrap_or_default()).map_err(err)?)
}

#[pyfunction]
fn poincare_distance(u0: f64, u1: f64) -> PyResult<f64> {
    sstlab::markowitz::poincare_distance(u0, u1).map_err(err)
}

#[pymodule]
#[pyo3(name = "sstlab")]
fn sstlab_module(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PySpacetime>()?;
    m.add_function(wrap_pyfunction!(catalog_list, m)?)?;
    m.add_function(wrap_pyfunction!(catalog_info, m)?)?;
    m.add_function(wrap_pyfunction!(poincare_distance, m)?)?;
    m.add("__version__", env!("CARGO_PKG_VERSION"))?;
    Ok(())
}
