//! Python bindings: model spaces, polar metrics, the verification pipeline
//! and symmetrization.

use geoball::expr::{parse_metric_expr, parse_warping_expr};
use geoball::hierarchy::{lambda1_from_moments, lambda1_shooting, mean_exit_profile, moment_spectrum};
use geoball::model::ModelSpace;
use geoball::pde::{solve_hierarchy_grid, PolarGrid};
use geoball::surface::{hypothesis_report, Direction, PolarMetric2D};
use geoball::symmetrize::{check_equimeasurable, integral_identity_check, symmetrize_field};
use geoball::verify::{verify as run_verify, Tolerances, VerifyConfig};
use pyo3::create_exception;
use pyo3::exceptions::{PyException, PyValueError};
use pyo3::prelude::*;
use pyo3::types::PyDict;
use serde::Serialize;

create_exception!(
    geoball_py,
    GeoballError,
    PyException,
    "A computation failed or a check could not be run."
);
create_exception!(
    geoball_py,
    ParseError,
    PyValueError,
    "An expression did not parse; args are (message, offset)."
);

fn to_py_err(e: geoball::Error) -> PyErr {
    match e {
        geoball::Error::Parse { offset, message } => ParseError::new_err((message, offset)),
        other => GeoballError::new_err(other.to_string()),
    }
}

fn to_py<'py, T: Serialize>(py: Python<'py>, value: &T) -> PyResult<Bound<'py, PyAny>> {
    let text = serde_json::to_string(value).map_err(|e| GeoballError::new_err(e.to_string()))?;
    py.import("json")?.call_method1("loads", (text,))
}

fn parse_direction(s: &str) -> PyResult<Direction> {
    match s {
        "model<=M" => Ok(Direction::ModelLeM),
        "model>=M" => Ok(Direction::ModelGeM),
        "equal" => Ok(Direction::Equal),
        _ => Err(PyValueError::new_err(format!(
            "direction must be model<=M, model>=M or equal, got '{s}'"
        ))),
    }
}

/// An ω-model space built from a warping expression.
#[pyclass(name = "Model", module = "geoball_py", frozen)]
pub struct PyModel {
    inner: ModelSpace,
}

#[pymethods]
impl PyModel {
    /// `probe` is the radius up to which ω must stay positive.
    #[new]
    #[pyo3(signature = (warping, dim = 2, probe = 0.0))]
    fn new(warping: &str, dim: usize, probe: f64) -> PyResult<Self> {
        let w = parse_warping_expr(warping, probe).map_err(to_py_err)?;
        Ok(Self {
            inner: ModelSpace::new(w, dim).map_err(to_py_err)?,
        })
    }

    #[getter]
    fn label(&self) -> String {
        self.inner.warping().label()
    }

    #[getter]
    fn dim(&self) -> usize {
        self.inner.dim()
    }

    #[getter]
    fn r_max(&self) -> f64 {
        self.inner.r_max()
    }

    fn omega(&self, r: f64) -> f64 {
        self.inner.warping().value(r)
    }

    fn mean_curvature(&self, r: f64) -> PyResult<f64> {
        self.inner.mean_curvature(r).map_err(to_py_err)
    }

    fn isoperimetric_quotient(&self, r: f64) -> PyResult<f64> {
        self.inner.isoperimetric_quotient(r).map_err(to_py_err)
    }

    fn ball_volume(&self, r: f64) -> PyResult<f64> {
        self.inner.ball_volume(r).map_err(to_py_err)
    }

    fn sphere_volume(&self, r: f64) -> PyResult<f64> {
        self.inner.sphere_volume(r).map_err(to_py_err)
    }

    fn ball_radius_from_volume(&self, volume: f64) -> PyResult<f64> {
        self.inner.ball_radius_from_volume(volume).map_err(to_py_err)
    }

    #[pyo3(signature = (radius, samples = 256))]
    fn balance_check<'py>(&self, py: Python<'py>, radius: f64, samples: usize) -> PyResult<Bound<'py, PyAny>> {
        to_py(py, &self.inner.balance_check(radius, samples).map_err(to_py_err)?)
    }

    /// E_R^ω at r_i = iR/intervals, i = 0..=intervals.
    #[pyo3(signature = (radius, intervals = 256))]
    fn mean_exit(&self, radius: f64, intervals: usize) -> PyResult<Vec<f64>> {
        Ok(mean_exit_profile(&self.inner, radius, intervals)
            .map_err(to_py_err)?
            .values()
            .to_vec())
    }

    #[pyo3(signature = (radius, k_max = 10))]
    fn moments<'py>(&self, py: Python<'py>, radius: f64, k_max: usize) -> PyResult<Bound<'py, PyAny>> {
        let spectrum = moment_spectrum(&self.inner, radius, k_max).map_err(to_py_err)?;
        let dict = to_py(py, &spectrum)?;
        dict.set_item("ratios", spectrum.ratios())?;
        Ok(dict)
    }

    fn lambda1_shooting(&self, radius: f64) -> PyResult<f64> {
        lambda1_shooting(&self.inner, radius).map_err(to_py_err)
    }

    #[pyo3(signature = (radius, k_max = 40))]
    fn lambda1_moments<'py>(&self, py: Python<'py>, radius: f64, k_max: usize) -> PyResult<Bound<'py, PyAny>> {
        let spectrum = moment_spectrum(&self.inner, radius, k_max).map_err(to_py_err)?;
        to_py(py, &lambda1_from_moments(&spectrum).map_err(to_py_err)?)
    }

    fn __repr__(&self) -> String {
        format!("Model('{}', dim={})", self.inner.warping().label(), self.inner.dim())
    }
}

/// A polar metric dt² + ω(t,θ)² dθ² built from a metric expression.
#[pyclass(name = "Metric", module = "geoball_py", frozen)]
pub struct PyMetric {
    inner: PolarMetric2D,
}

#[pymethods]
impl PyMetric {
    #[new]
    fn new(metric: &str) -> PyResult<Self> {
        Ok(Self {
            inner: parse_metric_expr(metric).map_err(to_py_err)?,
        })
    }

    #[getter]
    fn label(&self) -> String {
        self.inner.label().to_string()
    }

    #[getter]
    fn r_valid(&self) -> f64 {
        self.inner.r_valid()
    }

    fn omega(&self, r: f64, theta: f64) -> f64 {
        self.inner.w(r, theta)
    }

    fn mean_curvature(&self, t: f64, theta: f64) -> PyResult<f64> {
        self.inner.sphere_mean_curvature(t, theta).map_err(to_py_err)
    }

    fn gauss_curvature(&self, t: f64, theta: f64) -> PyResult<f64> {
        self.inner.gauss_curvature(t, theta).map_err(to_py_err)
    }

    fn sphere_length(&self, r: f64) -> PyResult<f64> {
        self.inner.sphere_length(r).map_err(to_py_err)
    }

    fn ball_area(&self, r: f64) -> PyResult<f64> {
        self.inner.ball_area(r).map_err(to_py_err)
    }

    fn __repr__(&self) -> String {
        format!("Metric('{}')", self.inner.label())
    }
}

#[pyfunction]
#[pyo3(signature = (metric, model, radius, n_r = 256, n_theta = 256))]
fn hypothesis<'py>(
    py: Python<'py>,
    metric: &PyMetric,
    model: &PyModel,
    radius: f64,
    n_r: usize,
    n_theta: usize,
) -> PyResult<Bound<'py, PyAny>> {
    let report = hypothesis_report(&metric.inner, &model.inner, radius, n_r, n_theta).map_err(to_py_err)?;
    to_py(py, &report)
}

/// Runs every comparison and returns the report as a dict.
#[pyfunction]
#[pyo3(signature = (metric, model, radius, n_r = 128, n_theta = 128, k_max = 5, force_direction = None, tolerances = None))]
#[allow(clippy::too_many_arguments)]
fn verify<'py>(
    py: Python<'py>,
    metric: &PyMetric,
    model: &PyModel,
    radius: f64,
    n_r: usize,
    n_theta: usize,
    k_max: usize,
    force_direction: Option<&str>,
    tolerances: Option<&Bound<'py, PyDict>>,
) -> PyResult<Bound<'py, PyAny>> {
    let mut config = VerifyConfig::new(radius).with_grid(n_r, n_theta);
    config.k_max = k_max;
    config.force_direction = force_direction.map(parse_direction).transpose()?;
    if let Some(t) = tolerances {
        config.tolerances = tolerances_from(t)?;
    }
    let report = py
        .detach(|| run_verify(&metric.inner, &model.inner, config))
        .map_err(to_py_err)?;
    to_py(py, &report)
}

fn tolerances_from(d: &Bound<'_, PyDict>) -> PyResult<Tolerances> {
    let mut t = Tolerances::default();
    for (key, value) in d.iter() {
        let key: String = key.extract()?;
        let value: f64 = value.extract()?;
        let slot = match key.as_str() {
            "inequality" => &mut t.inequality,
            "equality" => &mut t.equality,
            "quadrature_equality" => &mut t.quadrature_equality,
            "symmetrization" => &mut t.symmetrization,
            other => return Err(PyValueError::new_err(format!("unknown tolerance '{other}'"))),
        };
        *slot = value;
    }
    Ok(t)
}

/// Symmetrizes the grid mean exit time of B_R^M into the model.
#[pyfunction]
#[pyo3(signature = (metric, model, radius, n_r = 128, n_theta = 128, samples = 256))]
fn symmetrize<'py>(
    py: Python<'py>,
    metric: &PyMetric,
    model: &PyModel,
    radius: f64,
    n_r: usize,
    n_theta: usize,
    samples: usize,
) -> PyResult<Bound<'py, PyAny>> {
    let (metric, model) = (&metric.inner, &model.inner);
    let computed = py.detach(|| -> geoball::Result<_> {
        let grid = PolarGrid::new(metric, radius, n_r, n_theta)?;
        let hierarchy = solve_hierarchy_grid(&grid, 1)?;
        let field = hierarchy.member(1)?;
        let fstar = symmetrize_field(field, &grid, model)?;
        let eq = check_equimeasurable(field, &grid, &fstar, model, 2048)?;
        let identity = integral_identity_check(&grid, model)?;
        let s = fstar.radius;
        let rho: Vec<f64> = (0..=samples).map(|i| s * i as f64 / samples as f64).collect();
        let smooth: Vec<f64> = rho.iter().map(|&r| fstar.smooth_value(r)).collect();
        let step: Vec<f64> = rho.iter().map(|&r| fstar.step_value(r)).collect();
        Ok((s, eq, identity, rho, step, smooth))
    });
    let (s, eq, identity, rho, step, smooth) = computed.map_err(to_py_err)?;
    let out = PyDict::new(py);
    out.set_item("symmetrized_radius", s)?;
    out.set_item("equimeasurability", to_py(py, &eq)?)?;
    out.set_item("integral_identity", to_py(py, &identity)?)?;
    out.set_item("rho", rho)?;
    out.set_item("step_value", step)?;
    out.set_item("smooth_value", smooth)?;
    Ok(out.into_any())
}

#[pymodule]
pub fn geoball_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add("GeoballError", m.py().get_type::<GeoballError>())?;
    m.add("ParseError", m.py().get_type::<ParseError>())?;
    m.add_class::<PyModel>()?;
    m.add_class::<PyMetric>()?;
    m.add_function(wrap_pyfunction!(hypothesis, m)?)?;
    m.add_function(wrap_pyfunction!(verify, m)?)?;
    m.add_function(wrap_pyfunction!(symmetrize, m)?)?;
    m.add("__version__", env!("CARGO_PKG_VERSION"))?;
    Ok(())
}
