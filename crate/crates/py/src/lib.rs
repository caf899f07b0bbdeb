//! Python bindings. Reports come back as plain dicts.

use pyo3::exceptions::{PyArithmeticError, PyValueError};
use pyo3::prelude::*;
use serde_json::{json, Value};

use finsler_iso::decomposition::{extract_theta, tabulate_theta, MetricOracle};
use finsler_iso::geometry::{self, GeodesicOptions};
use finsler_iso::invariance::{self, CongruenceClass};
use finsler_iso::metric::{self, PD_DEFAULT_TOL};
use finsler_iso::profile::{
    NonSymLambdaProfile, RiemannProfile, SymLambdaProfile, ThetaProfile, VarthetaProfile,
};
use finsler_iso::{linalg, Complex64, Error, Field, RadiusDomain};

fn err(e: Error) -> PyErr {
    match e {
        Error::OutOfDomain(_)
        | Error::NonPositiveMetric { .. }
        | Error::NoValidInitialization
        | Error::Eval(_)
        | Error::Profile(_)
        | Error::AllSamplesSkipped(_) => PyArithmeticError::new_err(e.to_string()),
        _ => PyValueError::new_err(e.to_string()),
    }
}

fn parse_field(name: &str) -> PyResult<Field> {
    match name {
        "real" => Ok(Field::Real),
        "complex" => Ok(Field::Complex),
        other => Err(PyValueError::new_err(format!(
            "field must be 'real' or 'complex', got {other:?}"
        ))),
    }
}

fn field_name(f: Field) -> &'static str {
    match f {
        Field::Real => "real",
        Field::Complex => "complex",
    }
}

fn to_py(py: Python<'_>, v: &Value) -> PyResult<Py<PyAny>> {
    Ok(py
        .import("json")?
        .call_method1("loads", (v.to_string(),))?
        .unbind())
}

/// A vector over R or C. Entries may be floats or complex numbers.
#[pyclass(name = "Vector", module = "finsler_iso", frozen, skip_from_py_object)]
#[derive(Clone)]
struct PyVector(linalg::Vector);

#[pymethods]
impl PyVector {
    #[new]
    #[pyo3(signature = (entries, field = "real"))]
    fn new(entries: Vec<Complex64>, field: &str) -> PyResult<Self> {
        Ok(PyVector(
            linalg::Vector::new(parse_field(field)?, entries).map_err(err)?,
        ))
    }

    #[getter]
    fn dim(&self) -> usize {
        self.0.dim()
    }

    #[getter]
    fn field(&self) -> &'static str {
        field_name(self.0.field())
    }

    fn entries(&self) -> Vec<Complex64> {
        self.0.entries().to_vec()
    }

    fn norm(&self) -> f64 {
        linalg::norm(&self.0)
    }

    fn inner(&self, other: &PyVector) -> PyResult<Complex64> {
        linalg::inner(&self.0, &other.0).map_err(err)
    }

    fn __len__(&self) -> usize {
        self.0.dim()
    }

    fn __repr__(&self) -> String {
        format!(
            "Vector({}, field={:?})",
            self.0.to_json_value(),
            self.field()
        )
    }
}

/// A square matrix acting on column vectors.
#[pyclass(
    name = "LinearMap",
    module = "finsler_iso",
    frozen,
    skip_from_py_object
)]
#[derive(Clone)]
struct PyLinearMap(linalg::LinearMap);

#[pymethods]
impl PyLinearMap {
    #[new]
    #[pyo3(signature = (rows, field = "real"))]
    fn new(rows: Vec<Vec<Complex64>>, field: &str) -> PyResult<Self> {
        let n = rows.len();
        let m = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|r| r.len() != m) {
            return Err(PyValueError::new_err("rows have different lengths"));
        }
        let entries = rows.into_iter().flatten().collect();
        Ok(PyLinearMap(
            linalg::LinearMap::new(parse_field(field)?, n, m, entries).map_err(err)?,
        ))
    }

    #[staticmethod]
    #[pyo3(signature = (dim, field = "real"))]
    fn identity(dim: usize, field: &str) -> PyResult<Self> {
        Ok(PyLinearMap(linalg::LinearMap::identity(
            dim,
            parse_field(field)?,
        )))
    }

    #[staticmethod]
    #[pyo3(signature = (dim, field = "real", seed = 0))]
    fn random_unitary(dim: usize, field: &str, seed: u64) -> PyResult<Self> {
        Ok(PyLinearMap(
            linalg::random_unitary(dim, parse_field(field)?, seed).map_err(err)?,
        ))
    }

    fn rows(&self) -> Vec<Vec<Complex64>> {
        let e = self.0.entries_row_major();
        e.chunks(self.0.cols()).map(<[_]>::to_vec).collect()
    }

    fn apply(&self, v: &PyVector) -> PyResult<PyVector> {
        Ok(PyVector(self.0.apply(&v.0).map_err(err)?))
    }

    fn compose(&self, other: &PyLinearMap) -> PyResult<PyLinearMap> {
        Ok(PyLinearMap(self.0.compose(&other.0).map_err(err)?))
    }

    fn scale(&self, c: Complex64) -> PyResult<PyLinearMap> {
        Ok(PyLinearMap(self.0.scale(c).map_err(err)?))
    }

    fn singular_values(&self) -> Vec<f64> {
        linalg::singular_values(&self.0)
    }

    /// "isometry", ("congruence", c) or ("not-congruence", ratio).
    #[pyo3(signature = (tol = 1e-9))]
    fn classify(&self, py: Python<'_>, tol: f64) -> PyResult<Py<PyAny>> {
        let c = invariance::classify_congruence(&self.0, tol).map_err(err)?;
        let v = match c {
            CongruenceClass::Isometry => json!("isometry"),
            CongruenceClass::Congruence(x) => json!(["congruence", x]),
            CongruenceClass::NotCongruence(x) => json!(["not-congruence", x]),
        };
        to_py(py, &v)
    }

    fn __repr__(&self) -> String {
        format!(
            "LinearMap({}x{}, field={:?})",
            self.0.rows(),
            self.0.cols(),
            field_name(self.0.field())
        )
    }
}

/// A metric specification together with its dimension and scalar field.
#[pyclass(name = "Metric", module = "finsler_iso", frozen, skip_from_py_object)]
#[derive(Clone)]
struct PyMetric(metric::MetricSpec);

fn wrap(spec: finsler_iso::Result<metric::MetricSpec>) -> PyResult<PyMetric> {
    spec.map(PyMetric).map_err(err)
}

#[pymethods]
impl PyMetric {
    #[staticmethod]
    #[pyo3(signature = (dim, field = "real"))]
    fn euclidean(dim: usize, field: &str) -> PyResult<Self> {
        wrap(metric::MetricSpec::euclidean(dim, parse_field(field)?))
    }

    #[staticmethod]
    #[pyo3(signature = (dim, field = "real"))]
    fn fubini_study(dim: usize, field: &str) -> PyResult<Self> {
        wrap(metric::MetricSpec::fubini_study(dim, parse_field(field)?))
    }

    #[staticmethod]
    #[pyo3(signature = (dim, field = "real"))]
    fn fubini_study_riemann(dim: usize, field: &str) -> PyResult<Self> {
        wrap(metric::MetricSpec::fubini_study_riemann(
            dim,
            parse_field(field)?,
        ))
    }

    #[staticmethod]
    #[pyo3(signature = (dim, field = "real"))]
    fn norm_quotient(dim: usize, field: &str) -> PyResult<Self> {
        wrap(metric::MetricSpec::norm_quotient(dim, parse_field(field)?))
    }

    #[staticmethod]
    #[pyo3(signature = (b = 1.0))]
    fn area(b: f64) -> PyResult<Self> {
        wrap(metric::MetricSpec::area(b, Field::Real))
    }

    /// lambda(r, p, q), absolutely homogeneous of degree `alpha` in r.
    #[staticmethod]
    #[pyo3(signature = (expr, dim, field = "real", alpha = 1.0))]
    fn from_lambda(expr: &str, dim: usize, field: &str, alpha: f64) -> PyResult<Self> {
        let l = SymLambdaProfile::from_expr(expr, alpha).map_err(err)?;
        wrap(metric::MetricSpec::from_lambda(l, dim, parse_field(field)?))
    }

    /// theta(r, tau)
    #[staticmethod]
    #[pyo3(signature = (expr, dim, field = "real"))]
    fn from_theta(expr: &str, dim: usize, field: &str) -> PyResult<Self> {
        let t = ThetaProfile::from_expr(expr).map_err(err)?;
        wrap(metric::MetricSpec::from_theta(t, dim, parse_field(field)?))
    }

    /// lambda(r, p, q) with complex p split into `pre`, `pim`.
    #[staticmethod]
    #[pyo3(signature = (expr, dim, field = "real"))]
    fn from_nonsym_lambda(expr: &str, dim: usize, field: &str) -> PyResult<Self> {
        let l = NonSymLambdaProfile::from_expr(expr).map_err(err)?;
        wrap(metric::MetricSpec::from_nonsym_lambda(
            l,
            dim,
            parse_field(field)?,
        ))
    }

    /// phi(r), psi(r) on the squared norm r, positive reals by default.
    #[staticmethod]
    #[pyo3(signature = (phi, psi, dim, field = "real"))]
    fn from_riemann(phi: &str, psi: &str, dim: usize, field: &str) -> PyResult<Self> {
        let p = RiemannProfile::from_exprs(phi, psi, RadiusDomain::positive()).map_err(err)?;
        wrap(metric::MetricSpec::from_riemann(
            p,
            dim,
            parse_field(field)?,
        ))
    }

    /// vartheta(tau) of the acute angle.
    #[staticmethod]
    #[pyo3(signature = (expr, dim, field = "real"))]
    fn congruence_invariant(expr: &str, dim: usize, field: &str) -> PyResult<Self> {
        let v = VarthetaProfile::from_expr(expr, "tau").map_err(err)?;
        wrap(metric::MetricSpec::congruence_invariant(
            v,
            dim,
            parse_field(field)?,
        ))
    }

    #[staticmethod]
    fn from_json(text: &str) -> PyResult<Self> {
        wrap(metric::MetricSpec::from_json(text))
    }

    fn to_json(&self) -> PyResult<String> {
        self.0.to_json().map_err(err)
    }

    #[getter]
    fn dim(&self) -> usize {
        self.0.dim()
    }

    #[getter]
    fn field(&self) -> &'static str {
        field_name(self.0.field())
    }

    /// rho_g(h)
    fn __call__(&self, g: &PyVector, h: &PyVector) -> PyResult<f64> {
        metric::eval_finsler(&self.0, &g.0, &h.0).map_err(err)
    }

    /// sigma_g(f, h), for Hermitean metrics only.
    fn sigma(&self, g: &PyVector, f: &PyVector, h: &PyVector) -> PyResult<Complex64> {
        let p = self
            .0
            .riemann_profile()
            .ok_or_else(|| PyValueError::new_err("metric has no sesquilinear form"))?;
        metric::eval_sesquilinear(&p, &g.0, &f.0, &h.0).map_err(err)
    }

    #[pyo3(signature = (map, samples = 100, seed = 0, tol = 1e-9))]
    fn is_symmetry(
        &self,
        py: Python<'_>,
        map: &PyLinearMap,
        samples: usize,
        seed: u64,
        tol: f64,
    ) -> PyResult<Py<PyAny>> {
        let v = invariance::is_symmetry(&map.0, &self.0, samples, seed, tol).map_err(err)?;
        to_py(py, &v.to_json(&self.0, &map.0))
    }

    #[pyo3(signature = (alpha, samples = 100, seed = 0, tol = 1e-9))]
    fn homothety_invariant(
        &self,
        alpha: f64,
        samples: usize,
        seed: u64,
        tol: f64,
    ) -> PyResult<bool> {
        let v =
            metric::check_homothety_invariance(&self.0, alpha, samples, seed, tol).map_err(err)?;
        Ok(v.invariant)
    }

    /// One verdict string per radius.
    #[pyo3(signature = (radii, tol = PD_DEFAULT_TOL))]
    fn positive_definite(&self, py: Python<'_>, radii: Vec<f64>, tol: f64) -> PyResult<Py<PyAny>> {
        let p = self
            .0
            .riemann_profile()
            .ok_or_else(|| PyValueError::new_err("metric has no sesquilinear form"))?;
        let v = metric::check_positive_definite(&p, &radii, tol).map_err(err)?;
        to_py(py, &json!(v))
    }

    #[pyo3(signature = (radii, tol = None))]
    fn kaehler(&self, radii: Vec<f64>, tol: Option<f64>) -> PyResult<Vec<bool>> {
        let p = self
            .0
            .riemann_profile()
            .ok_or_else(|| PyValueError::new_err("metric has no sesquilinear form"))?;
        metric::check_kaehler(&p, &radii, None, tol).map_err(err)
    }

    /// Random non-congruences against the metric, with unitary controls.
    #[pyo3(signature = (maps = 100, samples = 64, seed = 0, min_sv_ratio = 1.1, tol = 1e-9))]
    fn probe(
        &self,
        py: Python<'_>,
        maps: usize,
        samples: usize,
        seed: u64,
        min_sv_ratio: f64,
        tol: f64,
    ) -> PyResult<Py<PyAny>> {
        let rep = py
            .detach(|| {
                invariance::theorem_main_probe(&self.0, maps, samples, seed, min_sv_ratio, tol)
            })
            .map_err(err)?;
        to_py(py, &rep.to_json(&self.0))
    }

    /// Upper bound on the geodesic distance and the optimized vertices.
    #[pyo3(signature = (g, h, vertices = 65, iterations = 400, seed = 0, restarts = 1))]
    fn distance(
        &self,
        py: Python<'_>,
        g: &PyVector,
        h: &PyVector,
        vertices: usize,
        iterations: usize,
        seed: u64,
        restarts: usize,
    ) -> PyResult<(f64, Vec<Vec<Complex64>>)> {
        let opts = GeodesicOptions {
            n_vertices: vertices,
            n_iterations: iterations,
            seed,
            restarts,
        };
        let geo = py
            .detach(|| geometry::geodesic_distance(&self.0, &g.0, &h.0, &opts))
            .map_err(err)?;
        let path = match &geo.path {
            geometry::Curve::Polyline { vertices, .. } => {
                vertices.iter().map(|v| v.entries().to_vec()).collect()
            }
            geometry::Curve::Parametric { .. } => Vec::new(),
        };
        Ok((geo.value, path))
    }

    /// Length of the polyline through `points`, parametrized on [0, 1].
    #[pyo3(signature = (points, nodes = 201))]
    fn polyline_length(&self, points: Vec<PyRef<'_, PyVector>>, nodes: usize) -> PyResult<f64> {
        let n = points.len();
        if n < 2 {
            return Err(PyValueError::new_err("need at least two points"));
        }
        let params = (0..n).map(|i| i as f64 / (n - 1) as f64).collect();
        let vs = points.iter().map(|p| p.0.clone()).collect();
        let curve = geometry::Curve::polyline(params, vs).map_err(err)?;
        geometry::curve_length(&self.0, &curve, nodes).map_err(err)
    }

    /// Rows (r, tau, theta) of the recovered angle profile.
    #[pyo3(signature = (radii, tau_steps = 7))]
    fn theta_table(&self, radii: Vec<f64>, tau_steps: usize) -> PyResult<Vec<(f64, f64, f64)>> {
        let theta = extract_theta(&MetricOracle::from_spec(&self.0)).map_err(err)?;
        let rows = tabulate_theta(&theta, &radii, tau_steps).map_err(err)?;
        Ok(rows
            .into_iter()
            .map(|r| (r.r, r.tau, r.theta_value))
            .collect())
    }

    fn __repr__(&self) -> String {
        match self.0.to_json() {
            Ok(s) => format!("Metric({s})"),
            Err(_) => "Metric(<custom>)".into(),
        }
    }
}

/// sin of the acute angle between the lines through g and h.
#[pyfunction]
fn delta1(g: &PyVector, h: &PyVector) -> PyResult<f64> {
    geometry::delta1(&g.0, &h.0).map_err(err)
}

/// Chord between the unit-sphere points of the lines through g and h.
#[pyfunction]
fn delta2(g: &PyVector, h: &PyVector) -> PyResult<f64> {
    geometry::delta2(&g.0, &h.0).map_err(err)
}

/// (r, p, q) with r = |g|, <h, g> = p r and q the orthogonal part of h.
#[pyfunction]
fn canonical_invariants(g: &PyVector, h: &PyVector) -> PyResult<(f64, f64, f64)> {
    linalg::canonical_invariants(&g.0, &h.0).map_err(err)
}

#[pymodule]
#[pyo3(name = "finsler_iso")]
fn finsler_iso_module(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyVector>()?;
    m.add_class::<PyLinearMap>()?;
    m.add_class::<PyMetric>()?;
    m.add_function(wrap_pyfunction!(delta1, m)?)?;
    m.add_function(wrap_pyfunction!(delta2, m)?)?;
    m.add_function(wrap_pyfunction!(canonical_invariants, m)?)?;
    Ok(())
}
