//! Python bindings: `import bibee_py`.

use bibee::bem::{BemSolver, MeshFormat, PanelSurface, SolverKind, SolverOptions};
use bibee::experiments::{self, ExperimentConfig};
use bibee::harmonics;
use bibee::sphere::{self, SphereSolver};
use bibee::{Charge, DielectricPair, Method, Vector3};
use pyo3::create_exception;
use pyo3::exceptions::{PyException, PyOSError};
use pyo3::prelude::*;
use pyo3::types::PyComplex;
use std::collections::BTreeMap;
use std::path::PathBuf;

create_exception!(bibee_py, BibeeError, PyException);

fn err(e: bibee::Error) -> PyErr {
    match e.root() {
        bibee::Error::Io(_) => PyOSError::new_err(e.to_string()),
        _ => BibeeError::new_err(e.to_string()),
    }
}

fn method(name: &str) -> PyResult<Method> {
    name.parse().map_err(err)
}

fn config(toml: Option<&str>) -> PyResult<ExperimentConfig> {
    match toml {
        Some(t) => ExperimentConfig::from_toml(t).map_err(err),
        None => Ok(ExperimentConfig::default()),
    }
}

fn to_python<'py, T: serde::Serialize>(py: Python<'py>, value: &T) -> PyResult<Bound<'py, PyAny>> {
    let mut buf = Vec::new();
    experiments::write_json(value, &mut buf).map_err(err)?;
    py.import("json")?
        .call_method1("loads", (String::from_utf8_lossy(&buf),))
}

/// Point charges `[(x, y, z, q), ...]` in Å and e.
#[pyclass(module = "bibee_py", frozen)]
pub struct ChargeDistribution {
    inner: bibee::ChargeDistribution,
}

#[pymethods]
impl ChargeDistribution {
    #[new]
    #[pyo3(signature = (charges, label = "charges"))]
    fn new(charges: Vec<(f64, f64, f64, f64)>, label: &str) -> PyResult<Self> {
        let charges = charges
            .into_iter()
            .map(|(x, y, z, q)| Charge::new(Vector3::new(x, y, z), q))
            .collect::<Result<Vec<_>, _>>()
            .map_err(err)?;
        let inner = bibee::ChargeDistribution::new(charges, label).map_err(err)?;
        Ok(Self { inner })
    }

    #[staticmethod]
    fn from_pqr(path: PathBuf) -> PyResult<Self> {
        let inner = bibee::pqr::load_pqr(path).map_err(err)?;
        Ok(Self { inner })
    }

    fn to_pqr(&self) -> String {
        bibee::pqr::write_pqr(&self.inner)
    }

    #[getter]
    fn label(&self) -> &str {
        self.inner.label()
    }

    #[getter]
    fn charges(&self) -> Vec<(f64, f64, f64, f64)> {
        self.inner
            .charges()
            .iter()
            .map(|c| (c.position.x, c.position.y, c.position.z, c.magnitude))
            .collect()
    }

    #[getter]
    fn net_charge(&self) -> f64 {
        self.inner.net_charge()
    }

    fn __len__(&self) -> usize {
        self.inner.len()
    }

    fn __repr__(&self) -> String {
        format!(
            "ChargeDistribution('{}', {} charges)",
            self.inner.label(),
            self.inner.len()
        )
    }
}

/// Spherical cavity of `radius` Å with interior/exterior dielectric constants.
#[pyclass(module = "bibee_py", frozen)]
pub struct SphereModel {
    inner: bibee::SphereModel,
}

#[pymethods]
impl SphereModel {
    #[new]
    #[pyo3(signature = (radius, eps_in, eps_out, n_max = 25))]
    fn new(radius: f64, eps_in: f64, eps_out: f64, n_max: usize) -> PyResult<Self> {
        let eps = DielectricPair::new(eps_in, eps_out).map_err(err)?;
        let inner = bibee::SphereModel::new(radius, eps, n_max).map_err(err)?;
        Ok(Self { inner })
    }

    #[getter]
    fn radius(&self) -> f64 {
        self.inner.radius()
    }

    #[getter]
    fn eps_in(&self) -> f64 {
        self.inner.dielectrics().eps_in()
    }

    #[getter]
    fn eps_out(&self) -> f64 {
        self.inner.dielectrics().eps_out()
    }

    #[getter]
    fn n_max(&self) -> usize {
        self.inner.n_max()
    }

    fn __repr__(&self) -> String {
        format!(
            "SphereModel(radius={}, eps_in={}, eps_out={}, n_max={})",
            self.radius(),
            self.eps_in(),
            self.eps_out(),
            self.n_max()
        )
    }
}

/// A solvation energy in kcal/mol.
#[pyclass(module = "bibee_py", frozen, get_all)]
pub struct EnergyResult {
    method: String,
    lambda_: Option<f64>,
    value: f64,
    truncation_estimate: Option<f64>,
    metadata: BTreeMap<String, String>,
}

impl From<bibee::EnergyResult> for EnergyResult {
    fn from(r: bibee::EnergyResult) -> Self {
        Self {
            method: r.method.to_string(),
            lambda_: r.method.lambda(),
            value: r.value,
            truncation_estimate: r.truncation_error_estimate,
            metadata: r.metadata,
        }
    }
}

#[pymethods]
impl EnergyResult {
    fn __float__(&self) -> f64 {
        self.value
    }

    fn __repr__(&self) -> String {
        format!("EnergyResult({}, {} kcal/mol)", self.method, self.value)
    }
}

/// Energies for the analytic sphere methods, e.g. `["kirkwood", "cfa", "m(-0.2)", "gbeps"]`.
///
/// With `escalate`, `n_max` is raised until the truncation bound is small.
#[pyfunction]
#[pyo3(signature = (charges, model, methods, escalate = true))]
fn sphere_energies(
    charges: &ChargeDistribution,
    model: &SphereModel,
    methods: Vec<String>,
    escalate: bool,
) -> PyResult<Vec<EnergyResult>> {
    let solver = if escalate {
        SphereSolver::escalated(&charges.inner, model.inner)
    } else {
        SphereSolver::new(&charges.inner, model.inner)
    }
    .map_err(err)?;
    methods
        .iter()
        .map(|m| {
            solver
                .energy(method(m)?)
                .map(EnergyResult::from)
                .map_err(err)
        })
        .collect()
}

/// Kirkwood reaction energy (kcal/mol) between two charges `(x, y, z, q)`.
#[pyfunction]
fn pair_interaction(
    a: (f64, f64, f64, f64),
    b: (f64, f64, f64, f64),
    model: &SphereModel,
) -> PyResult<f64> {
    let c = |(x, y, z, q): (f64, f64, f64, f64)| Charge::new(Vector3::new(x, y, z), q).map_err(err);
    sphere::pair_interaction_kirkwood(&c(a)?, &c(b)?, &model.inner).map_err(err)
}

/// Source moments `E_nm` as `[(n, m, complex), ...]`.
#[pyfunction]
fn source_moments<'py>(
    py: Python<'py>,
    charges: &ChargeDistribution,
    n_max: usize,
) -> PyResult<Vec<(usize, i64, Bound<'py, PyComplex>)>> {
    let e = harmonics::source_moments(&charges.inner, n_max).map_err(err)?;
    Ok(e.iter()
        .map(|((n, m), c)| (n, m, PyComplex::from_doubles(py, c.re, c.im)))
        .collect())
}

/// Unnormalised associated Legendre function `P_n^m(x)`, no Condon-Shortley phase.
#[pyfunction]
fn assoc_legendre(n: usize, m: usize, x: f64) -> PyResult<f64> {
    harmonics::assoc_legendre(n, m, x).map_err(err)
}

/// Triangulated closed surface.
#[pyclass(module = "bibee_py", frozen)]
pub struct Surface {
    inner: PanelSurface,
}

#[pymethods]
impl Surface {
    #[staticmethod]
    fn icosphere(radius: f64, level: u32) -> PyResult<Self> {
        let inner = PanelSurface::icosphere(radius, level).map_err(err)?;
        Ok(Self { inner })
    }

    /// `format` is `"off"` or `"msms"`; guessed from the extension when omitted.
    #[staticmethod]
    #[pyo3(signature = (path, format = None))]
    fn load(path: PathBuf, format: Option<&str>) -> PyResult<Self> {
        let format = match format {
            Some(f) => f.parse::<MeshFormat>().map_err(err)?,
            None if path
                .extension()
                .is_some_and(|e| e.eq_ignore_ascii_case("off")) =>
            {
                MeshFormat::Off
            }
            None => MeshFormat::Msms,
        };
        let inner = bibee::bem::load_mesh(&path, format).map_err(err)?;
        Ok(Self { inner })
    }

    #[getter]
    fn total_area(&self) -> f64 {
        self.inner.total_area()
    }

    #[getter]
    fn volume(&self) -> f64 {
        self.inner.signed_volume()
    }

    fn contains(&self, point: (f64, f64, f64)) -> bool {
        self.inner
            .contains(&Vector3::new(point.0, point.1, point.2))
    }

    fn to_off(&self) -> String {
        self.inner.to_off()
    }

    fn __len__(&self) -> usize {
        self.inner.len()
    }
}

/// Boundary-element solver; the dense operator is built on the first exact solve and reused.
#[pyclass(module = "bibee_py", name = "BemSolver")]
pub struct PyBemSolver {
    inner: BemSolver,
}

#[pymethods]
impl PyBemSolver {
    #[new]
    #[pyo3(signature = (surface, solver = "auto", tol = 1e-8, max_iter = 500, restart = 50))]
    fn new(
        surface: &Surface,
        solver: &str,
        tol: f64,
        max_iter: usize,
        restart: usize,
    ) -> PyResult<Self> {
        let kind = match solver {
            "auto" => SolverKind::Auto,
            "direct" => SolverKind::Direct,
            "iterative" => SolverKind::Iterative,
            other => return Err(BibeeError::new_err(format!("unknown solver '{other}'"))),
        };
        let options = SolverOptions {
            kind,
            tolerance: tol,
            restart,
            max_iterations: max_iter,
            ..Default::default()
        };
        Ok(Self {
            inner: BemSolver::new(surface.inner.clone(), options),
        })
    }

    /// Methods: `bem-exact`, `bem-cfa`, `bem-p`, `bem-lambda(λ)`, `bem-m(λ)`.
    #[pyo3(signature = (charges, eps_in, eps_out, method = "bem-exact"))]
    fn energy(
        &mut self,
        py: Python<'_>,
        charges: &ChargeDistribution,
        eps_in: f64,
        eps_out: f64,
        method: &str,
    ) -> PyResult<EnergyResult> {
        let eps = DielectricPair::new(eps_in, eps_out).map_err(err)?;
        let m = self::method(method)?;
        let dist = charges.inner.clone();
        let inner = &mut self.inner;
        py.detach(|| inner.energy(&dist, eps, m))
            .map(EnergyResult::from)
            .map_err(err)
    }
}

/// Configuration `index` of the random ensemble `seed`; `config` is TOML text.
#[pyfunction]
#[pyo3(signature = (seed, index, config = None))]
fn random_sphere_config(
    seed: u64,
    index: usize,
    config: Option<&str>,
) -> PyResult<ChargeDistribution> {
    let cfg = self::config(config)?;
    let inner = experiments::random_sphere_config(seed, index, &cfg).map_err(err)?;
    Ok(ChargeDistribution { inner })
}

/// Compare methods against Kirkwood over the random ensemble; returns the report as a dict.
#[pyfunction]
#[pyo3(signature = (config = None))]
fn run_comparison<'py>(py: Python<'py>, config: Option<&str>) -> PyResult<Bound<'py, PyAny>> {
    let cfg = self::config(config)?;
    let report = py
        .detach(|| experiments::run_comparison(&cfg))
        .map_err(err)?;
    to_python(py, &report)
}

/// BIBEE/M over the configured λ grid; the dict has `report` and `best_lambda`.
#[pyfunction]
#[pyo3(signature = (config = None))]
fn lambda_sweep<'py>(py: Python<'py>, config: Option<&str>) -> PyResult<Bound<'py, PyAny>> {
    let cfg = self::config(config)?;
    let sweep = py.detach(|| experiments::lambda_sweep(&cfg)).map_err(err)?;
    to_python(py, &sweep)
}

/// Default experiment configuration as TOML text.
#[pyfunction]
fn default_config() -> String {
    ExperimentConfig::default().to_toml()
}

#[pymodule]
fn bibee_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add("BibeeError", m.py().get_type::<BibeeError>())?;
    m.add("COULOMB_CONSTANT", bibee::COULOMB_CONSTANT)?;
    m.add_class::<ChargeDistribution>()?;
    m.add_class::<SphereModel>()?;
    m.add_class::<EnergyResult>()?;
    m.add_class::<Surface>()?;
    m.add_class::<PyBemSolver>()?;
    m.add_function(wrap_pyfunction!(sphere_energies, m)?)?;
    m.add_function(wrap_pyfunction!(pair_interaction, m)?)?;
    m.add_function(wrap_pyfunction!(source_moments, m)?)?;
    m.add_function(wrap_pyfunction!(assoc_legendre, m)?)?;
    m.add_function(wrap_pyfunction!(random_sphere_config, m)?)?;
    m.add_function(wrap_pyfunction!(run_comparison, m)?)?;
    m.add_function(wrap_pyfunction!(lambda_sweep, m)?)?;
    m.add_function(wrap_pyfunction!(default_config, m)?)?;
    Ok(())
}
