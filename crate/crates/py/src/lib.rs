//! Python bindings for `treepark`.

use pyo3::exceptions::{PyRuntimeError, PyValueError};
use pyo3::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use treepark::config::ConfigFile;
use treepark::dist_solver;
use treepark::error::Error;
use treepark::harness::{self, EstimateReport};
use treepark::model::{self, ArrivalFamily, OffspringDist, Pmf, Regime};
use treepark::parking;
use treepark::series;
use treepark::treegen::{self, CarAssignment, PlaneTree, DEFAULT_SIZE_CAP};

fn to_py(e: Error) -> PyErr {
    match e {
        Error::NoConvergence { .. } | Error::NewtonDiverged { .. } | Error::DegenerateStep { .. } | Error::Io(_) => {
            PyRuntimeError::new_err(e.to_string())
        }
        _ => PyValueError::new_err(e.to_string()),
    }
}

/// Critical offspring law together with degree-dependent arrival laws.
#[pyclass(name = "Model", frozen)]
struct PyModel {
    inner: model::Model,
}

#[pymethods]
impl PyModel {
    /// `arrivals[k]` is the arrival pmf at vertices with `k` children;
    /// degrees beyond the list use `default` (no cars if omitted).
    #[new]
    #[pyo3(signature = (offspring, arrivals, default=None))]
    fn new(offspring: Vec<f64>, arrivals: Vec<Vec<f64>>, default: Option<Vec<f64>>) -> PyResult<Self> {
        let offspring = OffspringDist::new(Pmf::new(offspring).map_err(to_py)?).map_err(to_py)?;
        let laws = arrivals
            .into_iter()
            .map(Pmf::new)
            .collect::<Result<Vec<_>, _>>()
            .map_err(to_py)?;
        let default = match default {
            Some(p) => Pmf::new(p).map_err(to_py)?,
            None => Pmf::point_mass(0),
        };
        let inner = model::Model::new(offspring, ArrivalFamily::new(laws, default)).map_err(to_py)?;
        Ok(Self { inner })
    }

    #[staticmethod]
    #[pyo3(signature = (rate, k_max=60, truncation=30))]
    fn geometric_poisson(rate: f64, k_max: usize, truncation: usize) -> PyResult<Self> {
        let inner = model::Model::geometric_poisson(rate, k_max, truncation).map_err(to_py)?;
        Ok(Self { inner })
    }

    /// Builds the model described by a TOML configuration text.
    #[staticmethod]
    fn from_toml(text: &str) -> PyResult<Self> {
        let cfg = ConfigFile::from_toml_str(text).map_err(to_py)?;
        Ok(Self {
            inner: cfg.build_model().map_err(to_py)?,
        })
    }

    #[getter]
    fn theta(&self) -> f64 {
        self.inner.theta()
    }

    /// `"subcritical"`, `"critical"` or `"supercritical"`.
    #[getter]
    fn regime(&self) -> &'static str {
        match self.inner.classify().regime {
            Regime::Subcritical => "subcritical",
            Regime::Critical => "critical",
            Regime::Supercritical => "supercritical",
        }
    }

    /// `(E_nu_bar[m], E_nu[m], Q, Sigma^2)`.
    #[getter]
    fn moments(&self) -> (f64, f64, f64, f64) {
        let m = self.inner.moments();
        (m.e_sb_m, m.e_m, m.e_q, m.sigma2)
    }

    #[getter]
    fn offspring(&self) -> Vec<f64> {
        self.inner.offspring().probs().to_vec()
    }

    fn t_max(&self) -> f64 {
        self.inner.t_max()
    }

    fn mean_flux_curve(&self, t: f64) -> PyResult<f64> {
        self.inner.mean_flux_curve(t).map_err(to_py)
    }

    fn flux_mean(&self) -> f64 {
        self.inner.theoretical_flux_mean()
    }

    fn dilute(&self, t: f64) -> PyResult<Self> {
        Ok(Self {
            inner: self.inner.dilute(t).map_err(to_py)?,
        })
    }

    fn __repr__(&self) -> String {
        format!("Model(theta={:.6}, regime={})", self.inner.theta(), self.regime())
    }
}

#[pyclass(name = "ParkingResult", frozen, get_all)]
struct PyParkingResult {
    visits: Vec<u64>,
    parked: Vec<bool>,
    edge_flux: Vec<u64>,
    root_flux: u64,
    /// Parked cluster sizes, largest first.
    cluster_sizes: Vec<usize>,
}

#[pymethods]
impl PyParkingResult {
    fn __repr__(&self) -> String {
        let parked = self.parked.iter().filter(|&&p| p).count();
        format!("ParkingResult(root_flux={}, parked={parked})", self.root_flux)
    }
}

/// Parks the cars on the tree given by its depth-first degree sequence.
#[pyfunction]
fn park(degrees: Vec<u32>, cars: Vec<u64>) -> PyResult<PyParkingResult> {
    let tree = PlaneTree::from_degrees(degrees).map_err(to_py)?;
    let r = parking::park(&tree, &CarAssignment::new(cars)).map_err(to_py)?;
    let stats = parking::clusters(&tree, &r.parked).map_err(to_py)?;
    Ok(PyParkingResult {
        visits: r.visits,
        parked: r.parked,
        edge_flux: r.edge_flux,
        root_flux: r.root_flux,
        cluster_sizes: stats.sizes,
    })
}

/// Samples a tree and its cars: unconditioned, or with exactly `n` vertices.
/// Returns `(degrees, cars)`.
#[pyfunction]
#[pyo3(signature = (model, seed, n=None, size_cap=DEFAULT_SIZE_CAP))]
fn sample_instance(model: &PyModel, seed: u64, n: Option<usize>, size_cap: usize) -> PyResult<(Vec<u32>, Vec<u64>)> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let tree = match n {
        Some(n) => treegen::sample_gw_conditioned(&model.inner, n, &mut rng),
        None => treegen::sample_gw(&model.inner, &mut rng, size_cap),
    }
    .map_err(to_py)?;
    let cars = treegen::sample_arrivals(&tree, &model.inner, &mut rng);
    Ok((tree.degrees().to_vec(), cars.counts))
}

/// Law of the number of cars visiting the root, `P(X = 0..truncation)`,
/// with the missing mass as second element.
#[pyfunction]
#[pyo3(signature = (model, truncation=400, max_iters=20_000, tol=1e-13))]
fn iterate_law(model: &PyModel, truncation: usize, max_iters: usize, tol: f64) -> PyResult<(Vec<f64>, f64)> {
    let d = dist_solver::iterate_law(&model.inner, truncation, max_iters, tol).map_err(to_py)?;
    Ok((d.pmf().to_vec(), d.mass_defect()))
}

/// First-order coefficients `(c_-, c_+)` of the two branches.
#[pyfunction]
fn puiseux_c(model: &PyModel) -> PyResult<(f64, f64)> {
    series::puiseux_c(&model.inner).map_err(to_py)
}

/// Coefficients of the lower branch `Y_-(x)` up to `x^order`.
#[pyfunction]
#[pyo3(signature = (model, order=8))]
fn puiseux_branch(model: &PyModel, order: usize) -> PyResult<Vec<f64>> {
    let b = series::puiseux_branch(&model.inner, series::BranchSign::Minus, order).map_err(to_py)?;
    Ok(b.as_series().into_coeffs())
}

/// Coefficients `w_0 .. w_order` of the generating function of the law.
#[pyfunction]
#[pyo3(signature = (model, order=20))]
fn w_series(model: &PyModel, order: usize) -> PyResult<Vec<f64>> {
    Ok(series::w_series(&model.inner, order).map_err(to_py)?.into_coeffs())
}

#[pyclass(name = "Estimate", frozen, get_all)]
struct PyEstimate {
    name: String,
    estimate: f64,
    std_error: f64,
    reps: u64,
    reference: Option<f64>,
    z_score: Option<f64>,
    censored: u64,
}

impl From<EstimateReport> for PyEstimate {
    fn from(r: EstimateReport) -> Self {
        Self {
            name: r.name,
            estimate: r.estimate,
            std_error: r.std_error,
            reps: r.reps,
            reference: r.reference,
            z_score: r.z_score,
            censored: r.censored,
        }
    }
}

#[pymethods]
impl PyEstimate {
    fn __repr__(&self) -> String {
        format!(
            "Estimate({}: {:.6} +/- {:.6}, reference={:?})",
            self.name, self.estimate, self.std_error, self.reference
        )
    }
}

/// Monte Carlo frequency of a parked root in unconditioned trees.
#[pyfunction]
#[pyo3(signature = (model, reps, seed, size_cap=DEFAULT_SIZE_CAP))]
fn estimate_root_parked(py: Python<'_>, model: &PyModel, reps: u64, seed: u64, size_cap: usize) -> PyEstimate {
    py.detach(|| harness::estimate_root_parked(&model.inner, reps, size_cap, seed))
        .into()
}

/// Monte Carlo mean root flux of the model diluted by `t`.
#[pyfunction]
#[pyo3(signature = (model, t, reps, seed, size_cap=DEFAULT_SIZE_CAP))]
fn estimate_mean_flux(
    py: Python<'_>,
    model: &PyModel,
    t: f64,
    reps: u64,
    seed: u64,
    size_cap: usize,
) -> PyResult<PyEstimate> {
    py.detach(|| harness::estimate_mean_flux(&model.inner, t, reps, size_cap, seed))
        .map(Into::into)
        .map_err(to_py)
}

/// Mean of `flux / n` over conditioned trees of size `n`.
#[pyfunction]
fn estimate_flux_lln(py: Python<'_>, model: &PyModel, n: usize, reps: u64, seed: u64) -> PyResult<PyEstimate> {
    py.detach(|| harness::estimate_flux_lln(&model.inner, n, reps, seed, None))
        .map(|(r, _)| r.into())
        .map_err(to_py)
}

#[pymodule]
fn treepark_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyModel>()?;
    m.add_class::<PyParkingResult>()?;
    m.add_class::<PyEstimate>()?;
    m.add_function(wrap_pyfunction!(park, m)?)?;
    m.add_function(wrap_pyfunction!(sample_instance, m)?)?;
    m.add_function(wrap_pyfunction!(iterate_law, m)?)?;
    m.add_function(wrap_pyfunction!(puiseux_c, m)?)?;
    m.add_function(wrap_pyfunction!(puiseux_branch, m)?)?;
    m.add_function(wrap_pyfunction!(w_series, m)?)?;
    m.add_function(wrap_pyfunction!(estimate_root_parked, m)?)?;
    m.add_function(wrap_pyfunction!(estimate_mean_flux, m)?)?;
    m.add_function(wrap_pyfunction!(estimate_flux_lln, m)?)?;
    Ok(())
}
