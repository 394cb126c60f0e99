//! Python bindings for the episdyn library: parameters, equilibria, stability
//! reports, Lyapunov/Dulac certification scans, and trajectory integration.
//!
//! Planar states cross the boundary as `(s, i)` tuples; trajectories come back
//! with `(s, i, r)` triples (`r = 1 - s - i` for planar runs).

use num_complex::Complex64;
use pyo3::exceptions::{PyRuntimeError, PyValueError};
use pyo3::prelude::*;

use episdyn::certify::{self, CertifyError, ScanQuantity, Verdict};
use episdyn::equilibria::{self, EndemicAbsence, EquilibriaError, EquilibriumKind};
use episdyn::integrate::{self, IntegratorConfig, Method};
use episdyn::model::{self, FullState, IncidenceKind, PlanarState};

fn value_err(msg: impl ToString) -> PyErr {
    PyValueError::new_err(msg.to_string())
}

fn certify_err(err: CertifyError) -> PyErr {
    value_err(err)
}

/// Model parameters, validated on construction.
#[pyclass(name = "Params", frozen, skip_from_py_object)]
#[derive(Clone)]
struct PyParams {
    inner: model::Params,
}

#[pymethods]
impl PyParams {
    #[new]
    #[pyo3(signature = (beta, alpha, mu2, mu3, gamma, rho = 0.0, mu1 = 0.0, n_total = 1.0, incidence = "non_monotone"))]
    #[allow(clippy::too_many_arguments)]
    fn new(
        beta: f64,
        alpha: f64,
        mu2: f64,
        mu3: f64,
        gamma: f64,
        rho: f64,
        mu1: f64,
        n_total: f64,
        incidence: &str,
    ) -> PyResult<Self> {
        let kind: IncidenceKind = incidence.parse().map_err(value_err)?;
        let inner = model::Params::new(beta, alpha, mu1, mu2, mu3, gamma, rho, n_total, kind)
            .map_err(value_err)?;
        Ok(PyParams { inner })
    }

    /// Build from raw per-individual rates: beta scales by n_total, alpha by
    /// n_total squared.
    #[staticmethod]
    #[pyo3(signature = (beta_raw, alpha_raw, mu2, mu3, gamma, n_total, rho = 0.0, mu1 = 0.0, incidence = "non_monotone"))]
    #[allow(clippy::too_many_arguments)]
    fn from_raw(
        beta_raw: f64,
        alpha_raw: f64,
        mu2: f64,
        mu3: f64,
        gamma: f64,
        n_total: f64,
        rho: f64,
        mu1: f64,
        incidence: &str,
    ) -> PyResult<Self> {
        let kind: IncidenceKind = incidence.parse().map_err(value_err)?;
        let inner =
            model::Params::from_raw(beta_raw, alpha_raw, mu1, mu2, mu3, gamma, rho, n_total, kind)
                .map_err(value_err)?;
        Ok(PyParams { inner })
    }

    #[getter]
    fn beta(&self) -> f64 {
        self.inner.beta
    }
    #[getter]
    fn alpha(&self) -> f64 {
        self.inner.alpha
    }
    #[getter]
    fn mu1(&self) -> f64 {
        self.inner.mu1
    }
    #[getter]
    fn mu2(&self) -> f64 {
        self.inner.mu2
    }
    #[getter]
    fn mu3(&self) -> f64 {
        self.inner.mu3
    }
    #[getter]
    fn gamma(&self) -> f64 {
        self.inner.gamma
    }
    #[getter]
    fn rho(&self) -> f64 {
        self.inner.rho
    }
    #[getter]
    fn n_total(&self) -> f64 {
        self.inner.n_total
    }
    #[getter]
    fn incidence(&self) -> &'static str {
        self.inner.incidence.as_str()
    }

    fn mu3_effective(&self) -> f64 {
        self.inner.mu3_effective()
    }

    /// The same parameters with the immunity-loss rate folded into mu3.
    fn to_sir(&self) -> PyParams {
        PyParams { inner: model::sirs_to_sir(&self.inner) }
    }

    fn __repr__(&self) -> String {
        let p = &self.inner;
        format!(
            "Params(beta={}, alpha={}, mu2={}, mu3={}, gamma={}, rho={}, mu1={}, n_total={}, incidence='{}')",
            p.beta, p.alpha, p.mu2, p.mu3, p.gamma, p.rho, p.mu1, p.n_total, p.incidence
        )
    }
}

/// A fixed point with its vector-field residual.
#[pyclass(name = "Equilibrium", get_all, frozen, skip_from_py_object)]
#[derive(Clone)]
struct PyEquilibrium {
    kind: String,
    s: f64,
    i: f64,
    residual: f64,
}

#[pymethods]
impl PyEquilibrium {
    fn __repr__(&self) -> String {
        format!(
            "Equilibrium(kind='{}', s={}, i={}, residual={:e})",
            self.kind, self.s, self.i, self.residual
        )
    }
}

impl PyEquilibrium {
    fn wrap(eq: &equilibria::Equilibrium) -> Self {
        PyEquilibrium {
            kind: eq.kind.as_str().to_string(),
            s: eq.point.s,
            i: eq.point.i,
            residual: eq.residual,
        }
    }

    fn unwrap(&self) -> PyResult<equilibria::Equilibrium> {
        let kind = match self.kind.as_str() {
            "disease_free" => EquilibriumKind::DiseaseFree,
            "endemic" => EquilibriumKind::Endemic,
            other => return Err(value_err(format!("unknown equilibrium kind '{other}'"))),
        };
        Ok(equilibria::Equilibrium {
            kind,
            point: PlanarState::new(self.s, self.i),
            residual: self.residual,
        })
    }
}

/// Jacobian, spectrum, and classification at one equilibrium.
#[pyclass(name = "StabilityReport", get_all, frozen, skip_from_py_object)]
#[derive(Clone)]
struct PyStabilityReport {
    jacobian: ((f64, f64), (f64, f64)),
    eigenvalues: (Complex64, Complex64),
    trace: f64,
    determinant: f64,
    x_quantity: Option<f64>,
    y_quantity: Option<f64>,
    classification: String,
}

#[pymethods]
impl PyStabilityReport {
    fn __repr__(&self) -> String {
        format!(
            "StabilityReport(classification='{}', trace={}, determinant={})",
            self.classification, self.trace, self.determinant
        )
    }
}

impl PyStabilityReport {
    fn wrap(rep: &equilibria::StabilityReport) -> Self {
        PyStabilityReport {
            jacobian: (
                (rep.jacobian[0][0], rep.jacobian[0][1]),
                (rep.jacobian[1][0], rep.jacobian[1][1]),
            ),
            eigenvalues: rep.eigenvalues,
            trace: rep.trace,
            determinant: rep.determinant,
            x_quantity: rep.x_quantity,
            y_quantity: rep.y_quantity,
            classification: rep.classification.as_str().to_string(),
        }
    }
}

/// Verdict and extremum of one certification scan.
#[pyclass(name = "Certificate", get_all, frozen, skip_from_py_object)]
#[derive(Clone)]
struct PyCertificate {
    kind: String,
    verdict: String,
    extremal_value: f64,
    extremal_point: (f64, f64),
    resolution: usize,
    boundary_inset: f64,
    margin: f64,
    points_scanned: usize,
}

#[pymethods]
impl PyCertificate {
    fn certified(&self) -> bool {
        self.verdict == Verdict::Certified.as_str()
    }

    fn __repr__(&self) -> String {
        format!(
            "Certificate(kind='{}', verdict='{}', extremal_value={:e})",
            self.kind, self.verdict, self.extremal_value
        )
    }
}

/// Recorded trajectory; states are `(s, i, r)` triples.
#[pyclass(name = "Trajectory", get_all, frozen, skip_from_py_object)]
#[derive(Clone)]
struct PyTrajectory {
    times: Vec<f64>,
    states: Vec<(f64, f64, f64)>,
    terminal_reason: String,
    converged_to: Option<(f64, f64, f64)>,
}

#[pymethods]
impl PyTrajectory {
    fn final_state(&self) -> (f64, f64, f64) {
        *self.states.last().expect("trajectories are never empty")
    }

    fn final_time(&self) -> f64 {
        *self.times.last().expect("trajectories are never empty")
    }

    fn __len__(&self) -> usize {
        self.times.len()
    }

    fn __repr__(&self) -> String {
        format!(
            "Trajectory({} states, terminal_reason='{}')",
            self.times.len(),
            self.terminal_reason
        )
    }
}

#[allow(clippy::too_many_arguments)]
fn integrator_config(
    t_max: f64,
    method: &str,
    abs_tol: f64,
    rel_tol: f64,
    step: f64,
    convergence_radius: f64,
    convergence_window: usize,
    guard_tol: f64,
) -> PyResult<IntegratorConfig> {
    let defaults = Method::default();
    let method = match method {
        "rk45" => match defaults {
            Method::Rk45Adaptive { min_step, max_step, .. } => {
                Method::Rk45Adaptive { abs_tol, rel_tol, min_step, max_step }
            }
            Method::Rk4Fixed { .. } => unreachable!("default method is adaptive"),
        },
        "rk4" => Method::Rk4Fixed { step },
        other => return Err(value_err(format!("method must be rk45 or rk4 (got '{other}')"))),
    };
    let cfg = IntegratorConfig {
        method,
        t_max,
        convergence_radius,
        convergence_window,
        guard_tol,
    };
    cfg.validate().map_err(value_err)?;
    Ok(cfg)
}

/// Force of infection per susceptible at infected fraction `i`.
#[pyfunction]
fn incidence_force(i: f64, params: &PyParams) -> f64 {
    model::incidence_force(i, &params.inner)
}

/// Right-hand side of the reduced planar system.
#[pyfunction]
fn planar_rhs(s: f64, i: f64, params: &PyParams) -> (f64, f64) {
    model::planar_rhs(&PlanarState::new(s, i), &params.inner)
}

/// Right-hand side of the full three-compartment system.
#[pyfunction]
fn full_rhs(s: f64, i: f64, r: f64, params: &PyParams) -> (f64, f64, f64) {
    model::full_rhs(&FullState::new(s, i, r), &params.inner)
}

/// Basic reproduction number `beta / (mu2 + gamma)`.
#[pyfunction]
fn r0(params: &PyParams) -> f64 {
    equilibria::r0(&params.inner)
}

/// The disease-free equilibrium `(1, 0)`.
#[pyfunction]
fn compute_dfe(params: &PyParams) -> PyEquilibrium {
    PyEquilibrium::wrap(&equilibria::compute_dfe(&params.inner))
}

/// The endemic equilibrium, or `None` below the threshold. Raises ValueError
/// for the saturating incidence, which has no closed form here.
#[pyfunction]
fn compute_endemic(params: &PyParams) -> PyResult<Option<PyEquilibrium>> {
    match equilibria::compute_endemic(&params.inner) {
        Ok(eq) => Ok(Some(PyEquilibrium::wrap(&eq))),
        Err(EndemicAbsence::Subcritical { .. }) | Err(EndemicAbsence::DegenerateMortality { .. }) => {
            Ok(None)
        }
        Err(err @ EndemicAbsence::UnsupportedIncidence(_)) => Err(value_err(err)),
    }
}

/// Analytic Jacobian of the planar field at `(s, i)`.
#[pyfunction]
fn jacobian(s: f64, i: f64, params: &PyParams) -> ((f64, f64), (f64, f64)) {
    let j = equilibria::jacobian(&PlanarState::new(s, i), &params.inner);
    ((j[0][0], j[0][1]), (j[1][0], j[1][1]))
}

/// Eigenvalues of a 2x2 matrix, sorted by real then imaginary part.
#[pyfunction]
fn eigenvalues_2x2(m: ((f64, f64), (f64, f64))) -> (Complex64, Complex64) {
    equilibria::eigenvalues_2x2(&[[m.0 .0, m.0 .1], [m.1 .0, m.1 .1]])
}

/// Stability report for the disease-free equilibrium.
#[pyfunction]
fn classify_dfe(params: &PyParams) -> PyStabilityReport {
    PyStabilityReport::wrap(&equilibria::classify_dfe(&params.inner))
}

/// Stability report for the endemic equilibrium, or `None` below the
/// threshold. A disagreement between the closed-form and assembled trace/det
/// raises RuntimeError.
#[pyfunction]
fn classify_endemic(params: &PyParams) -> PyResult<Option<PyStabilityReport>> {
    match equilibria::classify_endemic(&params.inner) {
        Ok(rep) => Ok(Some(PyStabilityReport::wrap(&rep))),
        Err(EquilibriaError::Absent(EndemicAbsence::Subcritical { .. }))
        | Err(EquilibriaError::Absent(EndemicAbsence::DegenerateMortality { .. })) => Ok(None),
        Err(EquilibriaError::Absent(err @ EndemicAbsence::UnsupportedIncidence(_))) => {
            Err(value_err(err))
        }
        Err(err @ EquilibriaError::FormulaMismatch { .. }) => {
            Err(PyRuntimeError::new_err(err.to_string()))
        }
    }
}

/// Lyapunov function for the disease-free regime: `V = i`.
#[pyfunction]
fn lyapunov_dfe(s: f64, i: f64) -> f64 {
    certify::lyapunov_dfe(&PlanarState::new(s, i))
}

/// Derivative of `V = i` along the flow.
#[pyfunction]
fn lyapunov_dfe_derivative(s: f64, i: f64, params: &PyParams) -> f64 {
    certify::lyapunov_dfe_derivative(&PlanarState::new(s, i), &params.inner)
}

/// Quadratic-plus-Volterra Lyapunov function for the endemic regime.
#[pyfunction]
fn lyapunov_endemic(s: f64, i: f64, params: &PyParams, eq: &PyEquilibrium) -> PyResult<f64> {
    certify::lyapunov_endemic(&PlanarState::new(s, i), &params.inner, &eq.unwrap()?)
        .map_err(certify_err)
}

/// Chain-rule derivative of the endemic Lyapunov function.
#[pyfunction]
fn lyapunov_endemic_derivative(
    s: f64,
    i: f64,
    params: &PyParams,
    eq: &PyEquilibrium,
) -> PyResult<f64> {
    certify::lyapunov_endemic_derivative(&PlanarState::new(s, i), &params.inner, &eq.unwrap()?)
        .map_err(certify_err)
}

/// The explicitly negative-semidefinite factorization of the same derivative.
#[pyfunction]
fn lyapunov_endemic_derivative_factored(
    s: f64,
    i: f64,
    params: &PyParams,
    eq: &PyEquilibrium,
) -> PyResult<f64> {
    Ok(certify::lyapunov_endemic_derivative_factored(
        &PlanarState::new(s, i),
        &params.inner,
        &eq.unwrap()?,
    ))
}

/// Divergence of the Dulac-weighted field at an interior point.
#[pyfunction]
fn dulac_divergence(s: f64, i: f64, params: &PyParams) -> PyResult<f64> {
    certify::dulac_divergence(&PlanarState::new(s, i), &params.inner).map_err(certify_err)
}

/// Grid-scan certification of `dulac_divergence`, `lyapunov_dfe_derivative`,
/// or `lyapunov_endemic_derivative`.
#[pyfunction]
#[pyo3(signature = (quantity, params, resolution = 200, margin = 1e-12, boundary_inset = 1e-3))]
fn certify_grid(
    quantity: &str,
    params: &PyParams,
    resolution: usize,
    margin: f64,
    boundary_inset: f64,
) -> PyResult<PyCertificate> {
    let quantity = match quantity {
        "dulac_divergence" => ScanQuantity::DulacDivergence,
        "lyapunov_dfe_derivative" => ScanQuantity::LyapunovDfeDerivative,
        "lyapunov_endemic_derivative" => ScanQuantity::LyapunovEndemicDerivative,
        other => {
            return Err(value_err(format!(
                "quantity must be dulac_divergence, lyapunov_dfe_derivative, or lyapunov_endemic_derivative (got '{other}')"
            )))
        }
    };
    let cert = certify::certify_grid(quantity, &params.inner, resolution, margin, boundary_inset)
        .map_err(certify_err)?;
    Ok(PyCertificate {
        kind: cert.kind.as_str().to_string(),
        verdict: cert.verdict.as_str().to_string(),
        extremal_value: cert.extremal_value,
        extremal_point: (cert.extremal_point.s, cert.extremal_point.i),
        resolution: cert.grid.resolution,
        boundary_inset: cert.grid.boundary_inset,
        margin: cert.grid.margin,
        points_scanned: cert.grid.points_scanned,
    })
}

/// Maximum absolute gap between the chain-rule derivative and its factored
/// form over a grid, as `(max_abs_delta, (s, i))`.
#[pyfunction]
#[pyo3(signature = (params, resolution = 200, boundary_inset = 1e-3))]
fn factored_form_discrepancy(
    params: &PyParams,
    resolution: usize,
    boundary_inset: f64,
) -> PyResult<(f64, (f64, f64))> {
    let rep = certify::factored_form_discrepancy(&params.inner, resolution, boundary_inset)
        .map_err(certify_err)?;
    Ok((rep.max_abs_delta, (rep.at.s, rep.at.i)))
}

/// Integrate the planar system from `(s, i)`; the returned states carry
/// `r = 1 - s - i`.
#[pyfunction]
#[pyo3(signature = (s, i, params, t_max = 2000.0, method = "rk45", abs_tol = 1e-9, rel_tol = 1e-9, step = 0.05, convergence_radius = 1e-8, convergence_window = 10, guard_tol = 1e-9))]
#[allow(clippy::too_many_arguments)]
fn integrate_planar(
    s: f64,
    i: f64,
    params: &PyParams,
    t_max: f64,
    method: &str,
    abs_tol: f64,
    rel_tol: f64,
    step: f64,
    convergence_radius: f64,
    convergence_window: usize,
    guard_tol: f64,
) -> PyResult<PyTrajectory> {
    let cfg = integrator_config(
        t_max,
        method,
        abs_tol,
        rel_tol,
        step,
        convergence_radius,
        convergence_window,
        guard_tol,
    )?;
    let tr = integrate::integrate_planar(&PlanarState::new(s, i), &params.inner, &cfg)
        .map_err(|e| PyRuntimeError::new_err(e.to_string()))?;
    Ok(PyTrajectory {
        times: tr.times,
        states: tr.states.iter().map(|x| (x.s, x.i, 1.0 - x.s - x.i)).collect(),
        terminal_reason: tr.terminal_reason.as_str().to_string(),
        converged_to: tr.converged_to.map(|x| (x.s, x.i, 1.0 - x.s - x.i)),
    })
}

/// Integrate the full three-compartment system from `(s, i, r)`.
#[pyfunction]
#[pyo3(signature = (s, i, r, params, t_max = 2000.0, method = "rk45", abs_tol = 1e-9, rel_tol = 1e-9, step = 0.05, convergence_radius = 1e-8, convergence_window = 10, guard_tol = 1e-9))]
#[allow(clippy::too_many_arguments)]
fn integrate_full(
    s: f64,
    i: f64,
    r: f64,
    params: &PyParams,
    t_max: f64,
    method: &str,
    abs_tol: f64,
    rel_tol: f64,
    step: f64,
    convergence_radius: f64,
    convergence_window: usize,
    guard_tol: f64,
) -> PyResult<PyTrajectory> {
    let cfg = integrator_config(
        t_max,
        method,
        abs_tol,
        rel_tol,
        step,
        convergence_radius,
        convergence_window,
        guard_tol,
    )?;
    let tr = integrate::integrate_full(&FullState::new(s, i, r), &params.inner, &cfg)
        .map_err(|e| PyRuntimeError::new_err(e.to_string()))?;
    Ok(PyTrajectory {
        times: tr.times,
        states: tr.states.iter().map(|x| (x.s, x.i, x.r)).collect(),
        terminal_reason: tr.terminal_reason.as_str().to_string(),
        converged_to: tr.converged_to.map(|x| (x.s, x.i, x.r)),
    })
}

#[pymodule]
fn episdyn_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyParams>()?;
    m.add_class::<PyEquilibrium>()?;
    m.add_class::<PyStabilityReport>()?;
    m.add_class::<PyCertificate>()?;
    m.add_class::<PyTrajectory>()?;
    m.add_function(wrap_pyfunction!(incidence_force, m)?)?;
    m.add_function(wrap_pyfunction!(planar_rhs, m)?)?;
    m.add_function(wrap_pyfunction!(full_rhs, m)?)?;
    m.add_function(wrap_pyfunction!(r0, m)?)?;
    m.add_function(wrap_pyfunction!(compute_dfe, m)?)?;
    m.add_function(wrap_pyfunction!(compute_endemic, m)?)?;
    m.add_function(wrap_pyfunction!(jacobian, m)?)?;
    m.add_function(wrap_pyfunction!(eigenvalues_2x2, m)?)?;
    m.add_function(wrap_pyfunction!(classify_dfe, m)?)?;
    m.add_function(wrap_pyfunction!(classify_endemic, m)?)?;
    m.add_function(wrap_pyfunction!(lyapunov_dfe, m)?)?;
    m.add_function(wrap_pyfunction!(lyapunov_dfe_derivative, m)?)?;
    m.add_function(wrap_pyfunction!(lyapunov_endemic, m)?)?;
    m.add_function(wrap_pyfunction!(lyapunov_endemic_derivative, m)?)?;
    m.add_function(wrap_pyfunction!(lyapunov_endemic_derivative_factored, m)?)?;
    m.add_function(wrap_pyfunction!(dulac_divergence, m)?)?;
    m.add_function(wrap_pyfunction!(certify_grid, m)?)?;
    m.add_function(wrap_pyfunction!(factored_form_discrepancy, m)?)?;
    m.add_function(wrap_pyfunction!(integrate_planar, m)?)?;
    m.add_function(wrap_pyfunction!(integrate_full, m)?)?;
    Ok(())
}
