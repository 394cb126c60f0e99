//! Fixed-step RK4 and adaptive embedded RK5(4) integration of the planar and
//! full systems, with simplex guarding, convergence detection against the
//! closed-form equilibria, and trajectory recording.
//!
//! The adaptive method is the Dormand–Prince 5(4) pair; its tableau is fixed
//! below. Step control uses safety factor 0.9 with the growth factor clamped
//! to [0.2, 5.0].

use thiserror::Error;

use crate::equilibria::compute_endemic;
use crate::model::{full_rhs, planar_rhs, project_to_simplex, FullState, Params, PlanarState};

/// Stepping scheme plus its tuning knobs.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Method {
    Rk4Fixed {
        step: f64,
    },
    Rk45Adaptive {
        abs_tol: f64,
        rel_tol: f64,
        min_step: f64,
        max_step: f64,
    },
}

impl Default for Method {
    /// `max_step` is capped so that `h * lambda` stays inside the pair's real
    /// stability interval (about 3.3) for per-capita rates up to ~2/time;
    /// larger steps let fast modes pump roundoff-scale wobble near the
    /// boundary equilibrium that the simplex guard then trips over.
    fn default() -> Self {
        Method::Rk45Adaptive { abs_tol: 1e-9, rel_tol: 1e-9, min_step: 1e-12, max_step: 1.5 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IntegratorConfig {
    pub method: Method,
    pub t_max: f64,
    /// A trajectory is converged once it stays within this sup-norm radius of
    /// one equilibrium for `convergence_window` consecutive accepted steps.
    pub convergence_radius: f64,
    pub convergence_window: usize,
    /// Simplex guard tolerance passed to `project_to_simplex`.
    pub guard_tol: f64,
}

impl Default for IntegratorConfig {
    fn default() -> Self {
        IntegratorConfig {
            method: Method::default(),
            t_max: 2000.0,
            convergence_radius: 1e-8,
            convergence_window: 10,
            guard_tol: crate::model::DEFAULT_GUARD_TOL,
        }
    }
}

impl IntegratorConfig {
    pub fn validate(&self) -> Result<(), IntegrateError> {
        fn req(ok: bool, what: &str) -> Result<(), IntegrateError> {
            if ok {
                Ok(())
            } else {
                Err(IntegrateError::InvalidConfig(what.to_string()))
            }
        }
        match self.method {
            Method::Rk4Fixed { step } => req(step.is_finite() && step > 0.0, "step > 0")?,
            Method::Rk45Adaptive { abs_tol, rel_tol, min_step, max_step } => {
                req(abs_tol.is_finite() && abs_tol > 0.0, "abs_tol > 0")?;
                req(rel_tol.is_finite() && rel_tol > 0.0, "rel_tol > 0")?;
                req(min_step.is_finite() && min_step > 0.0, "min_step > 0")?;
                req(max_step.is_finite() && max_step > min_step, "max_step > min_step")?;
            }
        }
        req(self.t_max.is_finite() && self.t_max > 0.0, "t_max > 0")?;
        req(self.convergence_radius > 0.0, "convergence_radius > 0")?;
        req(self.convergence_window >= 1, "convergence_window >= 1")?;
        req(self.guard_tol > 0.0, "guard_tol > 0")?;
        Ok(())
    }
}

/// Why a trajectory ended.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TerminalReason {
    TimeLimit,
    ConvergedToPoint,
    /// The state left the simplex beyond the guard tolerance; the trajectory
    /// is truncated at the last good state.
    DomainEscape,
}

impl TerminalReason {
    pub fn as_str(&self) -> &'static str {
        match self {
            TerminalReason::TimeLimit => "time_limit",
            TerminalReason::ConvergedToPoint => "converged_to_point",
            TerminalReason::DomainEscape => "domain_escape",
        }
    }
}

/// Recorded states at strictly increasing times, one entry per accepted step
/// plus the initial state.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory<S> {
    pub times: Vec<f64>,
    pub states: Vec<S>,
    pub terminal_reason: TerminalReason,
    /// The equilibrium the convergence detector locked onto, when it did.
    pub converged_to: Option<S>,
}

impl<S: Copy> Trajectory<S> {
    pub fn final_time(&self) -> f64 {
        *self.times.last().expect("trajectories are never empty")
    }

    pub fn final_state(&self) -> S {
        *self.states.last().expect("trajectories are never empty")
    }
}

#[derive(Debug, Clone, Error, PartialEq)]
pub enum IntegrateError {
    /// The adaptive controller pushed the step below its floor: the problem is
    /// stiffer than this pair handles, or something is wrong.
    #[error("adaptive step underflow at t = {t}: h = {h:.3e} < min_step = {min_step:.3e}")]
    StepUnderflow { t: f64, h: f64, min_step: f64 },
    #[error("invalid integrator config: {0}")]
    InvalidConfig(String),
    #[error("initial state is outside the domain: {0}")]
    StartOutsideDomain(String),
}

/// One classical fourth-order Runge–Kutta step of `x' = f(x)`.
pub fn rk4_step_raw<const N: usize, F>(f: &F, x: [f64; N], h: f64) -> [f64; N]
where
    F: Fn(&[f64; N]) -> [f64; N],
{
    let k1 = f(&x);
    let k2 = f(&axpy(&x, &k1, 0.5 * h));
    let k3 = f(&axpy(&x, &k2, 0.5 * h));
    let k4 = f(&axpy(&x, &k3, h));
    let mut out = x;
    for d in 0..N {
        out[d] += h / 6.0 * (k1[d] + 2.0 * k2[d] + 2.0 * k3[d] + k4[d]);
    }
    out
}

fn axpy<const N: usize>(x: &[f64; N], k: &[f64; N], h: f64) -> [f64; N] {
    let mut out = *x;
    for d in 0..N {
        out[d] += h * k[d];
    }
    out
}

fn sup_norm<const N: usize>(x: &[f64; N]) -> f64 {
    x.iter().fold(0.0f64, |m, v| m.max(v.abs()))
}

fn sup_dist<const N: usize>(a: &[f64; N], b: &[f64; N]) -> f64 {
    let mut m = 0.0f64;
    for d in 0..N {
        m = m.max((a[d] - b[d]).abs());
    }
    m
}

// Dormand–Prince 5(4) tableau. The fields here are autonomous, so the stage
// nodes never enter; the seventh stage evaluates the field at the fifth-order
// solution and its weight appears only in the error estimate.
const DP_A: [[f64; 6]; 7] = [
    [0.0, 0.0, 0.0, 0.0, 0.0, 0.0],
    [0.2, 0.0, 0.0, 0.0, 0.0, 0.0],
    [3.0 / 40.0, 9.0 / 40.0, 0.0, 0.0, 0.0, 0.0],
    [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0, 0.0, 0.0, 0.0],
    [19372.0 / 6561.0, -25360.0 / 2187.0, 64448.0 / 6561.0, -212.0 / 729.0, 0.0, 0.0],
    [9017.0 / 3168.0, -355.0 / 33.0, 46732.0 / 5247.0, 49.0 / 176.0, -5103.0 / 18656.0, 0.0],
    [35.0 / 384.0, 0.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0],
];
const DP_B: [f64; 7] = [35.0 / 384.0, 0.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0, 0.0];
const DP_E: [f64; 7] = [
    71.0 / 57600.0,
    0.0,
    -71.0 / 16695.0,
    71.0 / 1920.0,
    -17253.0 / 339200.0,
    22.0 / 525.0,
    -1.0 / 40.0,
];

const SAFETY: f64 = 0.9;
const SHRINK_FLOOR: f64 = 0.2;
const GROWTH_CAP: f64 = 5.0;

/// One embedded Dormand–Prince 5(4) step. Returns the fifth-order solution,
/// the sup-norm error estimate, and the controller's suggested next step. The
/// step is acceptable when the estimate is at most `abs_tol + rel_tol * |x|`.
pub fn rk45_step_raw<const N: usize, F>(
    f: &F,
    x: [f64; N],
    h: f64,
    abs_tol: f64,
    rel_tol: f64,
) -> ([f64; N], f64, f64)
where
    F: Fn(&[f64; N]) -> [f64; N],
{
    let mut k = [[0.0f64; N]; 7];
    k[0] = f(&x);
    for stage in 1..7 {
        let mut y = x;
        for (j, kj) in k.iter().enumerate().take(stage) {
            let a = DP_A[stage][j];
            if a != 0.0 {
                for d in 0..N {
                    y[d] += h * a * kj[d];
                }
            }
        }
        k[stage] = f(&y);
    }

    let mut x_new = x;
    for (j, kj) in k.iter().enumerate() {
        if DP_B[j] != 0.0 {
            for d in 0..N {
                x_new[d] += h * DP_B[j] * kj[d];
            }
        }
    }
    let mut err = [0.0f64; N];
    for (j, kj) in k.iter().enumerate() {
        if DP_E[j] != 0.0 {
            for d in 0..N {
                err[d] += h * DP_E[j] * kj[d];
            }
        }
    }
    let err_norm = sup_norm(&err);
    let scale = abs_tol + rel_tol * sup_norm(&x).max(sup_norm(&x_new));
    let factor = if err_norm == 0.0 {
        GROWTH_CAP
    } else {
        (SAFETY * (scale / err_norm).powf(0.2)).clamp(SHRINK_FLOOR, GROWTH_CAP)
    };
    (x_new, err_norm, h * factor)
}

struct EngineRun<const N: usize> {
    times: Vec<f64>,
    states: Vec<[f64; N]>,
    reason: TerminalReason,
    converged_to: Option<[f64; N]>,
}

/// Shared stepping loop. The guard repairs roundoff-sized excursions and
/// signals genuine escapes; convergence is a streak of accepted steps near one
/// fixed target.
fn run_engine<const N: usize, F, G>(
    x0: [f64; N],
    rhs: &F,
    guard: &G,
    targets: &[[f64; N]],
    cfg: &IntegratorConfig,
) -> Result<EngineRun<N>, IntegrateError>
where
    F: Fn(&[f64; N]) -> [f64; N],
    G: Fn(&[f64; N]) -> Result<[f64; N], String>,
{
    cfg.validate()?;
    let x0 = guard(&x0).map_err(IntegrateError::StartOutsideDomain)?;

    let mut times = vec![0.0];
    let mut states = vec![x0];
    let mut x = x0;
    let mut t = 0.0f64;
    let mut streak_target: Option<usize> = None;
    let mut streak = 0usize;

    let mut h = match cfg.method {
        Method::Rk4Fixed { step } => step,
        Method::Rk45Adaptive { max_step, min_step, .. } => (0.01 * cfg.t_max).clamp(min_step, max_step),
    };

    let time_eps = 1e-12 * cfg.t_max;
    loop {
        if t >= cfg.t_max - time_eps {
            return Ok(EngineRun { times, states, reason: TerminalReason::TimeLimit, converged_to: None });
        }
        let h_eff = h.min(cfg.t_max - t);
        let (candidate, accepted, h_next) = match cfg.method {
            Method::Rk4Fixed { .. } => (rk4_step_raw(rhs, x, h_eff), true, h),
            Method::Rk45Adaptive { abs_tol, rel_tol, min_step, max_step } => {
                let (x_new, err, h_sugg) = rk45_step_raw(rhs, x, h_eff, abs_tol, rel_tol);
                let scale = abs_tol + rel_tol * sup_norm(&x).max(sup_norm(&x_new));
                let ok = err <= scale;
                let h_clamped = h_sugg.clamp(min_step, max_step);
                if !ok && h_clamped <= min_step && h_eff <= min_step {
                    return Err(IntegrateError::StepUnderflow { t, h: h_eff, min_step });
                }
                (x_new, ok, h_clamped)
            }
        };
        h = h_next;
        if !accepted {
            continue;
        }
        let guarded = match guard(&candidate) {
            Ok(g) => g,
            Err(_) => {
                return Ok(EngineRun {
                    times,
                    states,
                    reason: TerminalReason::DomainEscape,
                    converged_to: None,
                });
            }
        };
        t += h_eff;
        x = guarded;
        times.push(t);
        states.push(x);

        // Convergence: the streak must stay on a single target.
        let near = targets
            .iter()
            .enumerate()
            .filter(|(_, tgt)| sup_dist(&x, tgt) <= cfg.convergence_radius)
            .min_by(|(_, a), (_, b)| {
                sup_dist(&x, a).partial_cmp(&sup_dist(&x, b)).expect("distances are finite")
            })
            .map(|(idx, _)| idx);
        match near {
            Some(idx) if streak_target == Some(idx) => streak += 1,
            Some(idx) => {
                streak_target = Some(idx);
                streak = 1;
            }
            None => {
                streak_target = None;
                streak = 0;
            }
        }
        if streak >= cfg.convergence_window {
            return Ok(EngineRun {
                times,
                states,
                reason: TerminalReason::ConvergedToPoint,
                converged_to: streak_target.map(|idx| targets[idx]),
            });
        }
    }
}

/// Equilibria the convergence detector watches: the disease-free corner plus
/// the endemic point when it exists.
fn planar_targets(p: &Params) -> Vec<[f64; 2]> {
    let mut targets = vec![[1.0, 0.0]];
    if let Ok(eq) = compute_endemic(p) {
        targets.push([eq.point.s, eq.point.i]);
    }
    targets
}

/// One RK4 step of the planar system.
pub fn rk4_step_planar(x: &PlanarState, p: &Params, h: f64) -> PlanarState {
    let f = |y: &[f64; 2]| {
        let (ds, di) = planar_rhs(&PlanarState::new(y[0], y[1]), p);
        [ds, di]
    };
    let out = rk4_step_raw(&f, [x.s, x.i], h);
    PlanarState::new(out[0], out[1])
}

/// One RK4 step of the full system.
pub fn rk4_step_full(x: &FullState, p: &Params, h: f64) -> FullState {
    let f = |y: &[f64; 3]| {
        let (ds, di, dr) = full_rhs(&FullState::new(y[0], y[1], y[2]), p);
        [ds, di, dr]
    };
    let out = rk4_step_raw(&f, [x.s, x.i, x.r], h);
    FullState::new(out[0], out[1], out[2])
}

/// One embedded 5(4) step of the planar system; returns the new state, the
/// error estimate, and the suggested next step.
pub fn rk45_step_planar(
    x: &PlanarState,
    p: &Params,
    h: f64,
    abs_tol: f64,
    rel_tol: f64,
) -> (PlanarState, f64, f64) {
    let f = |y: &[f64; 2]| {
        let (ds, di) = planar_rhs(&PlanarState::new(y[0], y[1]), p);
        [ds, di]
    };
    let (out, err, h_next) = rk45_step_raw(&f, [x.s, x.i], h, abs_tol, rel_tol);
    (PlanarState::new(out[0], out[1]), err, h_next)
}

/// Integrate the planar system from `x0`.
pub fn integrate_planar(
    x0: &PlanarState,
    p: &Params,
    cfg: &IntegratorConfig,
) -> Result<Trajectory<PlanarState>, IntegrateError> {
    let rhs = |y: &[f64; 2]| {
        let (ds, di) = planar_rhs(&PlanarState::new(y[0], y[1]), p);
        [ds, di]
    };
    let guard_tol = cfg.guard_tol;
    let guard = move |y: &[f64; 2]| {
        project_to_simplex(&PlanarState::new(y[0], y[1]), guard_tol)
            .map(|g| [g.s, g.i])
            .map_err(|e| e.to_string())
    };
    let targets = planar_targets(p);
    let run = run_engine([x0.s, x0.i], &rhs, &guard, &targets, cfg)?;
    Ok(Trajectory {
        times: run.times,
        states: run.states.into_iter().map(|y| PlanarState::new(y[0], y[1])).collect(),
        terminal_reason: run.reason,
        converged_to: run.converged_to.map(|y| PlanarState::new(y[0], y[1])),
    })
}

/// Simplex guard for the full system: clamp roundoff-negative components while
/// preserving the total, and fail when the total itself drifts beyond `tol`.
fn guard_full(y: &[f64; 3], tol: f64) -> Result<[f64; 3], String> {
    let mut out = *y;
    let mut worst: f64 = 0.0;
    for d in 0..3 {
        if out[d] < 0.0 {
            worst = worst.max(-out[d]);
            if -out[d] > tol {
                return Err(format!(
                    "component {d} of ({}, {}, {}) is negative beyond the guard tolerance {tol:.3e}",
                    y[0], y[1], y[2]
                ));
            }
            // Move the deficit into the largest component so the total is untouched.
            let deficit = out[d];
            out[d] = 0.0;
            let big = (0..3).max_by(|a, b| out[*a].partial_cmp(&out[*b]).expect("finite")).expect("non-empty");
            out[big] += deficit;
        }
    }
    let drift = (out[0] + out[1] + out[2] - 1.0).abs();
    if drift > tol {
        return Err(format!(
            "total of ({}, {}, {}) drifted from 1 by {drift:.3e} (guard tolerance {tol:.3e})",
            y[0], y[1], y[2]
        ));
    }
    let _ = worst;
    Ok(out)
}

/// Integrate the full system from `x0`; the component sum stays within the
/// guard tolerance of 1 for the whole run or the trajectory ends in
/// `DomainEscape`.
pub fn integrate_full(
    x0: &FullState,
    p: &Params,
    cfg: &IntegratorConfig,
) -> Result<Trajectory<FullState>, IntegrateError> {
    let rhs = |y: &[f64; 3]| {
        let (ds, di, dr) = full_rhs(&FullState::new(y[0], y[1], y[2]), p);
        [ds, di, dr]
    };
    let guard_tol = cfg.guard_tol;
    let guard = move |y: &[f64; 3]| guard_full(y, guard_tol);
    let targets: Vec<[f64; 3]> = planar_targets(p)
        .into_iter()
        .map(|t| [t[0], t[1], 1.0 - t[0] - t[1]])
        .collect();
    let run = run_engine([x0.s, x0.i, x0.r], &rhs, &guard, &targets, cfg)?;
    Ok(Trajectory {
        times: run.times,
        states: run.states.into_iter().map(|y| FullState::new(y[0], y[1], y[2])).collect(),
        terminal_reason: run.reason,
        converged_to: run.converged_to.map(|y| FullState::new(y[0], y[1], y[2])),
    })
}
