//! Shared samplers and independent oracles for the integration suites.

#![allow(dead_code)]

use episdyn::equilibria::r0;
use episdyn::model::{planar_rhs, IncidenceKind, Params, PlanarState};
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn log_uniform(rng: &mut ChaCha8Rng, lo: f64, hi: f64) -> f64 {
    rng.gen_range(lo.ln()..hi.ln()).exp()
}

pub fn canonical() -> Params {
    Params::sir(0.5, 2.0, 0.1, 0.05, 0.15).unwrap()
}

/// Broad ensemble: log-uniform beta in [0.01, 10], alpha in [0.1, 100],
/// rates in [0.001, 1]; half the draws are SIRS (rho > 0).
pub fn general_params(rng: &mut ChaCha8Rng) -> Params {
    let beta = log_uniform(rng, 0.01, 10.0);
    let alpha = log_uniform(rng, 0.1, 100.0);
    let mu1 = log_uniform(rng, 0.001, 1.0);
    let mu2 = log_uniform(rng, 0.001, 1.0);
    let mu3 = log_uniform(rng, 0.001, 1.0);
    let gamma = log_uniform(rng, 0.001, 1.0);
    let rho = if rng.gen_bool(0.5) { 0.0 } else { log_uniform(rng, 0.001, 1.0) };
    Params::new(beta, alpha, mu1, mu2, mu3, gamma, rho, 1.0, IncidenceKind::NonMonotone)
        .expect("sampled rates satisfy the invariants")
}

pub fn supercritical_params(rng: &mut ChaCha8Rng) -> Params {
    loop {
        let p = general_params(rng);
        if r0(&p) > 1.0 {
            return p;
        }
    }
}

/// Ensemble for desk-scale convergence runs: rates bounded away from zero so
/// the slow relaxation modes finish well inside the default time horizon.
fn convergent_base(rng: &mut ChaCha8Rng) -> (f64, f64, f64, f64, f64) {
    let alpha = log_uniform(rng, 0.1, 100.0);
    let mu2 = log_uniform(rng, 0.05, 1.0);
    let mu3 = log_uniform(rng, 0.05, 1.0);
    let gamma = log_uniform(rng, 0.05, 1.0);
    let rho = if rng.gen_bool(0.5) { 0.0 } else { log_uniform(rng, 0.05, 1.0) };
    (alpha, mu2, mu3, gamma, rho)
}

/// Subcritical draw with the reproduction number uniform in [0.1, 0.85].
pub fn convergent_subcritical(rng: &mut ChaCha8Rng) -> Params {
    let (alpha, mu2, mu3, gamma, rho) = convergent_base(rng);
    let target_r0 = rng.gen_range(0.1..0.85);
    let beta = target_r0 * (mu2 + gamma);
    Params::new(beta, alpha, 0.0, mu2, mu3, gamma, rho, 1.0, IncidenceKind::NonMonotone)
        .expect("sampled rates satisfy the invariants")
}

/// Supercritical draw with the reproduction number uniform in [1.25, 5].
pub fn convergent_supercritical(rng: &mut ChaCha8Rng) -> Params {
    let (alpha, mu2, mu3, gamma, rho) = convergent_base(rng);
    let target_r0 = rng.gen_range(1.25..5.0);
    let beta = target_r0 * (mu2 + gamma);
    Params::new(beta, alpha, 0.0, mu2, mu3, gamma, rho, 1.0, IncidenceKind::NonMonotone)
        .expect("sampled rates satisfy the invariants")
}

/// The four initial conditions used by the convergence criteria.
pub fn initial_conditions() -> [PlanarState; 4] {
    [
        PlanarState::new(0.9, 0.05),
        PlanarState::new(0.5, 0.25),
        PlanarState::new(0.2, 0.1),
        PlanarState::new(0.35, 0.6),
    ]
}

/// Uniform point of the simplex interior with breathing room `inset`.
pub fn interior_point(rng: &mut ChaCha8Rng, inset: f64) -> PlanarState {
    let s = rng.gen_range(inset..(1.0 - 2.0 * inset));
    let i = rng.gen_range(inset..(1.0 - s - inset));
    PlanarState::new(s, i)
}

/// Central-difference Jacobian of the planar field, the oracle for the
/// analytic matrix.
pub fn fd_jacobian(x: &PlanarState, p: &Params, h: f64) -> [[f64; 2]; 2] {
    let eval = |s: f64, i: f64| planar_rhs(&PlanarState::new(s, i), p);
    let (f1p, f2p) = eval(x.s + h, x.i);
    let (f1m, f2m) = eval(x.s - h, x.i);
    let (g1p, g2p) = eval(x.s, x.i + h);
    let (g1m, g2m) = eval(x.s, x.i - h);
    [
        [(f1p - f1m) / (2.0 * h), (g1p - g1m) / (2.0 * h)],
        [(f2p - f2m) / (2.0 * h), (g2p - g2m) / (2.0 * h)],
    ]
}

/// Positive root of `a x^2 + b x - c = 0` on [0, 1] by bisection; independent
/// oracle for the closed-form endemic coordinate.
pub fn bisect_quadratic_root(a: f64, b: f64, c: f64) -> f64 {
    let f = |x: f64| a * x * x + b * x - c;
    let (mut lo, mut hi) = (0.0f64, 1.0f64);
    assert!(f(lo) <= 0.0 && f(hi) >= 0.0, "root not bracketed");
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if f(mid) < 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

/// Finite-difference divergence of the Dulac-weighted field, the oracle for
/// the closed-form expression.
pub fn fd_dulac_divergence(x: &PlanarState, p: &Params, h: f64) -> f64 {
    let bf = |s: f64, i: f64| {
        let (f1, f2) = planar_rhs(&PlanarState::new(s, i), p);
        let b = (1.0 + p.alpha_effective() * i * i) / (p.beta * s * i);
        (b * f1, b * f2)
    };
    (bf(x.s + h, x.i).0 - bf(x.s - h, x.i).0) / (2.0 * h)
        + (bf(x.s, x.i + h).1 - bf(x.s, x.i - h).1) / (2.0 * h)
}
