//! Model definitions: parameters, incidence functions, the full three-compartment
//! vector field, the reduced planar vector field, and the invariant simplex.
//!
//! All dynamics are expressed in population fractions. `Params::from_raw` is the
//! single place where raw per-capita rates are rescaled by the population size;
//! everything downstream works in fractions only.

use std::fmt;
use std::str::FromStr;

use thiserror::Error;

/// Functional form of the force of infection per susceptible.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum IncidenceKind {
    /// `beta * I` — bilinear mass action.
    MassAction,
    /// `beta * I / (1 + alpha * I)` — saturating.
    HollingII,
    /// `beta * I / (1 + alpha * I^2)` — rises for small I, falls for large I.
    NonMonotone,
}

impl IncidenceKind {
    pub fn as_str(&self) -> &'static str {
        match self {
            IncidenceKind::MassAction => "mass_action",
            IncidenceKind::HollingII => "holling_ii",
            IncidenceKind::NonMonotone => "non_monotone",
        }
    }
}

impl fmt::Display for IncidenceKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for IncidenceKind {
    type Err = ValidationError;

    /// Only the three supported kinds parse; anything else is rejected up front
    /// because every downstream stability formula is kind-specific.
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().replace('-', "_").as_str() {
            "mass_action" | "massaction" => Ok(IncidenceKind::MassAction),
            "holling_ii" | "hollingii" | "holling2" | "holling_2" => Ok(IncidenceKind::HollingII),
            "non_monotone" | "nonmonotone" => Ok(IncidenceKind::NonMonotone),
            other => Err(ValidationError(format!(
                "incidence must be one of mass_action, holling_ii, non_monotone (got \"{other}\")"
            ))),
        }
    }
}

/// A parameter set violated one of its invariants; the message names the
/// violated invariant, e.g. `beta > 0`.
#[derive(Debug, Clone, Error, PartialEq, Eq)]
#[error("{0}")]
pub struct ValidationError(pub String);

/// All model rates, already normalized to population fractions.
///
/// `mu1` enters the dynamics only through the birth-balance term and cancels out
/// of both the full and planar systems; it is kept for faithful bookkeeping but
/// never read by the vector fields.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Params {
    /// Transmission rate (1/time), normalized: `beta = N * beta_raw`.
    pub beta: f64,
    /// Inhibition coefficient (dimensionless), normalized: `alpha = N^2 * alpha_raw`.
    pub alpha: f64,
    /// Susceptible mortality (1/time). Unused by the reduced dynamics.
    pub mu1: f64,
    /// Infected mortality (1/time).
    pub mu2: f64,
    /// Recovered mortality (1/time).
    pub mu3: f64,
    /// Recovery rate (1/time).
    pub gamma: f64,
    /// Immunity-loss rate (1/time); 0 for a pure SIR model.
    pub rho: f64,
    /// Population size; used only when converting raw rates.
    pub n_total: f64,
    pub incidence: IncidenceKind,
}

impl Params {
    /// Build a validated parameter set from already-normalized rates.
    #[allow(clippy::too_many_arguments)]
    pub fn new(
        beta: f64,
        alpha: f64,
        mu1: f64,
        mu2: f64,
        mu3: f64,
        gamma: f64,
        rho: f64,
        n_total: f64,
        incidence: IncidenceKind,
    ) -> Result<Self, ValidationError> {
        let p = Params { beta, alpha, mu1, mu2, mu3, gamma, rho, n_total, incidence };
        p.validate()?;
        Ok(p)
    }

    /// SIR shorthand with non-monotone incidence: `rho = mu1 = 0`, `n_total = 1`.
    pub fn sir(beta: f64, alpha: f64, mu2: f64, mu3: f64, gamma: f64) -> Result<Self, ValidationError> {
        Params::new(beta, alpha, 0.0, mu2, mu3, gamma, 0.0, 1.0, IncidenceKind::NonMonotone)
    }

    /// Convert raw (per-individual) rates into the normalized set: the
    /// transmission rate scales by `n_total` and the inhibition coefficient by
    /// `n_total^2`; the per-capita mortality and recovery rates are unchanged.
    #[allow(clippy::too_many_arguments)]
    pub fn from_raw(
        beta_raw: f64,
        alpha_raw: f64,
        mu1: f64,
        mu2: f64,
        mu3: f64,
        gamma: f64,
        rho: f64,
        n_total: f64,
        incidence: IncidenceKind,
    ) -> Result<Self, ValidationError> {
        Params::new(
            n_total * beta_raw,
            n_total * n_total * alpha_raw,
            mu1,
            mu2,
            mu3,
            gamma,
            rho,
            n_total,
            incidence,
        )
    }

    /// Check every invariant; the returned message names the first violated one.
    pub fn validate(&self) -> Result<(), ValidationError> {
        fn req(ok: bool, inv: &str) -> Result<(), ValidationError> {
            if ok {
                Ok(())
            } else {
                Err(ValidationError(inv.to_string()))
            }
        }
        req(self.beta.is_finite() && self.beta > 0.0, "beta > 0")?;
        req(self.alpha.is_finite() && self.alpha >= 0.0, "alpha >= 0")?;
        req(self.mu1.is_finite() && self.mu1 >= 0.0, "mu1 >= 0")?;
        req(self.mu2.is_finite() && self.mu2 >= 0.0, "mu2 >= 0")?;
        req(self.mu3.is_finite() && self.mu3 >= 0.0, "mu3 >= 0")?;
        req(self.gamma.is_finite() && self.gamma >= 0.0, "gamma >= 0")?;
        req(self.rho.is_finite() && self.rho >= 0.0, "rho >= 0")?;
        req(self.mu2 + self.gamma > 0.0, "mu2 + gamma > 0")?;
        req(self.mu3 + self.rho > 0.0, "mu3 + rho > 0")?;
        req(self.n_total.is_finite() && self.n_total > 0.0, "n_total > 0")?;
        Ok(())
    }

    /// Effective removed-class turnover `mu3 + rho`; the SIRS system is the SIR
    /// system with this rate in place of `mu3`.
    pub fn mu3_effective(&self) -> f64 {
        self.mu3 + self.rho
    }

    /// Inhibition coefficient as the dynamics see it: mass action behaves as
    /// `alpha = 0` regardless of the stored value.
    pub fn alpha_effective(&self) -> f64 {
        match self.incidence {
            IncidenceKind::MassAction => 0.0,
            _ => self.alpha,
        }
    }

    /// True if the immunity-loss pathway is active.
    pub fn is_sirs(&self) -> bool {
        self.rho > 0.0
    }
}

/// Normalized `(S, I)` point; the state of the reduced planar system.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PlanarState {
    pub s: f64,
    pub i: f64,
}

impl PlanarState {
    pub fn new(s: f64, i: f64) -> Self {
        PlanarState { s, i }
    }

    /// Membership in the simplex `{s >= 0, i >= 0, s + i <= 1}` up to `tol`.
    pub fn in_simplex(&self, tol: f64) -> bool {
        self.simplex_violation() <= tol
    }

    /// How far the point sits outside the simplex (0 when inside).
    pub fn simplex_violation(&self) -> f64 {
        let mut v: f64 = 0.0;
        v = v.max(-self.s);
        v = v.max(-self.i);
        v = v.max(self.s + self.i - 1.0);
        v.max(0.0)
    }

    /// Sup-norm distance to another point.
    pub fn sup_distance(&self, other: &PlanarState) -> f64 {
        (self.s - other.s).abs().max((self.i - other.i).abs())
    }
}

/// Normalized `(S, I, R)` state of the full three-compartment system.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FullState {
    pub s: f64,
    pub i: f64,
    pub r: f64,
}

impl FullState {
    pub fn new(s: f64, i: f64, r: f64) -> Self {
        FullState { s, i, r }
    }

    pub fn sum(&self) -> f64 {
        self.s + self.i + self.r
    }
}

/// The point left the simplex by more than the guard tolerance: either the
/// integrator step was too large or invariance genuinely failed. Callers must
/// abort the run and report.
#[derive(Debug, Clone, Error, PartialEq)]
#[error("state ({s}, {i}) violates the simplex by {violation:.3e} (guard tolerance {tol:.3e})")]
pub struct DomainEscape {
    pub s: f64,
    pub i: f64,
    pub violation: f64,
    pub tol: f64,
}

/// Default guard tolerance separating integrator roundoff from genuine
/// invariance failures.
pub const DEFAULT_GUARD_TOL: f64 = 1e-9;

/// Force of infection per susceptible at infected fraction `i`.
pub fn incidence_force(i: f64, p: &Params) -> f64 {
    match p.incidence {
        IncidenceKind::MassAction => p.beta * i,
        IncidenceKind::HollingII => p.beta * i / (1.0 + p.alpha * i),
        IncidenceKind::NonMonotone => p.beta * i / (1.0 + p.alpha * i * i),
    }
}

/// Derivative of the force of infection with respect to `i`; the kind-specific
/// ingredient of the Jacobian.
pub fn incidence_slope(i: f64, p: &Params) -> f64 {
    match p.incidence {
        IncidenceKind::MassAction => p.beta,
        IncidenceKind::HollingII => {
            let d = 1.0 + p.alpha * i;
            p.beta / (d * d)
        }
        IncidenceKind::NonMonotone => {
            let d = 1.0 + p.alpha * i * i;
            p.beta * (1.0 - p.alpha * i * i) / (d * d)
        }
    }
}

/// Right-hand side of the reduced planar system:
///
/// ```text
/// s' = m3 + (mu2 - m3) i - m3 s - g(i) s
/// i' = g(i) s - (mu2 + gamma) i
/// ```
///
/// where `m3 = mu3 + rho` and `g` is the incidence force. With `rho = 0` this
/// is the SIR reduction; with `rho > 0` it is the SIRS reduction.
pub fn planar_rhs(x: &PlanarState, p: &Params) -> (f64, f64) {
    let m3 = p.mu3_effective();
    let gs = incidence_force(x.i, p) * x.s;
    let ds = m3 + (p.mu2 - m3) * x.i - m3 * x.s - gs;
    let di = gs - (p.mu2 + p.gamma) * x.i;
    (ds, di)
}

/// Right-hand side of the full system in fractions; the three components sum
/// to zero identically, so `s + i + r` is conserved by the exact flow.
pub fn full_rhs(x: &FullState, p: &Params) -> (f64, f64, f64) {
    let m3 = p.mu3_effective();
    let gs = incidence_force(x.i, p) * x.s;
    let ds = -gs + p.mu2 * x.i + m3 * x.r;
    let di = gs - (p.mu2 + p.gamma) * x.i;
    let dr = p.gamma * x.i - m3 * x.r;
    (ds, di, dr)
}

/// Fold the immunity-loss rate into the removed-class mortality: the SIRS
/// system with `(mu3, rho)` has exactly the dynamics of the SIR system with
/// `mu3 + rho` and `rho = 0`.
pub fn sirs_to_sir(p: &Params) -> Params {
    Params { mu3: p.mu3 + p.rho, rho: 0.0, ..*p }
}

/// Clamp roundoff-sized excursions back onto the simplex; the returned point
/// satisfies `s >= 0`, `i >= 0`, `s + i <= 1` exactly. Violations larger than
/// `tol` are not repaired.
pub fn project_to_simplex(x: &PlanarState, tol: f64) -> Result<PlanarState, DomainEscape> {
    let violation = x.simplex_violation();
    if violation > tol {
        return Err(DomainEscape { s: x.s, i: x.i, violation, tol });
    }
    let mut s = x.s.max(0.0);
    let mut i = x.i.max(0.0);
    if s + i > 1.0 {
        let sum = s + i;
        s /= sum;
        i /= sum;
        // The divisions round independently; shave ulps off the larger
        // component until the sum constraint holds exactly.
        while s + i > 1.0 {
            if s >= i {
                s = f64::from_bits(s.to_bits() - 1);
            } else {
                i = f64::from_bits(i.to_bits() - 1);
            }
        }
    }
    Ok(PlanarState { s, i })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn canonical() -> Params {
        Params::sir(0.5, 2.0, 0.1, 0.05, 0.15).unwrap()
    }

    #[test]
    fn incidence_zero_at_zero() {
        for kind in [IncidenceKind::MassAction, IncidenceKind::HollingII, IncidenceKind::NonMonotone] {
            let p = Params { incidence: kind, ..canonical() };
            assert_eq!(incidence_force(0.0, &p), 0.0);
        }
    }

    #[test]
    fn incidence_non_monotone_canonical_value() {
        // beta i / (1 + alpha i^2) at i = 0.5: 0.25 / 1.5 = 1/6
        let g = incidence_force(0.5, &canonical());
        assert!((g - 1.0 / 6.0).abs() < 1e-15, "g = {g}");
    }

    #[test]
    fn incidence_alpha_zero_matches_mass_action() {
        let nm = Params::sir(0.5, 0.0, 0.1, 0.05, 0.15).unwrap();
        let ma = Params { incidence: IncidenceKind::MassAction, ..nm };
        for k in 0..=1000 {
            let i = k as f64 / 1000.0;
            assert_eq!(incidence_force(i, &nm), incidence_force(i, &ma));
        }
    }

    #[test]
    fn incidence_maximizer_near_inverse_sqrt_alpha() {
        // Brute-force scan of g on a dense grid against the stationary point.
        for alpha in [1.0, 4.0, 25.0, 100.0] {
            let p = Params::sir(0.5, alpha, 0.1, 0.05, 0.15).unwrap();
            let n = 1_000_000usize;
            let mut best_i = 0.0;
            let mut best_g = f64::NEG_INFINITY;
            for k in 0..=n {
                let i = k as f64 / n as f64;
                let g = incidence_force(i, &p);
                if g > best_g {
                    best_g = g;
                    best_i = i;
                }
            }
            let expected = 1.0 / alpha.sqrt();
            assert!(
                (best_i - expected).abs() < 2.0 / n as f64 + 1e-9,
                "alpha = {alpha}: argmax {best_i} vs {expected}"
            );
        }
    }

    #[test]
    fn incidence_is_non_monotone_for_alpha_above_one() {
        let p = Params::sir(0.5, 4.0, 0.1, 0.05, 0.15).unwrap();
        let delta = 1e-3;
        let rising = incidence_force(0.1 + delta, &p) > incidence_force(0.1, &p);
        let falling = incidence_force(0.9 + delta, &p) < incidence_force(0.9, &p);
        assert!(rising && falling);
    }

    #[test]
    fn planar_rhs_dfe_is_fixed_point() {
        let (ds, di) = planar_rhs(&PlanarState::new(1.0, 0.0), &canonical());
        assert_eq!(ds, 0.0);
        assert_eq!(di, 0.0);
    }

    #[test]
    fn planar_rhs_canonical_point() {
        let (ds, di) = planar_rhs(&PlanarState::new(0.5, 0.5), &canonical());
        assert!((ds - (-1.0 / 30.0)).abs() < 1e-15, "ds = {ds}");
        assert!((di - (-1.0 / 24.0)).abs() < 1e-15, "di = {di}");
    }

    #[test]
    fn infected_axis_is_invariant() {
        // i = 0 forces di/dt = 0 exactly.
        let p = canonical();
        for k in 0..=100 {
            let s = k as f64 / 100.0;
            let (_, di) = planar_rhs(&PlanarState::new(s, 0.0), &p);
            assert_eq!(di, 0.0);
        }
    }

    #[test]
    fn flow_points_inward_on_boundary() {
        let p = canonical();
        // s = 0 edge: ds/dt >= 0.
        for k in 0..=100 {
            let i = k as f64 / 100.0;
            let (ds, _) = planar_rhs(&PlanarState::new(0.0, i), &p);
            assert!(ds >= 0.0, "ds = {ds} at i = {i}");
        }
        // s + i = 1 edge: d(s+i)/dt <= 0.
        for k in 0..=100 {
            let i = k as f64 / 100.0;
            let (ds, di) = planar_rhs(&PlanarState::new(1.0 - i, i), &p);
            assert!(ds + di <= 1e-16, "d(s+i) = {} at i = {i}", ds + di);
        }
    }

    #[test]
    fn full_rhs_dfe_is_fixed_point() {
        let d = full_rhs(&FullState::new(1.0, 0.0, 0.0), &canonical());
        assert_eq!(d, (0.0, 0.0, 0.0));
    }

    #[test]
    fn sirs_to_sir_maps_rates() {
        let p = Params::new(0.5, 2.0, 0.0, 0.1, 0.05, 0.15, 0.1, 1.0, IncidenceKind::NonMonotone).unwrap();
        let q = sirs_to_sir(&p);
        assert_eq!(q.mu3, 0.15000000000000002);
        assert_eq!(q.rho, 0.0);
        assert_eq!(q.beta, p.beta);
        // rho = 0 is the identity.
        let r = sirs_to_sir(&q);
        assert_eq!(r, q);
    }

    #[test]
    fn project_inside_is_identity() {
        let x = PlanarState::new(0.3, 0.2);
        assert_eq!(project_to_simplex(&x, 1e-9).unwrap(), x);
    }

    #[test]
    fn project_clamps_small_negative() {
        let x = PlanarState::new(-1e-12, 0.2);
        let y = project_to_simplex(&x, 1e-9).unwrap();
        assert_eq!(y, PlanarState::new(0.0, 0.2));
    }

    #[test]
    fn project_rejects_large_violation() {
        let x = PlanarState::new(0.7, 0.4);
        let err = project_to_simplex(&x, 1e-9).unwrap_err();
        assert!((err.violation - 0.1).abs() < 1e-12);
    }

    #[test]
    fn rejects_unknown_incidence() {
        assert!("logistic".parse::<IncidenceKind>().is_err());
        assert_eq!("Non-Monotone".parse::<IncidenceKind>().unwrap(), IncidenceKind::NonMonotone);
    }

    #[test]
    fn validation_names_the_invariant() {
        let err = Params::sir(-1.0, 2.0, 0.1, 0.05, 0.15).unwrap_err();
        assert_eq!(err.0, "beta > 0");
        let err = Params::new(0.5, 2.0, 0.0, 0.0, 0.05, 0.0, 0.0, 1.0, IncidenceKind::NonMonotone).unwrap_err();
        assert_eq!(err.0, "mu2 + gamma > 0");
        let err = Params::new(0.5, 2.0, 0.0, 0.1, 0.0, 0.15, 0.0, 1.0, IncidenceKind::NonMonotone).unwrap_err();
        assert_eq!(err.0, "mu3 + rho > 0");
    }

    #[test]
    fn from_raw_scales_beta_and_alpha() {
        let p = Params::from_raw(0.0005, 2e-6, 0.0, 0.1, 0.05, 0.15, 0.0, 1000.0, IncidenceKind::NonMonotone).unwrap();
        assert!((p.beta - 0.5).abs() < 1e-12);
        assert!((p.alpha - 2.0).abs() < 1e-9);
    }

    proptest! {
        #[test]
        fn full_rhs_conserves_total(
            s in 0.0..1.0f64,
            frac in 0.0..1.0f64,
            beta in 0.01..10.0f64,
            alpha in 0.0..100.0f64,
            mu2 in 0.001..1.0f64,
            mu3 in 0.001..1.0f64,
            gamma in 0.001..1.0f64,
            rho in 0.0..1.0f64,
        ) {
            let p = Params::new(beta, alpha, 0.0, mu2, mu3, gamma, rho, 1.0, IncidenceKind::NonMonotone).unwrap();
            let i = (1.0 - s) * frac;
            let r = 1.0 - s - i;
            let (ds, di, dr) = full_rhs(&FullState::new(s, i, r), &p);
            prop_assert!((ds + di + dr).abs() < 1e-15);
        }

        #[test]
        fn planar_matches_full_with_r_eliminated(
            s in 0.0..1.0f64,
            frac in 0.0..1.0f64,
            beta in 0.01..10.0f64,
            alpha in 0.0..100.0f64,
            mu2 in 0.001..1.0f64,
            mu3 in 0.001..1.0f64,
            gamma in 0.001..1.0f64,
            rho in 0.0..1.0f64,
        ) {
            let p = Params::new(beta, alpha, 0.0, mu2, mu3, gamma, rho, 1.0, IncidenceKind::NonMonotone).unwrap();
            let i = (1.0 - s) * frac;
            let full = full_rhs(&FullState::new(s, i, 1.0 - s - i), &p);
            let planar = planar_rhs(&PlanarState::new(s, i), &p);
            prop_assert!((full.0 - planar.0).abs() < 1e-15);
            prop_assert!((full.1 - planar.1).abs() < 1e-15);
        }

        #[test]
        fn sirs_mapping_preserves_planar_field(
            s in 0.0..1.0f64,
            frac in 0.0..1.0f64,
            beta in 0.01..10.0f64,
            alpha in 0.0..100.0f64,
            mu2 in 0.001..1.0f64,
            mu3 in 0.001..1.0f64,
            gamma in 0.001..1.0f64,
            rho in 0.0..1.0f64,
        ) {
            let p = Params::new(beta, alpha, 0.0, mu2, mu3, gamma, rho, 1.0, IncidenceKind::NonMonotone).unwrap();
            let q = sirs_to_sir(&p);
            let i = (1.0 - s) * frac;
            let x = PlanarState::new(s, i);
            let a = planar_rhs(&x, &p);
            let b = planar_rhs(&x, &q);
            prop_assert!((a.0 - b.0).abs() < 1e-15);
            prop_assert!((a.1 - b.1).abs() < 1e-15);
        }

        #[test]
        fn projection_lands_in_simplex(
            s in -1e-10..1.0f64,
            i in -1e-10..1.0f64,
        ) {
            if let Ok(y) = project_to_simplex(&PlanarState::new(s, i), 1e-9) {
                prop_assert!(y.s >= 0.0 && y.i >= 0.0 && y.s + y.i <= 1.0);
            }
        }
    }
}
