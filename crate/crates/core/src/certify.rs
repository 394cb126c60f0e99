//! Numerical global-stability evidence: Lyapunov function values and
//! derivatives for both regimes, the Dulac-weighted divergence that excludes
//! limit cycles, and deterministic grid scans that turn pointwise sign claims
//! into certificates.

use std::fmt;

use thiserror::Error;

use crate::equilibria::{compute_endemic, r0, Equilibrium, EquilibriumKind};
use crate::model::{planar_rhs, IncidenceKind, Params, PlanarState};

/// Verdicts within `margin` of zero are inconclusive; this separates roundoff
/// from genuine sign changes.
pub const DEFAULT_MARGIN: f64 = 1e-12;

/// Scans stay this far from the simplex boundary, where the Dulac weight and
/// the logarithmic Lyapunov term blow up.
pub const DEFAULT_BOUNDARY_INSET: f64 = 1e-3;

pub const DEFAULT_SCAN_RESOLUTION: usize = 200;

/// The endemic Lyapunov derivative is legitimately zero at the equilibrium;
/// scans exclude a ball of this radius around it.
pub const ENDEMIC_EXCLUSION_RADIUS: f64 = 1e-8;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CertificateKind {
    DulacNoLimitCycle,
    LyapunovDfe,
    LyapunovEndemic,
}

impl CertificateKind {
    pub fn as_str(&self) -> &'static str {
        match self {
            CertificateKind::DulacNoLimitCycle => "dulac_no_limit_cycle",
            CertificateKind::LyapunovDfe => "lyapunov_dfe",
            CertificateKind::LyapunovEndemic => "lyapunov_endemic",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Verdict {
    Certified,
    CounterexampleFound,
    Inconclusive,
}

impl Verdict {
    pub fn as_str(&self) -> &'static str {
        match self {
            Verdict::Certified => "certified",
            Verdict::CounterexampleFound => "counterexample_found",
            Verdict::Inconclusive => "inconclusive",
        }
    }
}

impl fmt::Display for Verdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Which scanned quantity a certificate is about.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ScanQuantity {
    DulacDivergence,
    LyapunovDfeDerivative,
    LyapunovEndemicDerivative,
}

/// Resolution and margins a scan ran with.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridSpec {
    pub resolution: usize,
    pub boundary_inset: f64,
    pub margin: f64,
    pub points_scanned: usize,
}

/// Outcome of one grid scan: the maximum of the scanned quantity, where it was
/// attained, and the verdict it implies. `Certified` iff the maximum is below
/// `-margin`, `CounterexampleFound` iff above `+margin`, else `Inconclusive`.
#[derive(Debug, Clone, PartialEq)]
pub struct Certificate {
    pub kind: CertificateKind,
    pub verdict: Verdict,
    pub extremal_value: f64,
    pub extremal_point: PlanarState,
    pub grid: GridSpec,
    /// Parameter echo for the report writer.
    pub params: Params,
}

impl Certificate {
    /// Flat `key = value` text block consumed by the report writer.
    pub fn to_kv_block(&self) -> String {
        let p = &self.params;
        format!(
            "kind = {}\nverdict = {}\nextremal_value = {}\nextremal_s = {}\nextremal_i = {}\n\
             resolution = {}\nboundary_inset = {}\nmargin = {}\npoints_scanned = {}\n\
             beta = {}\nalpha = {}\nmu1 = {}\nmu2 = {}\nmu3 = {}\ngamma = {}\nrho = {}\n\
             n_total = {}\nincidence = {}\n",
            self.kind.as_str(),
            self.verdict,
            self.extremal_value,
            self.extremal_point.s,
            self.extremal_point.i,
            self.grid.resolution,
            self.grid.boundary_inset,
            self.grid.margin,
            self.grid.points_scanned,
            p.beta, p.alpha, p.mu1, p.mu2, p.mu3, p.gamma, p.rho, p.n_total, p.incidence,
        )
    }
}

impl fmt::Display for Certificate {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.to_kv_block())
    }
}

#[derive(Debug, Clone, Error, PartialEq)]
pub enum CertifyError {
    /// The quantity is undefined at the requested point (boundary excluded by
    /// construction).
    #[error("point ({s}, {i}) lies outside the open domain of this quantity")]
    DomainError { s: f64, i: f64 },
    #[error("precondition violated: {0}")]
    PreconditionViolated(String),
    /// The divergence and endemic-Lyapunov expressions are specific to the
    /// non-monotone incidence family (mass action being its `alpha = 0` case).
    #[error("certification formulas do not apply to incidence kind {0}")]
    UnsupportedIncidence(IncidenceKind),
}

/// Lyapunov function for the disease-free regime: `V(s, i) = i`.
pub fn lyapunov_dfe(x: &PlanarState) -> f64 {
    x.i
}

/// Derivative of `V = i` along the flow; by construction this is exactly the
/// `i`-component of the planar field, and it is bounded above by
/// `(mu2 + gamma)(r0 s - 1) i`.
pub fn lyapunov_dfe_derivative(x: &PlanarState, p: &Params) -> f64 {
    let di = planar_rhs(x, p).1;
    debug_assert!(
        x.i < 0.0 || di <= lyapunov_dfe_derivative_bound(x, p) + 1e-14,
        "derivative exceeds its bound at ({}, {})",
        x.s,
        x.i
    );
    di
}

/// The bounding expression `(mu2 + gamma)(r0 s - 1) i`, exposed so tests can
/// check the bound pointwise.
pub fn lyapunov_dfe_derivative_bound(x: &PlanarState, p: &Params) -> f64 {
    (p.mu2 + p.gamma) * (r0(p) * x.s - 1.0) * x.i
}

fn require_endemic(eq: &Equilibrium) -> Result<(), CertifyError> {
    if eq.kind != EquilibriumKind::Endemic {
        return Err(CertifyError::PreconditionViolated(
            "the endemic Lyapunov function needs the endemic equilibrium".to_string(),
        ));
    }
    Ok(())
}

/// Quadratic-plus-Volterra Lyapunov function for the endemic regime:
///
/// ```text
/// V = 1/2 (s - s* + i - i*)^2
///   + ((2 m3 + gamma) / beta) (1 + alpha i*^2) (i - i* - i* ln(i / i*))
/// ```
///
/// with `m3 = mu3 + rho`. Zero at the equilibrium, positive elsewhere in the
/// interior; undefined on the `i = 0` boundary.
pub fn lyapunov_endemic(x: &PlanarState, p: &Params, eq: &Equilibrium) -> Result<f64, CertifyError> {
    require_endemic(eq)?;
    if p.incidence == IncidenceKind::HollingII {
        return Err(CertifyError::UnsupportedIncidence(p.incidence));
    }
    if x.i <= 0.0 {
        return Err(CertifyError::DomainError { s: x.s, i: x.i });
    }
    let m3 = p.mu3_effective();
    let alpha = p.alpha_effective();
    let (s_star, i_star) = (eq.point.s, eq.point.i);
    let shifted = x.s - s_star + x.i - i_star;
    let volterra = x.i - i_star - i_star * (x.i / i_star).ln();
    let coeff = (2.0 * m3 + p.gamma) / p.beta * (1.0 + alpha * i_star * i_star);
    Ok(0.5 * shifted * shifted + coeff * volterra)
}

/// Time derivative of the endemic Lyapunov function by the chain rule against
/// the planar field:
///
/// ```text
/// V' = (s' + i')(s - s* + i - i*)
///    + ((2 m3 + gamma) / beta) (1 + alpha i*^2) i' (1 - i*/i)
/// ```
///
/// This is the authoritative form; `lyapunov_endemic_derivative_factored`
/// evaluates the explicitly negative-semidefinite factorization for
/// comparison.
pub fn lyapunov_endemic_derivative(
    x: &PlanarState,
    p: &Params,
    eq: &Equilibrium,
) -> Result<f64, CertifyError> {
    require_endemic(eq)?;
    if p.incidence == IncidenceKind::HollingII {
        return Err(CertifyError::UnsupportedIncidence(p.incidence));
    }
    if x.i <= 0.0 {
        return Err(CertifyError::DomainError { s: x.s, i: x.i });
    }
    let m3 = p.mu3_effective();
    let alpha = p.alpha_effective();
    let (s_star, i_star) = (eq.point.s, eq.point.i);
    let (ds, di) = planar_rhs(x, p);
    let coeff = (2.0 * m3 + p.gamma) / p.beta * (1.0 + alpha * i_star * i_star);
    Ok((ds + di) * (x.s - s_star + x.i - i_star) + coeff * di * (1.0 - i_star / x.i))
}

/// The factored form of the endemic Lyapunov derivative, a sum of three
/// negative-semidefinite terms:
///
/// ```text
/// -m3 (s - s*)^2 - (m3 + gamma)(i - i*)^2
/// - (2 m3 + gamma) alpha s (i* + i) / (1 + alpha i^2) * (i - i*)^2
/// ```
///
/// Intended to equal the chain-rule form; `factored_form_discrepancy` reports
/// the measured gap over a grid rather than asserting equality.
pub fn lyapunov_endemic_derivative_factored(x: &PlanarState, p: &Params, eq: &Equilibrium) -> f64 {
    let m3 = p.mu3_effective();
    let alpha = p.alpha_effective();
    let (s_star, i_star) = (eq.point.s, eq.point.i);
    let dsq = (x.s - s_star) * (x.s - s_star);
    let diq = (x.i - i_star) * (x.i - i_star);
    let inhib = (2.0 * m3 + p.gamma) * alpha * x.s * (i_star + x.i) / (1.0 + alpha * x.i * x.i);
    -m3 * dsq - (m3 + p.gamma) * diq - inhib * diq
}

/// Divergence of the Dulac-weighted field `B f` with
/// `B(s, i) = (1 + alpha i^2) / (beta s i)`:
///
/// ```text
/// -mu2 (1 + alpha i^2) / (beta s^2)
/// - 2 alpha i (mu2 + gamma) / (beta s)
/// + (m3 (1 + alpha i^2) / (beta s^2)) (1 - 1/i)
/// ```
///
/// One-signed on the interior of the simplex, which rules out periodic orbits
/// there. Undefined on the axes.
pub fn dulac_divergence(x: &PlanarState, p: &Params) -> Result<f64, CertifyError> {
    if p.incidence == IncidenceKind::HollingII {
        return Err(CertifyError::UnsupportedIncidence(p.incidence));
    }
    if x.s <= 0.0 || x.i <= 0.0 {
        return Err(CertifyError::DomainError { s: x.s, i: x.i });
    }
    let m3 = p.mu3_effective();
    let alpha = p.alpha_effective();
    let w = 1.0 + alpha * x.i * x.i;
    let term1 = -p.mu2 * w / (p.beta * x.s * x.s);
    let term2 = -2.0 * alpha * x.i * (p.mu2 + p.gamma) / (p.beta * x.s);
    let term3 = m3 * w / (p.beta * x.s * x.s) * (1.0 - 1.0 / x.i);
    Ok(term1 + term2 + term3)
}

struct ScanReduction {
    value: f64,
    point: PlanarState,
    count: usize,
}

impl ScanReduction {
    fn new() -> Self {
        ScanReduction { value: f64::NEG_INFINITY, point: PlanarState::new(f64::NAN, f64::NAN), count: 0 }
    }

    /// Order-independent maximum: compare by value, tie-break by
    /// lexicographically smaller `(s, i)`.
    fn offer(&mut self, value: f64, point: PlanarState) {
        self.count += 1;
        let better = value > self.value
            || (value == self.value && (point.s, point.i) < (self.point.s, self.point.i));
        if better {
            self.value = value;
            self.point = point;
        }
    }
}

fn scan_evaluator<'a>(
    quantity: ScanQuantity,
    p: &'a Params,
    eq: Option<&'a Equilibrium>,
) -> impl Fn(&PlanarState) -> f64 + 'a {
    move |x: &PlanarState| match quantity {
        ScanQuantity::DulacDivergence => dulac_divergence(x, p).expect("scan stays off the axes"),
        ScanQuantity::LyapunovDfeDerivative => lyapunov_dfe_derivative(x, p),
        ScanQuantity::LyapunovEndemicDerivative => {
            lyapunov_endemic_derivative(x, p, eq.expect("endemic scan carries the equilibrium"))
                .expect("scan stays off the axes")
        }
    }
}

/// Scan `quantity` over a `resolution x resolution` grid of the inset simplex
/// and certify its sign. The endemic scan excludes a ball of radius
/// `ENDEMIC_EXCLUSION_RADIUS` around the equilibrium where the quantity is
/// legitimately zero. Before a counterexample verdict is issued the
/// neighborhood of the extremal point is rescanned on a 10x finer local grid,
/// which can only sharpen the reported extremum.
pub fn certify_grid(
    quantity: ScanQuantity,
    p: &Params,
    resolution: usize,
    margin: f64,
    boundary_inset: f64,
) -> Result<Certificate, CertifyError> {
    if resolution < 2 {
        return Err(CertifyError::PreconditionViolated(format!(
            "resolution must be at least 2 (got {resolution})"
        )));
    }
    if !(margin.is_finite() && margin >= 0.0) {
        return Err(CertifyError::PreconditionViolated(format!(
            "margin must be finite and non-negative (got {margin})"
        )));
    }
    let needs_open_domain = quantity != ScanQuantity::LyapunovDfeDerivative;
    if needs_open_domain && boundary_inset <= 0.0 {
        return Err(CertifyError::PreconditionViolated(
            "boundary_inset must be positive for quantities undefined on the boundary".to_string(),
        ));
    }
    if !(0.0..0.5).contains(&boundary_inset) {
        return Err(CertifyError::PreconditionViolated(format!(
            "boundary_inset must lie in [0, 0.5) (got {boundary_inset})"
        )));
    }
    if quantity != ScanQuantity::LyapunovDfeDerivative && p.incidence == IncidenceKind::HollingII {
        return Err(CertifyError::UnsupportedIncidence(p.incidence));
    }

    let eq = match quantity {
        ScanQuantity::LyapunovEndemicDerivative => Some(
            compute_endemic(p)
                .map_err(|absence| CertifyError::PreconditionViolated(absence.to_string()))?,
        ),
        _ => None,
    };
    let excluded = |x: &PlanarState| match &eq {
        Some(eq) => {
            let (ds, di) = (x.s - eq.point.s, x.i - eq.point.i);
            (ds * ds + di * di).sqrt() <= ENDEMIC_EXCLUSION_RADIUS
        }
        None => false,
    };
    let eval = scan_evaluator(quantity, p, eq.as_ref());

    let step = (1.0 - 2.0 * boundary_inset) / (resolution - 1) as f64;
    let mut reduction = ScanReduction::new();
    for a in 0..resolution {
        let s = boundary_inset + a as f64 * step;
        for b in 0..resolution {
            let i = boundary_inset + b as f64 * step;
            let x = PlanarState::new(s, i);
            if s + i > 1.0 || excluded(&x) {
                continue;
            }
            reduction.offer(eval(&x), x);
        }
    }
    if reduction.count == 0 {
        return Err(CertifyError::PreconditionViolated(
            "the requested grid contains no scannable points".to_string(),
        ));
    }

    // Local refinement before crying wolf: a 10x finer grid around the
    // extremal cell confirms a would-be counterexample and sharpens it.
    if reduction.value > margin {
        let center = reduction.point;
        let fine = step / 10.0;
        let hi = 1.0 - boundary_inset;
        for da in -10..=10i32 {
            for db in -10..=10i32 {
                let s = (center.s + da as f64 * fine).clamp(boundary_inset, hi);
                let i = (center.i + db as f64 * fine).clamp(boundary_inset, hi);
                let x = PlanarState::new(s, i);
                if s + i > 1.0 || excluded(&x) {
                    continue;
                }
                reduction.offer(eval(&x), x);
            }
        }
    }

    let verdict = if reduction.value < -margin {
        Verdict::Certified
    } else if reduction.value > margin {
        Verdict::CounterexampleFound
    } else {
        Verdict::Inconclusive
    };
    let kind = match quantity {
        ScanQuantity::DulacDivergence => CertificateKind::DulacNoLimitCycle,
        ScanQuantity::LyapunovDfeDerivative => CertificateKind::LyapunovDfe,
        ScanQuantity::LyapunovEndemicDerivative => CertificateKind::LyapunovEndemic,
    };
    Ok(Certificate {
        kind,
        verdict,
        extremal_value: reduction.value,
        extremal_point: reduction.point,
        grid: GridSpec {
            resolution,
            boundary_inset,
            margin,
            points_scanned: reduction.count,
        },
        params: *p,
    })
}

/// Measured gap between the chain-rule derivative and its factored form.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DiscrepancyReport {
    pub max_abs_delta: f64,
    pub at: PlanarState,
    pub resolution: usize,
    pub boundary_inset: f64,
}

/// Compare the chain-rule endemic Lyapunov derivative against the factored
/// form over a grid and report the maximum absolute discrepancy; the value is
/// measured, never assumed.
pub fn factored_form_discrepancy(
    p: &Params,
    resolution: usize,
    boundary_inset: f64,
) -> Result<DiscrepancyReport, CertifyError> {
    if resolution < 2 {
        return Err(CertifyError::PreconditionViolated(format!(
            "resolution must be at least 2 (got {resolution})"
        )));
    }
    if boundary_inset <= 0.0 || boundary_inset >= 0.5 {
        return Err(CertifyError::PreconditionViolated(format!(
            "boundary_inset must lie in (0, 0.5) (got {boundary_inset})"
        )));
    }
    if p.incidence == IncidenceKind::HollingII {
        return Err(CertifyError::UnsupportedIncidence(p.incidence));
    }
    let eq = compute_endemic(p)
        .map_err(|absence| CertifyError::PreconditionViolated(absence.to_string()))?;

    let step = (1.0 - 2.0 * boundary_inset) / (resolution - 1) as f64;
    let mut max_abs_delta = f64::NEG_INFINITY;
    let mut at = PlanarState::new(f64::NAN, f64::NAN);
    for a in 0..resolution {
        let s = boundary_inset + a as f64 * step;
        for b in 0..resolution {
            let i = boundary_inset + b as f64 * step;
            if s + i > 1.0 {
                continue;
            }
            let x = PlanarState::new(s, i);
            let chain = lyapunov_endemic_derivative(&x, p, &eq)?;
            let factored = lyapunov_endemic_derivative_factored(&x, p, &eq);
            let delta = (chain - factored).abs();
            if delta > max_abs_delta || (delta == max_abs_delta && (x.s, x.i) < (at.s, at.i)) {
                max_abs_delta = delta;
                at = x;
            }
        }
    }
    Ok(DiscrepancyReport { max_abs_delta, at, resolution, boundary_inset })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{IncidenceKind, Params};

    fn canonical() -> Params {
        Params::sir(0.5, 2.0, 0.1, 0.05, 0.15).unwrap()
    }

    fn subcritical() -> Params {
        Params::sir(0.2, 2.0, 0.1, 0.05, 0.15).unwrap() // r0 = 0.8
    }

    #[test]
    fn lyapunov_dfe_values() {
        assert_eq!(lyapunov_dfe(&PlanarState::new(1.0, 0.0)), 0.0);
        assert_eq!(lyapunov_dfe(&PlanarState::new(0.5, 0.3)), 0.3);
    }

    #[test]
    fn lyapunov_dfe_derivative_is_infected_component() {
        let p = canonical();
        for (s, i) in [(1.0, 0.0), (0.5, 0.0), (0.3, 0.4), (0.9, 0.05)] {
            let x = PlanarState::new(s, i);
            assert_eq!(lyapunov_dfe_derivative(&x, &p), planar_rhs(&x, &p).1);
        }
    }

    #[test]
    fn lyapunov_dfe_derivative_negative_when_subcritical() {
        // Deterministic low-discrepancy sweep over the open simplex.
        let p = subcritical();
        let mut bad = 0;
        for k in 1..10_000usize {
            let u = (k as f64 * 0.754877666246693) % 1.0;
            let v = (k as f64 * 0.569840290998054) % 1.0;
            let s = u * 0.998 + 1e-3;
            let i = (1.0 - s) * (v * 0.998 + 1e-3);
            let d = lyapunov_dfe_derivative(&PlanarState::new(s, i), &p);
            if d >= 0.0 {
                bad += 1;
            }
        }
        assert_eq!(bad, 0);
    }

    #[test]
    fn dfe_derivative_bound_holds_pointwise() {
        for p in [subcritical(), canonical()] {
            for k in 0..1_000usize {
                let u = (k as f64 * 0.754877666246693) % 1.0;
                let v = (k as f64 * 0.569840290998054) % 1.0;
                let s = u;
                let i = (1.0 - s) * v;
                let x = PlanarState::new(s, i);
                let d = lyapunov_dfe_derivative(&x, &p);
                assert!(d <= lyapunov_dfe_derivative_bound(&x, &p) + 1e-14);
            }
        }
    }

    #[test]
    fn lyapunov_endemic_zero_at_equilibrium() {
        let p = canonical();
        let eq = compute_endemic(&p).unwrap();
        let v = lyapunov_endemic(&eq.point, &p, &eq).unwrap();
        assert!(v.abs() < 1e-30, "V(x*) = {v}");
        let d = lyapunov_endemic_derivative(&eq.point, &p, &eq).unwrap();
        assert!(d.abs() < 1e-15, "V'(x*) = {d}");
        assert_eq!(lyapunov_endemic_derivative_factored(&eq.point, &p, &eq), -0.0);
    }

    #[test]
    fn volterra_term_positive_away_from_minimum() {
        let i_star = 0.1213203435596426f64;
        for k in 1..=1000 {
            let u = k as f64 / 1000.0;
            let g = u - i_star - i_star * (u / i_star).ln();
            if (u - i_star).abs() > 1e-9 {
                assert!(g > 0.0, "g({u}) = {g}");
            }
        }
    }

    #[test]
    fn lyapunov_endemic_value_cross_checked() {
        // Independent re-derivation of the two terms with separate arithmetic.
        let p = canonical();
        let eq = compute_endemic(&p).unwrap();
        let x = PlanarState::new(0.6, 0.2);
        let v = lyapunov_endemic(&x, &p, &eq).unwrap();

        let (s_star, i_star) = (eq.point.s, eq.point.i);
        let quad = {
            let d = (x.s - s_star) + (x.i - i_star);
            d * d / 2.0
        };
        let volterra = {
            let ratio = x.i / i_star;
            let c = (2.0 * p.mu3 + p.gamma) * (1.0 + p.alpha * i_star.powi(2)) / p.beta;
            c * (x.i - i_star * (1.0 + ratio.ln()))
        };
        assert!((v - (quad + volterra)).abs() < 1e-14, "v = {v} vs {}", quad + volterra);
        assert!(v > 0.0);
    }

    #[test]
    fn lyapunov_endemic_positive_on_interior_grid() {
        let p = canonical();
        let eq = compute_endemic(&p).unwrap();
        for a in 1..50 {
            for b in 1..50 {
                let s = a as f64 / 50.0;
                let i = b as f64 / 50.0;
                if s + i > 1.0 {
                    continue;
                }
                let x = PlanarState::new(s, i);
                if x.sup_distance(&eq.point) < 1e-8 {
                    continue;
                }
                assert!(lyapunov_endemic(&x, &p, &eq).unwrap() > 0.0);
            }
        }
    }

    #[test]
    fn lyapunov_endemic_rejects_boundary() {
        let p = canonical();
        let eq = compute_endemic(&p).unwrap();
        assert!(matches!(
            lyapunov_endemic(&PlanarState::new(0.5, 0.0), &p, &eq),
            Err(CertifyError::DomainError { .. })
        ));
        assert!(matches!(
            lyapunov_endemic_derivative(&PlanarState::new(0.5, -0.1), &p, &eq),
            Err(CertifyError::DomainError { .. })
        ));
    }

    #[test]
    fn chain_rule_matches_directional_difference() {
        // (V(x + h f(x)) - V(x)) / h approximates V' to O(h).
        let p = canonical();
        let eq = compute_endemic(&p).unwrap();
        let h = 1e-7;
        let mut checked = 0;
        for k in 0..2000usize {
            let u = (k as f64 * 0.754877666246693) % 1.0;
            let v = (k as f64 * 0.569840290998054) % 1.0;
            let s = 0.02 + u * 0.96;
            let i = (1.0 - s - 0.01) * (0.02 + v * 0.96);
            if i <= 0.01 {
                continue;
            }
            let x = PlanarState::new(s, i);
            if x.sup_distance(&eq.point) < 0.05 {
                continue;
            }
            let d = lyapunov_endemic_derivative(&x, &p, &eq).unwrap();
            let f = planar_rhs(&x, &p);
            let ahead = PlanarState::new(x.s + h * f.0, x.i + h * f.1);
            let fd = (lyapunov_endemic(&ahead, &p, &eq).unwrap()
                - lyapunov_endemic(&x, &p, &eq).unwrap())
                / h;
            let rel = (fd - d).abs() / d.abs();
            assert!(rel < 1e-4, "rel = {rel} at ({s}, {i})");
            checked += 1;
        }
        assert!(checked > 1000, "only {checked} points checked");
    }

    #[test]
    fn factored_form_zero_at_equilibrium_and_nonpositive() {
        let p = canonical();
        let eq = compute_endemic(&p).unwrap();
        for a in 0..=40 {
            for b in 1..=40 {
                let s = a as f64 / 40.0;
                let i = b as f64 / 40.0;
                if s + i > 1.0 {
                    continue;
                }
                let v = lyapunov_endemic_derivative_factored(&PlanarState::new(s, i), &p, &eq);
                assert!(v <= 0.0, "factored form positive at ({s}, {i}): {v}");
            }
        }
    }

    #[test]
    fn dulac_canonical_point() {
        let p = canonical();
        let d = dulac_divergence(&PlanarState::new(0.5, 0.5), &p).unwrap();
        assert!((d - (-3.8)).abs() < 1e-12, "divergence = {d}");
    }

    #[test]
    fn dulac_third_term_vanishes_at_i_one() {
        // At i = 1 (with s on the boundary edge excluded, use s slightly in) the
        // (1 - 1/i) factor is zero and the first two terms keep the sign.
        let p = canonical();
        let x = PlanarState::new(1e-6, 1.0);
        let d = dulac_divergence(&x, &p).unwrap();
        let w = 1.0 + p.alpha;
        let expected = -p.mu2 * w / (p.beta * x.s * x.s) - 2.0 * p.alpha * (p.mu2 + p.gamma) / (p.beta * x.s);
        assert!((d - expected).abs() / expected.abs() < 1e-12);
        assert!(d < 0.0);
    }

    #[test]
    fn dulac_rejects_axes_and_holling() {
        let p = canonical();
        assert!(matches!(
            dulac_divergence(&PlanarState::new(0.0, 0.5), &p),
            Err(CertifyError::DomainError { .. })
        ));
        let holling = Params { incidence: IncidenceKind::HollingII, ..p };
        assert!(matches!(
            dulac_divergence(&PlanarState::new(0.5, 0.5), &holling),
            Err(CertifyError::UnsupportedIncidence(_))
        ));
    }

    #[test]
    fn dulac_matches_finite_difference_divergence() {
        // Central differences of B.f, h = 1e-6, on interior points.
        let p = canonical();
        let h = 1e-6;
        let bf = |s: f64, i: f64| {
            let x = PlanarState::new(s, i);
            let (f1, f2) = planar_rhs(&x, &p);
            let b = (1.0 + p.alpha * i * i) / (p.beta * s * i);
            (b * f1, b * f2)
        };
        for k in 0..1000usize {
            let u = (k as f64 * 0.754877666246693) % 1.0;
            let v = (k as f64 * 0.569840290998054) % 1.0;
            let s = 1e-3 + u * 0.996;
            let i = 1e-3 + v * (1.0 - s - 2e-3).max(1e-4);
            if s + i > 1.0 {
                continue;
            }
            let div_fd = (bf(s + h, i).0 - bf(s - h, i).0) / (2.0 * h)
                + (bf(s, i + h).1 - bf(s, i - h).1) / (2.0 * h);
            let div = dulac_divergence(&PlanarState::new(s, i), &p).unwrap();
            let rel = (div - div_fd).abs() / div.abs();
            assert!(rel < 1e-4, "rel = {rel} at ({s}, {i})");
        }
    }

    #[test]
    fn certify_dulac_canonical() {
        let cert = certify_grid(ScanQuantity::DulacDivergence, &canonical(), 200, DEFAULT_MARGIN, 1e-3).unwrap();
        assert_eq!(cert.kind, CertificateKind::DulacNoLimitCycle);
        assert_eq!(cert.verdict, Verdict::Certified);
        assert!(cert.extremal_value < 0.0);
        assert!(cert.grid.points_scanned > 19000);
    }

    #[test]
    fn certify_dfe_lyapunov_subcritical() {
        let cert =
            certify_grid(ScanQuantity::LyapunovDfeDerivative, &subcritical(), 200, DEFAULT_MARGIN, 1e-3)
                .unwrap();
        assert_eq!(cert.verdict, Verdict::Certified);
    }

    #[test]
    fn certify_dfe_lyapunov_finds_counterexample_when_supercritical() {
        // With r0 > 1 the infected derivative is positive near the disease-free
        // corner, so the scan must report it.
        let cert =
            certify_grid(ScanQuantity::LyapunovDfeDerivative, &canonical(), 200, DEFAULT_MARGIN, 1e-3)
                .unwrap();
        assert_eq!(cert.verdict, Verdict::CounterexampleFound);
        assert!(cert.extremal_value > 0.0);
    }

    #[test]
    fn certify_endemic_lyapunov_canonical() {
        let cert = certify_grid(
            ScanQuantity::LyapunovEndemicDerivative,
            &canonical(),
            200,
            DEFAULT_MARGIN,
            1e-3,
        )
        .unwrap();
        assert_eq!(cert.verdict, Verdict::Certified);
    }

    #[test]
    fn certify_endemic_requires_supercritical() {
        let err = certify_grid(
            ScanQuantity::LyapunovEndemicDerivative,
            &subcritical(),
            50,
            DEFAULT_MARGIN,
            1e-3,
        )
        .unwrap_err();
        assert!(matches!(err, CertifyError::PreconditionViolated(_)));
    }

    #[test]
    fn certify_resolution_two_is_contract_consistent() {
        let cert = certify_grid(ScanQuantity::DulacDivergence, &canonical(), 2, DEFAULT_MARGIN, 1e-3).unwrap();
        // Whatever the verdict, it must agree with the scanned extremum.
        match cert.verdict {
            Verdict::Certified => assert!(cert.extremal_value < -cert.grid.margin),
            Verdict::CounterexampleFound => assert!(cert.extremal_value > cert.grid.margin),
            Verdict::Inconclusive => assert!(cert.extremal_value.abs() <= cert.grid.margin),
        }
        assert!(cert.grid.points_scanned >= 3);
    }

    #[test]
    fn certificates_are_deterministic() {
        let a = certify_grid(ScanQuantity::DulacDivergence, &canonical(), 101, DEFAULT_MARGIN, 1e-3).unwrap();
        let b = certify_grid(ScanQuantity::DulacDivergence, &canonical(), 101, DEFAULT_MARGIN, 1e-3).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.to_kv_block(), b.to_kv_block());
    }

    #[test]
    fn discrepancy_report_measures_roundoff_gap() {
        let rep = factored_form_discrepancy(&canonical(), 200, 1e-3).unwrap();
        assert!(rep.max_abs_delta.is_finite());
        assert!(rep.max_abs_delta >= 0.0);
        let again = factored_form_discrepancy(&canonical(), 200, 1e-3).unwrap();
        assert_eq!(rep, again);
    }

    #[test]
    fn kv_block_carries_parameter_echo() {
        let cert = certify_grid(ScanQuantity::DulacDivergence, &canonical(), 10, DEFAULT_MARGIN, 1e-3).unwrap();
        let block = cert.to_kv_block();
        assert!(block.contains("kind = dulac_no_limit_cycle"));
        assert!(block.contains("beta = 0.5"));
        assert!(block.contains("incidence = non_monotone"));
        assert!(block.contains("verdict = certified"));
    }
}
