//! Equilibria and local stability: the basic reproduction number, both fixed
//! points in closed form, the Jacobian of the planar field, closed-form 2x2
//! eigenvalues, and the resulting classifications.

use num_complex::Complex64;
use thiserror::Error;

use crate::model::{incidence_force, incidence_slope, planar_rhs, IncidenceKind, Params, PlanarState};

/// Classification band around the threshold: closer than this to neutrality is
/// reported as `Marginal`, never guessed.
pub const MARGINAL_BAND: f64 = 1e-12;

/// Below this effective removed-class turnover the endemic closed form
/// degenerates (it divides by `2 * alpha * mu3_eff`).
pub const DEGENERATE_MU3: f64 = 1e-12;

/// Closed-form trace/det must agree with the assembled Jacobian at least this
/// well, or the disagreement is surfaced as a hard error.
pub const FORMULA_MISMATCH_TOL: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EquilibriumKind {
    DiseaseFree,
    Endemic,
}

impl EquilibriumKind {
    pub fn as_str(&self) -> &'static str {
        match self {
            EquilibriumKind::DiseaseFree => "disease_free",
            EquilibriumKind::Endemic => "endemic",
        }
    }
}

/// A fixed point of the planar system together with the max-norm residual of
/// the vector field at that point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Equilibrium {
    pub kind: EquilibriumKind,
    pub point: PlanarState,
    pub residual: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Classification {
    LocallyAsymptoticallyStable,
    Unstable,
    Marginal,
}

impl Classification {
    pub fn as_str(&self) -> &'static str {
        match self {
            Classification::LocallyAsymptoticallyStable => "locally_asymptotically_stable",
            Classification::Unstable => "unstable",
            Classification::Marginal => "marginal",
        }
    }
}

impl std::fmt::Display for Classification {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Jacobian, spectrum, and classification for one equilibrium.
///
/// `trace` and `determinant` come from the assembled Jacobian, so the
/// eigenvalue reconstruction identities hold to roundoff. For the endemic
/// point, `x_quantity` and `y_quantity` are the closed-form matrix entries
/// (`X = beta I*/(1+alpha I*^2)` enters the first column, `Y = -J22`), and the
/// closed-form trace `-m3 - X - Y` / det `m3 Y + (m3/I*)(1-S*) X` are verified
/// against the assembled matrix before the report is issued.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StabilityReport {
    pub jacobian: [[f64; 2]; 2],
    pub eigenvalues: (Complex64, Complex64),
    pub trace: f64,
    pub determinant: f64,
    pub x_quantity: Option<f64>,
    pub y_quantity: Option<f64>,
    pub classification: Classification,
}

/// Why no endemic equilibrium was produced. Subcriticality is the ordinary
/// regime signal, not a failure.
#[derive(Debug, Clone, Error, PartialEq)]
pub enum EndemicAbsence {
    #[error("no endemic equilibrium: r0 = {r0} <= 1")]
    Subcritical { r0: f64 },
    #[error(
        "no endemic equilibrium: effective removed-class turnover {mu3_eff:.3e} is numerically zero and the closed form degenerates"
    )]
    DegenerateMortality { mu3_eff: f64 },
    #[error("no endemic closed form for incidence kind {0}")]
    UnsupportedIncidence(IncidenceKind),
}

#[derive(Debug, Clone, Error, PartialEq)]
pub enum EquilibriaError {
    #[error(transparent)]
    Absent(#[from] EndemicAbsence),
    /// The closed-form trace or determinant disagrees with the assembled
    /// Jacobian: an implementation or transcription error that must surface.
    #[error(
        "closed-form {quantity} = {closed} disagrees with assembled Jacobian {assembled} (relative error {rel_err:.3e})"
    )]
    FormulaMismatch {
        quantity: &'static str,
        closed: f64,
        assembled: f64,
        rel_err: f64,
    },
}

/// Basic reproduction number `beta / (mu2 + gamma)`; independent of the
/// inhibition coefficient and of the removed-class rates.
pub fn r0(p: &Params) -> f64 {
    p.beta / (p.mu2 + p.gamma)
}

/// The disease-free equilibrium `(1, 0)`, an exact fixed point for every
/// parameter set.
pub fn compute_dfe(p: &Params) -> Equilibrium {
    let point = PlanarState::new(1.0, 0.0);
    let (ds, di) = planar_rhs(&point, p);
    Equilibrium {
        kind: EquilibriumKind::DiseaseFree,
        point,
        residual: ds.abs().max(di.abs()),
    }
}

/// The endemic equilibrium in closed form.
///
/// `I*` is the positive root of `a I^2 + b I - c = 0` with `a = alpha m3`,
/// `b = (m3 + gamma) r0`, `c = m3 (r0 - 1)` and `m3 = mu3 + rho`, evaluated in
/// the cancellation-free form `2c / (b + sqrt(b^2 + 4ac))`; at `alpha = 0`
/// this reduces exactly to the mass-action limit `c / b`. Then
/// `S* = (1 + alpha I*^2) / r0`.
pub fn compute_endemic(p: &Params) -> Result<Equilibrium, EndemicAbsence> {
    if p.incidence == IncidenceKind::HollingII {
        return Err(EndemicAbsence::UnsupportedIncidence(p.incidence));
    }
    let r0 = r0(p);
    if r0 <= 1.0 {
        return Err(EndemicAbsence::Subcritical { r0 });
    }
    let m3 = p.mu3_effective();
    let alpha = p.alpha_effective();
    if alpha > 0.0 && m3 < DEGENERATE_MU3 {
        return Err(EndemicAbsence::DegenerateMortality { mu3_eff: m3 });
    }
    let a = alpha * m3;
    let b = (m3 + p.gamma) * r0;
    let c = m3 * (r0 - 1.0);
    let i_star = 2.0 * c / (b + (b * b + 4.0 * a * c).sqrt());
    let s_star = (1.0 + alpha * i_star * i_star) / r0;
    let point = PlanarState::new(s_star, i_star);
    let (ds, di) = planar_rhs(&point, p);
    Ok(Equilibrium {
        kind: EquilibriumKind::Endemic,
        point,
        residual: ds.abs().max(di.abs()),
    })
}

/// Analytic Jacobian of the planar field at `x`:
///
/// ```text
/// [ -m3 - g(i)        (mu2 - m3) - s g'(i)      ]
/// [  g(i)              s g'(i) - (mu2 + gamma)  ]
/// ```
pub fn jacobian(x: &PlanarState, p: &Params) -> [[f64; 2]; 2] {
    let m3 = p.mu3_effective();
    let g = incidence_force(x.i, p);
    let gp = incidence_slope(x.i, p);
    [
        [-m3 - g, (p.mu2 - m3) - x.s * gp],
        [g, x.s * gp - (p.mu2 + p.gamma)],
    ]
}

pub fn trace_2x2(m: &[[f64; 2]; 2]) -> f64 {
    m[0][0] + m[1][1]
}

pub fn det_2x2(m: &[[f64; 2]; 2]) -> f64 {
    m[0][0] * m[1][1] - m[0][1] * m[1][0]
}

/// Eigenvalues of a 2x2 matrix via the characteristic quadratic,
/// `lambda = (tr +- sqrt(tr^2 - 4 det)) / 2`, using the product identity for
/// the smaller real root to avoid cancellation. Returned sorted by real part,
/// then imaginary part.
pub fn eigenvalues_2x2(m: &[[f64; 2]; 2]) -> (Complex64, Complex64) {
    let tr = trace_2x2(m);
    let det = det_2x2(m);
    let disc = tr * tr - 4.0 * det;
    let (a, b) = if disc >= 0.0 {
        let sd = disc.sqrt();
        let r1 = 0.5 * (tr + sd.copysign(if tr == 0.0 { 1.0 } else { tr }));
        let r2 = if r1 == 0.0 { 0.0 } else { det / r1 };
        (Complex64::new(r1, 0.0), Complex64::new(r2, 0.0))
    } else {
        let im = 0.5 * (-disc).sqrt();
        (Complex64::new(0.5 * tr, -im), Complex64::new(0.5 * tr, im))
    };
    if (a.re, a.im) <= (b.re, b.im) {
        (a, b)
    } else {
        (b, a)
    }
}

/// Local stability of the disease-free equilibrium. Its spectrum is
/// `(-m3, (mu2 + gamma)(r0 - 1))`, so the classification flips exactly at
/// `r0 = 1`; within `MARGINAL_BAND` of the threshold the verdict is `Marginal`.
pub fn classify_dfe(p: &Params) -> StabilityReport {
    let j = jacobian(&PlanarState::new(1.0, 0.0), p);
    let eigenvalues = eigenvalues_2x2(&j);
    let r0 = r0(p);
    let classification = if (r0 - 1.0).abs() < MARGINAL_BAND {
        Classification::Marginal
    } else if r0 < 1.0 {
        Classification::LocallyAsymptoticallyStable
    } else {
        Classification::Unstable
    };
    StabilityReport {
        jacobian: j,
        eigenvalues,
        trace: trace_2x2(&j),
        determinant: det_2x2(&j),
        x_quantity: None,
        y_quantity: None,
        classification,
    }
}

fn relative_gap(a: f64, b: f64) -> f64 {
    let scale = a.abs().max(b.abs());
    if scale == 0.0 {
        0.0
    } else {
        (a - b).abs() / scale
    }
}

pub(crate) fn check_formula_agreement(
    quantity: &'static str,
    closed: f64,
    assembled: f64,
    tol: f64,
) -> Result<(), EquilibriaError> {
    let rel_err = relative_gap(closed, assembled);
    if rel_err > tol {
        Err(EquilibriaError::FormulaMismatch { quantity, closed, assembled, rel_err })
    } else {
        Ok(())
    }
}

/// Local stability of the endemic equilibrium.
///
/// Builds the closed-form entries `X = beta I*/(1+alpha I*^2)` and
/// `Y = 2 alpha beta S* I*^2 / (1+alpha I*^2)^2`, for which the Jacobian at the
/// equilibrium takes the form
///
/// ```text
/// [ -m3 - X    Y - (m3/I*)(1 - S*) ]
/// [  X         -Y                  ]
/// ```
///
/// so `tr = -m3 - X - Y < 0` and `det = m3 Y + (m3/I*)(1 - S*) X >= 0`. The
/// closed forms are cross-checked against the assembled Jacobian and any
/// disagreement beyond `FORMULA_MISMATCH_TOL` is a hard error. A determinant
/// below `1e-14` is classified `Marginal` rather than guessed.
pub fn classify_endemic(p: &Params) -> Result<StabilityReport, EquilibriaError> {
    let eq = compute_endemic(p)?;
    let m3 = p.mu3_effective();
    let alpha = p.alpha_effective();
    let s_star = eq.point.s;
    let i_star = eq.point.i;
    let den = 1.0 + alpha * i_star * i_star;

    let x_q = p.beta * i_star / den;
    let y_q = 2.0 * alpha * p.beta * s_star * i_star * i_star / (den * den);
    let trace_closed = -m3 - x_q - y_q;
    let det_closed = m3 * y_q + (m3 / i_star) * (1.0 - s_star) * x_q;

    let j = jacobian(&eq.point, p);
    let trace = trace_2x2(&j);
    let determinant = det_2x2(&j);
    check_formula_agreement("trace", trace_closed, trace, FORMULA_MISMATCH_TOL)?;
    check_formula_agreement("determinant", det_closed, determinant, FORMULA_MISMATCH_TOL)?;

    let eigenvalues = eigenvalues_2x2(&j);
    let classification = if determinant < 1e-14 {
        Classification::Marginal
    } else if trace < 0.0 && determinant > 0.0 {
        Classification::LocallyAsymptoticallyStable
    } else {
        Classification::Unstable
    };
    Ok(StabilityReport {
        jacobian: j,
        eigenvalues,
        trace,
        determinant,
        x_quantity: Some(x_q),
        y_quantity: Some(y_q),
        classification,
    })
}
