//! Command-line front end: config assembly, the four commands, CSV emission,
//! text reports, and static SVG phase portraits.
//!
//! Exit-code contract: 0 success, 1 validation or parse error, 2 domain escape
//! or failed certification, 3 I/O error. Every command is deterministic:
//! identical inputs produce byte-identical outputs.

pub mod config;
pub mod svg;

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use thiserror::Error;

use crate::certify::{
    certify_grid, factored_form_discrepancy, Certificate, CertifyError, ScanQuantity, Verdict,
};
use crate::equilibria::{classify_dfe, classify_endemic, compute_dfe, compute_endemic, r0, EquilibriaError, StabilityReport};
use crate::integrate::{integrate_planar, IntegrateError, TerminalReason, Trajectory};
use crate::model::{Params, PlanarState};

pub use config::{build_run_config, parse_config, Overrides, RunConfig, SweepParam, SweepSpec};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Command {
    Analyze,
    Simulate,
    Certify,
    Sweep,
}

#[derive(Debug, Error)]
pub enum CliError {
    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("validation error: {0}")]
    Validation(String),
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Parse { .. } | CliError::Validation(_) => 1,
            CliError::Io(_) => 3,
        }
    }
}

/// What a command produced: the report text for stdout and the process exit
/// code (0 success, 2 for domain escapes or failed certification).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CommandOutcome {
    pub exit_code: i32,
    pub report: String,
}

/// Seventeen significant digits: lossless for binary64, so emitted CSV parses
/// back to the in-memory value exactly.
fn fmt17(x: f64) -> String {
    format!("{x:.16e}")
}

fn fmt_complex(z: num_complex::Complex64) -> String {
    if z.im == 0.0 {
        format!("{}", z.re)
    } else if z.im < 0.0 {
        format!("{}-{}i", z.re, -z.im)
    } else {
        format!("{}+{}i", z.re, z.im)
    }
}

fn params_echo(p: &Params) -> String {
    let model = if p.is_sirs() {
        format!("SIRS (reduced: mu3_effective = {})", p.mu3_effective())
    } else {
        "SIR".to_string()
    };
    format!(
        "model = {model}\nincidence = {}\nbeta = {}\nalpha = {}\nmu1 = {}\nmu2 = {}\nmu3 = {}\n\
         gamma = {}\nrho = {}\nn_total = {}\nr0 = {}\n",
        p.incidence, p.beta, p.alpha, p.mu1, p.mu2, p.mu3, p.gamma, p.rho, p.n_total, r0(p)
    )
}

fn report_block(label: &str, point: Option<&PlanarState>, residual: Option<f64>, rep: &StabilityReport) -> String {
    let mut out = format!("[{label}]\n");
    if let Some(x) = point {
        let _ = writeln!(out, "s = {}", x.s);
        let _ = writeln!(out, "i = {}", x.i);
    }
    if let Some(r) = residual {
        let _ = writeln!(out, "residual = {r}");
    }
    let _ = writeln!(out, "eigenvalue_1 = {}", fmt_complex(rep.eigenvalues.0));
    let _ = writeln!(out, "eigenvalue_2 = {}", fmt_complex(rep.eigenvalues.1));
    let _ = writeln!(out, "trace = {}", rep.trace);
    let _ = writeln!(out, "determinant = {}", rep.determinant);
    if let Some(x) = rep.x_quantity {
        let _ = writeln!(out, "x_quantity = {x}");
    }
    if let Some(y) = rep.y_quantity {
        let _ = writeln!(out, "y_quantity = {y}");
    }
    let _ = writeln!(out, "classification = {}", rep.classification);
    out
}

/// Reproduction number, both equilibria with residuals, and both stability
/// reports, as a deterministic text report.
pub fn cmd_analyze(cfg: &RunConfig) -> CommandOutcome {
    let p = &cfg.params;
    let mut report = params_echo(p);
    report.push('\n');

    let dfe = compute_dfe(p);
    report.push_str(&report_block(
        "disease_free_equilibrium",
        Some(&dfe.point),
        Some(dfe.residual),
        &classify_dfe(p),
    ));
    report.push('\n');

    let mut exit_code = 0;
    match classify_endemic(p) {
        Ok(rep) => {
            let eq = compute_endemic(p).expect("classification implies existence");
            report.push_str(&report_block(
                "endemic_equilibrium",
                Some(&eq.point),
                Some(eq.residual),
                &rep,
            ));
        }
        Err(EquilibriaError::Absent(absence)) => {
            let _ = writeln!(report, "[endemic_equilibrium]");
            let _ = writeln!(report, "{absence}");
        }
        Err(err @ EquilibriaError::FormulaMismatch { .. }) => {
            let _ = writeln!(report, "[endemic_equilibrium]");
            let _ = writeln!(report, "error = {err}");
            exit_code = 2;
        }
    }
    CommandOutcome { exit_code, report }
}

/// Serialize a planar trajectory as CSV with header `t,S,I,R`, one row per
/// recorded state, `R = 1 - S - I`.
pub fn trajectory_csv(tr: &Trajectory<PlanarState>) -> String {
    let mut out = String::from("t,S,I,R\n");
    for (t, x) in tr.times.iter().zip(&tr.states) {
        let r = 1.0 - x.s - x.i;
        let _ = writeln!(out, "{},{},{},{}", fmt17(*t), fmt17(x.s), fmt17(x.i), fmt17(r));
    }
    out
}

/// Integrate every initial condition, write one CSV per trajectory and an
/// optional phase portrait. Exit code 2 when any trajectory escapes the
/// simplex or the stepper underflows.
pub fn cmd_simulate(cfg: &RunConfig) -> Result<CommandOutcome, CliError> {
    let p = &cfg.params;
    fs::create_dir_all(&cfg.out_dir)?;
    let mut report = params_echo(p);
    report.push('\n');
    let mut exit_code = 0;
    let mut trajectories: Vec<Trajectory<PlanarState>> = Vec::new();

    for (k, x0) in cfg.initial_conditions.iter().enumerate() {
        let file_name = format!("trajectory_{k:02}.csv");
        match integrate_planar(x0, p, &cfg.integrator) {
            Ok(tr) => {
                let path = cfg.out_dir.join(&file_name);
                fs::write(&path, trajectory_csv(&tr))?;
                let end = tr.final_state();
                let _ = writeln!(
                    report,
                    "{file_name}: {} at t = {}, final S = {}, I = {}",
                    tr.terminal_reason.as_str(),
                    tr.final_time(),
                    end.s,
                    end.i
                );
                if tr.terminal_reason == TerminalReason::DomainEscape {
                    exit_code = 2;
                }
                trajectories.push(tr);
            }
            Err(err @ IntegrateError::StartOutsideDomain(_)) => {
                return Err(CliError::Validation(err.to_string()));
            }
            Err(err @ IntegrateError::InvalidConfig(_)) => {
                return Err(CliError::Validation(err.to_string()));
            }
            Err(err @ IntegrateError::StepUnderflow { .. }) => {
                let _ = writeln!(report, "{file_name}: error = {err}");
                exit_code = 2;
            }
        }
    }

    if cfg.emit_svg {
        let mut marks = vec![("disease-free".to_string(), PlanarState::new(1.0, 0.0))];
        if let Ok(eq) = compute_endemic(p) {
            marks.push(("endemic".to_string(), eq.point));
        }
        let refs: Vec<&Trajectory<PlanarState>> = trajectories.iter().collect();
        let title = format!("phase portrait (r0 = {})", r0(p));
        let path = cfg.out_dir.join("phase_portrait.svg");
        fs::write(&path, svg::phase_portrait(&refs, &marks, &title))?;
        let _ = writeln!(report, "phase_portrait.svg: {} trajectories", trajectories.len());
    }

    Ok(CommandOutcome { exit_code, report })
}

fn certificate_section(cert: &Certificate) -> String {
    format!("[certificate]\n{}", cert.to_kv_block())
}

/// Run the divergence scan and the regime-appropriate Lyapunov-derivative scan
/// (disease-free when `r0 < 1`, endemic when `r0 > 1`), plus the
/// factored-vs-chain-rule discrepancy report. Exit 0 iff every verdict is
/// `Certified`.
pub fn cmd_certify(cfg: &RunConfig) -> CommandOutcome {
    let p = &cfg.params;
    let (res, margin, inset) = (cfg.scan_resolution, cfg.scan_margin, cfg.scan_inset);
    let mut report = params_echo(p);
    report.push('\n');
    let mut exit_code = 0;
    let mut all_certified = true;
    let mut scan = |quantity: ScanQuantity, report: &mut String| match certify_grid(quantity, p, res, margin, inset) {
        Ok(cert) => {
            if cert.verdict != Verdict::Certified {
                all_certified = false;
            }
            report.push_str(&certificate_section(&cert));
            report.push('\n');
        }
        Err(err) => {
            all_certified = false;
            let _ = writeln!(report, "[certificate]");
            let _ = writeln!(report, "diagnostic = {err}");
            report.push('\n');
        }
    };

    scan(ScanQuantity::DulacDivergence, &mut report);
    if r0(p) < 1.0 {
        scan(ScanQuantity::LyapunovDfeDerivative, &mut report);
    } else {
        scan(ScanQuantity::LyapunovEndemicDerivative, &mut report);
        match factored_form_discrepancy(p, res, inset) {
            Ok(rep) => {
                let _ = writeln!(report, "[factored_form_discrepancy]");
                let _ = writeln!(report, "max_abs_delta = {}", rep.max_abs_delta);
                let _ = writeln!(report, "at_s = {}", rep.at.s);
                let _ = writeln!(report, "at_i = {}", rep.at.i);
                let _ = writeln!(report, "resolution = {}", rep.resolution);
                let _ = writeln!(report, "boundary_inset = {}", rep.boundary_inset);
                report.push('\n');
            }
            Err(err @ CertifyError::PreconditionViolated(_)) => {
                let _ = writeln!(report, "[factored_form_discrepancy]");
                let _ = writeln!(report, "diagnostic = {err}");
                report.push('\n');
                all_certified = false;
            }
            Err(err) => {
                let _ = writeln!(report, "[factored_form_discrepancy]");
                let _ = writeln!(report, "diagnostic = {err}");
                report.push('\n');
                all_certified = false;
            }
        }
    }

    let _ = writeln!(report, "all_certified = {all_certified}");
    if !all_certified {
        exit_code = 2;
    }
    CommandOutcome { exit_code, report }
}

/// One row per sweep point: parameter value, reproduction number, disease-free
/// classification, endemic existence, the endemic point, and its
/// classification, ordered by parameter value.
pub fn cmd_sweep(cfg: &RunConfig) -> Result<CommandOutcome, CliError> {
    let spec = cfg.sweep.as_ref().expect("run() enforces presence");
    fs::create_dir_all(&cfg.out_dir)?;
    let mut csv = String::from("value,r0,dfe_classification,endemic_exists,s_star,i_star,endemic_classification\n");
    for value in spec.values() {
        let p = spec.param.apply(&cfg.params, value);
        p.validate().map_err(|e| {
            CliError::Validation(format!("sweep point {} = {value} is invalid: {}", spec.param.as_str(), e.0))
        })?;
        let dfe = classify_dfe(&p);
        match classify_endemic(&p) {
            Ok(rep) => {
                let eq = compute_endemic(&p).expect("classification implies existence");
                let _ = writeln!(
                    csv,
                    "{},{},{},true,{},{},{}",
                    fmt17(value),
                    fmt17(r0(&p)),
                    dfe.classification,
                    fmt17(eq.point.s),
                    fmt17(eq.point.i),
                    rep.classification
                );
            }
            Err(EquilibriaError::Absent(_)) => {
                let _ = writeln!(csv, "{},{},{},false,,,", fmt17(value), fmt17(r0(&p)), dfe.classification);
            }
            Err(err @ EquilibriaError::FormulaMismatch { .. }) => {
                return Err(CliError::Validation(err.to_string()));
            }
        }
    }
    let file_name = format!("sweep_{}.csv", spec.param.as_str());
    let path = cfg.out_dir.join(&file_name);
    fs::write(&path, &csv)?;
    let mut report = params_echo(&cfg.params);
    report.push('\n');
    let _ = writeln!(report, "{file_name}: {} rows", spec.count);
    Ok(CommandOutcome { exit_code: 0, report })
}

/// Read the config file (when given), apply flag overrides, enforce
/// command-shape invariants, and dispatch.
pub fn run(command: Command, config_path: Option<&Path>, overrides: &Overrides) -> Result<CommandOutcome, CliError> {
    let text = match config_path {
        Some(path) => Some(fs::read_to_string(path)?),
        None => None,
    };
    let cfg = build_run_config(text.as_deref(), overrides)?;

    if command == Command::Sweep && cfg.sweep.is_none() {
        return Err(CliError::Validation("the sweep command requires a sweep spec".to_string()));
    }
    if command != Command::Sweep && cfg.sweep.is_some() {
        return Err(CliError::Validation("a sweep spec is only valid with the sweep command".to_string()));
    }
    if command == Command::Simulate && cfg.initial_conditions.is_empty() {
        return Err(CliError::Validation("simulate requires at least one initial condition".to_string()));
    }

    match command {
        Command::Analyze => Ok(cmd_analyze(&cfg)),
        Command::Simulate => cmd_simulate(&cfg),
        Command::Certify => Ok(cmd_certify(&cfg)),
        Command::Sweep => cmd_sweep(&cfg),
    }
}

/// Output directory helper for tests and the smoke script.
pub fn output_files(dir: &Path) -> std::io::Result<Vec<PathBuf>> {
    let mut files: Vec<PathBuf> = fs::read_dir(dir)?
        .filter_map(|entry| entry.ok().map(|e| e.path()))
        .collect();
    files.sort();
    Ok(files)
}
