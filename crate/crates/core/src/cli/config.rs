//! Run configuration: the `key = value` config format, command-line overrides,
//! and assembly into a validated `RunConfig`.

use std::path::PathBuf;

use crate::certify;
use crate::integrate::{IntegratorConfig, Method};
use crate::model::{IncidenceKind, Params, PlanarState};

use super::CliError;

/// Parameter a sweep may vary.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SweepParam {
    Beta,
    Alpha,
    Mu2,
    Mu3,
    Gamma,
    Rho,
}

impl SweepParam {
    pub fn as_str(&self) -> &'static str {
        match self {
            SweepParam::Beta => "beta",
            SweepParam::Alpha => "alpha",
            SweepParam::Mu2 => "mu2",
            SweepParam::Mu3 => "mu3",
            SweepParam::Gamma => "gamma",
            SweepParam::Rho => "rho",
        }
    }

    fn parse(name: &str) -> Result<Self, CliError> {
        match name {
            "beta" => Ok(SweepParam::Beta),
            "alpha" => Ok(SweepParam::Alpha),
            "mu2" => Ok(SweepParam::Mu2),
            "mu3" => Ok(SweepParam::Mu3),
            "gamma" => Ok(SweepParam::Gamma),
            "rho" => Ok(SweepParam::Rho),
            other => Err(CliError::Validation(format!(
                "parameter \"{other}\" is not sweepable (use beta, alpha, mu2, mu3, gamma, or rho)"
            ))),
        }
    }

    /// The same parameter set with this parameter replaced.
    pub fn apply(&self, p: &Params, value: f64) -> Params {
        let mut q = *p;
        match self {
            SweepParam::Beta => q.beta = value,
            SweepParam::Alpha => q.alpha = value,
            SweepParam::Mu2 => q.mu2 = value,
            SweepParam::Mu3 => q.mu3 = value,
            SweepParam::Gamma => q.gamma = value,
            SweepParam::Rho => q.rho = value,
        }
        q
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepSpec {
    pub param: SweepParam,
    pub start: f64,
    pub stop: f64,
    pub count: usize,
}

impl SweepSpec {
    /// Sweep points in ascending order.
    pub fn values(&self) -> Vec<f64> {
        let mut vals: Vec<f64> = if self.count == 1 {
            vec![self.start]
        } else {
            (0..self.count)
                .map(|k| self.start + k as f64 * (self.stop - self.start) / (self.count - 1) as f64)
                .collect()
        };
        vals.sort_by(|a, b| a.partial_cmp(b).expect("sweep values are finite"));
        vals
    }
}

/// Everything a command needs to run.
#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub params: Params,
    pub integrator: IntegratorConfig,
    pub initial_conditions: Vec<PlanarState>,
    pub sweep: Option<SweepSpec>,
    pub out_dir: PathBuf,
    pub emit_svg: bool,
    pub scan_resolution: usize,
    pub scan_margin: f64,
    pub scan_inset: f64,
}

/// Command-line flag values; every `Some` wins over the config file.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub beta: Option<f64>,
    pub alpha: Option<f64>,
    pub mu1: Option<f64>,
    pub mu2: Option<f64>,
    pub mu3: Option<f64>,
    pub gamma: Option<f64>,
    pub rho: Option<f64>,
    pub n_total: Option<f64>,
    pub incidence: Option<String>,
    pub method: Option<String>,
    pub step: Option<f64>,
    pub abs_tol: Option<f64>,
    pub rel_tol: Option<f64>,
    pub t_max: Option<f64>,
    pub initial: Vec<String>,
    pub sweep: Option<String>,
    pub out: Option<PathBuf>,
    pub svg: Option<bool>,
    pub resolution: Option<usize>,
    pub margin: Option<f64>,
    pub inset: Option<f64>,
}

/// Raw values accumulated from the file before overrides land on top.
#[derive(Debug, Clone, Default)]
struct Draft {
    beta: Option<f64>,
    alpha: Option<f64>,
    mu1: Option<f64>,
    mu2: Option<f64>,
    mu3: Option<f64>,
    gamma: Option<f64>,
    rho: Option<f64>,
    n_total: Option<f64>,
    incidence: Option<IncidenceKind>,
    method: Option<String>,
    step: Option<f64>,
    abs_tol: Option<f64>,
    rel_tol: Option<f64>,
    min_step: Option<f64>,
    max_step: Option<f64>,
    t_max: Option<f64>,
    convergence_radius: Option<f64>,
    convergence_window: Option<usize>,
    guard_tol: Option<f64>,
    initial: Vec<PlanarState>,
    sweep: Option<SweepSpec>,
    out: Option<PathBuf>,
    svg: Option<bool>,
    resolution: Option<usize>,
    margin: Option<f64>,
    inset: Option<f64>,
}

fn parse_f64(value: &str, key: &str, line: usize) -> Result<f64, CliError> {
    value.trim().parse::<f64>().map_err(|_| CliError::Parse {
        line,
        message: format!("value for \"{key}\" is not a number: \"{}\"", value.trim()),
    })
}

fn parse_usize(value: &str, key: &str, line: usize) -> Result<usize, CliError> {
    value.trim().parse::<usize>().map_err(|_| CliError::Parse {
        line,
        message: format!("value for \"{key}\" is not a count: \"{}\"", value.trim()),
    })
}

fn parse_bool(value: &str, key: &str, line: usize) -> Result<bool, CliError> {
    match value.trim().to_ascii_lowercase().as_str() {
        "true" | "yes" | "1" => Ok(true),
        "false" | "no" | "0" => Ok(false),
        other => Err(CliError::Parse {
            line,
            message: format!("value for \"{key}\" is not a boolean: \"{other}\""),
        }),
    }
}

fn parse_initial(value: &str, line: usize) -> Result<PlanarState, CliError> {
    let parts: Vec<&str> = value.split(',').map(str::trim).collect();
    if parts.len() != 2 {
        return Err(CliError::Parse {
            line,
            message: format!("initial condition must be \"s,i\" (got \"{}\")", value.trim()),
        });
    }
    let s = parse_f64(parts[0], "initial", line)?;
    let i = parse_f64(parts[1], "initial", line)?;
    Ok(PlanarState::new(s, i))
}

fn parse_sweep(value: &str, line: usize) -> Result<SweepSpec, CliError> {
    let parts: Vec<&str> = value.split(':').map(str::trim).collect();
    if parts.len() != 4 {
        return Err(CliError::Parse {
            line,
            message: format!("sweep must be \"param:start:stop:count\" (got \"{}\")", value.trim()),
        });
    }
    let param = SweepParam::parse(parts[0]).map_err(|e| match e {
        CliError::Validation(message) => CliError::Parse { line, message },
        other => other,
    })?;
    let start = parse_f64(parts[1], "sweep", line)?;
    let stop = parse_f64(parts[2], "sweep", line)?;
    let count = parse_usize(parts[3], "sweep", line)?;
    if count == 0 {
        return Err(CliError::Parse { line, message: "sweep count must be at least 1".to_string() });
    }
    Ok(SweepSpec { param, start, stop, count })
}

/// Parse a config document with no flag overrides.
pub fn parse_config(text: &str) -> Result<RunConfig, CliError> {
    build_run_config(Some(text), &Overrides::default())
}

/// Parse a `key = value` config document: one entry per line, `#` comments,
/// unknown keys are errors carrying the line number. Repeated `initial` keys
/// accumulate; any other repeated key keeps the last value.
fn parse_config_text(text: &str) -> Result<Draft, CliError> {
    let mut draft = Draft::default();
    for (idx, raw_line) in text.lines().enumerate() {
        let line = idx + 1;
        let content = match raw_line.find('#') {
            Some(pos) => &raw_line[..pos],
            None => raw_line,
        };
        if content.trim().is_empty() {
            continue;
        }
        let (key, value) = content.split_once('=').ok_or_else(|| CliError::Parse {
            line,
            message: format!("expected \"key = value\", got \"{}\"", content.trim()),
        })?;
        let key = key.trim();
        let value = value.trim();
        match key {
            "beta" => draft.beta = Some(parse_f64(value, key, line)?),
            "alpha" => draft.alpha = Some(parse_f64(value, key, line)?),
            "mu1" => draft.mu1 = Some(parse_f64(value, key, line)?),
            "mu2" => draft.mu2 = Some(parse_f64(value, key, line)?),
            "mu3" => draft.mu3 = Some(parse_f64(value, key, line)?),
            "gamma" => draft.gamma = Some(parse_f64(value, key, line)?),
            "rho" => draft.rho = Some(parse_f64(value, key, line)?),
            "n_total" => draft.n_total = Some(parse_f64(value, key, line)?),
            "incidence" => {
                draft.incidence = Some(value.parse::<IncidenceKind>().map_err(|e| CliError::Parse {
                    line,
                    message: e.0,
                })?)
            }
            "method" => draft.method = Some(value.to_ascii_lowercase()),
            "step" => draft.step = Some(parse_f64(value, key, line)?),
            "abs_tol" => draft.abs_tol = Some(parse_f64(value, key, line)?),
            "rel_tol" => draft.rel_tol = Some(parse_f64(value, key, line)?),
            "min_step" => draft.min_step = Some(parse_f64(value, key, line)?),
            "max_step" => draft.max_step = Some(parse_f64(value, key, line)?),
            "t_max" => draft.t_max = Some(parse_f64(value, key, line)?),
            "convergence_radius" => draft.convergence_radius = Some(parse_f64(value, key, line)?),
            "convergence_window" => draft.convergence_window = Some(parse_usize(value, key, line)?),
            "guard_tol" => draft.guard_tol = Some(parse_f64(value, key, line)?),
            "initial" => draft.initial.push(parse_initial(value, line)?),
            "sweep" => draft.sweep = Some(parse_sweep(value, line)?),
            "out" => draft.out = Some(PathBuf::from(value)),
            "svg" => draft.svg = Some(parse_bool(value, key, line)?),
            "resolution" => draft.resolution = Some(parse_usize(value, key, line)?),
            "margin" => draft.margin = Some(parse_f64(value, key, line)?),
            "inset" => draft.inset = Some(parse_f64(value, key, line)?),
            other => {
                return Err(CliError::Parse {
                    line,
                    message: format!("unknown key \"{other}\""),
                })
            }
        }
    }
    Ok(draft)
}

fn method_from(name: &str, draft: &Draft) -> Result<Method, CliError> {
    let default = Method::default();
    let (abs_default, rel_default, min_default, max_default) = match default {
        Method::Rk45Adaptive { abs_tol, rel_tol, min_step, max_step } => {
            (abs_tol, rel_tol, min_step, max_step)
        }
        Method::Rk4Fixed { .. } => unreachable!("default method is adaptive"),
    };
    match name {
        "rk45" | "rk45_adaptive" => Ok(Method::Rk45Adaptive {
            abs_tol: draft.abs_tol.unwrap_or(abs_default),
            rel_tol: draft.rel_tol.unwrap_or(rel_default),
            min_step: draft.min_step.unwrap_or(min_default),
            max_step: draft.max_step.unwrap_or(max_default),
        }),
        "rk4" | "rk4_fixed" => Ok(Method::Rk4Fixed { step: draft.step.unwrap_or(0.05) }),
        other => Err(CliError::Validation(format!(
            "method must be rk45 or rk4 (got \"{other}\")"
        ))),
    }
}

/// Assemble the final configuration: file values first, flags on top,
/// defaults for the rest, then parameter validation.
pub fn build_run_config(file_text: Option<&str>, overrides: &Overrides) -> Result<RunConfig, CliError> {
    let mut draft = match file_text {
        Some(text) => parse_config_text(text)?,
        None => Draft::default(),
    };

    if let Some(v) = overrides.beta {
        draft.beta = Some(v);
    }
    if let Some(v) = overrides.alpha {
        draft.alpha = Some(v);
    }
    if let Some(v) = overrides.mu1 {
        draft.mu1 = Some(v);
    }
    if let Some(v) = overrides.mu2 {
        draft.mu2 = Some(v);
    }
    if let Some(v) = overrides.mu3 {
        draft.mu3 = Some(v);
    }
    if let Some(v) = overrides.gamma {
        draft.gamma = Some(v);
    }
    if let Some(v) = overrides.rho {
        draft.rho = Some(v);
    }
    if let Some(v) = overrides.n_total {
        draft.n_total = Some(v);
    }
    if let Some(kind) = &overrides.incidence {
        draft.incidence = Some(kind.parse::<IncidenceKind>().map_err(|e| CliError::Validation(e.0))?);
    }
    if let Some(m) = &overrides.method {
        draft.method = Some(m.to_ascii_lowercase());
    }
    if let Some(v) = overrides.step {
        draft.step = Some(v);
    }
    if let Some(v) = overrides.abs_tol {
        draft.abs_tol = Some(v);
    }
    if let Some(v) = overrides.rel_tol {
        draft.rel_tol = Some(v);
    }
    if let Some(v) = overrides.t_max {
        draft.t_max = Some(v);
    }
    if !overrides.initial.is_empty() {
        let mut initial = Vec::new();
        for (k, text) in overrides.initial.iter().enumerate() {
            initial.push(parse_initial(text, k + 1).map_err(|e| match e {
                CliError::Parse { message, .. } => CliError::Validation(message),
                other => other,
            })?);
        }
        draft.initial = initial;
    }
    if let Some(text) = &overrides.sweep {
        draft.sweep = Some(parse_sweep(text, 0).map_err(|e| match e {
            CliError::Parse { message, .. } => CliError::Validation(message),
            other => other,
        })?);
    }
    if let Some(path) = &overrides.out {
        draft.out = Some(path.clone());
    }
    if let Some(v) = overrides.svg {
        draft.svg = Some(v);
    }
    if let Some(v) = overrides.resolution {
        draft.resolution = Some(v);
    }
    if let Some(v) = overrides.margin {
        draft.margin = Some(v);
    }
    if let Some(v) = overrides.inset {
        draft.inset = Some(v);
    }

    for (key, present) in [
        ("beta", draft.beta.is_some()),
        ("mu2", draft.mu2.is_some()),
        ("mu3", draft.mu3.is_some()),
        ("gamma", draft.gamma.is_some()),
    ] {
        if !present {
            return Err(CliError::Validation(format!("{key} is required")));
        }
    }

    let params = Params::new(
        draft.beta.expect("checked above"),
        draft.alpha.unwrap_or(0.0),
        draft.mu1.unwrap_or(0.0),
        draft.mu2.expect("checked above"),
        draft.mu3.expect("checked above"),
        draft.gamma.expect("checked above"),
        draft.rho.unwrap_or(0.0),
        draft.n_total.unwrap_or(1.0),
        draft.incidence.unwrap_or(IncidenceKind::NonMonotone),
    )
    .map_err(|e| CliError::Validation(e.0))?;

    let method_name = draft.method.clone().unwrap_or_else(|| "rk45".to_string());
    let defaults = IntegratorConfig::default();
    let integrator = IntegratorConfig {
        method: method_from(&method_name, &draft)?,
        t_max: draft.t_max.unwrap_or(defaults.t_max),
        convergence_radius: draft.convergence_radius.unwrap_or(defaults.convergence_radius),
        convergence_window: draft.convergence_window.unwrap_or(defaults.convergence_window),
        guard_tol: draft.guard_tol.unwrap_or(defaults.guard_tol),
    };
    integrator.validate().map_err(|e| CliError::Validation(e.to_string()))?;

    Ok(RunConfig {
        params,
        integrator,
        initial_conditions: draft.initial,
        sweep: draft.sweep,
        out_dir: draft.out.unwrap_or_else(|| PathBuf::from(".")),
        emit_svg: draft.svg.unwrap_or(false),
        scan_resolution: draft.resolution.unwrap_or(certify::DEFAULT_SCAN_RESOLUTION),
        scan_margin: draft.margin.unwrap_or(certify::DEFAULT_MARGIN),
        scan_inset: draft.inset.unwrap_or(certify::DEFAULT_BOUNDARY_INSET),
    })
}
