use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use episdyn::cli::{self, Command, Overrides};

#[derive(Parser)]
#[command(name = "episdyn", version)]
#[command(about = "Analyze, simulate, and certify SIR/SIRS dynamics with non-monotone incidence")]
struct Cli {
    #[command(subcommand)]
    command: CommandArg,

    /// Path to a `key = value` config file
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    /// Transmission rate (overrides the config file)
    #[arg(long, global = true, allow_negative_numbers = true)]
    beta: Option<f64>,

    /// Inhibition coefficient
    #[arg(long, global = true, allow_negative_numbers = true)]
    alpha: Option<f64>,

    /// Susceptible mortality
    #[arg(long, global = true, allow_negative_numbers = true)]
    mu1: Option<f64>,

    /// Infected mortality
    #[arg(long, global = true, allow_negative_numbers = true)]
    mu2: Option<f64>,

    /// Recovered mortality
    #[arg(long, global = true, allow_negative_numbers = true)]
    mu3: Option<f64>,

    /// Recovery rate
    #[arg(long, global = true, allow_negative_numbers = true)]
    gamma: Option<f64>,

    /// Immunity-loss rate (0 for pure SIR)
    #[arg(long, global = true, allow_negative_numbers = true)]
    rho: Option<f64>,

    /// Population size (raw-rate conversion bookkeeping)
    #[arg(long, global = true, allow_negative_numbers = true)]
    n_total: Option<f64>,

    /// Incidence kind: mass_action, holling_ii, or non_monotone
    #[arg(long, global = true)]
    incidence: Option<String>,

    /// Integration method: rk45 or rk4
    #[arg(long, global = true)]
    method: Option<String>,

    /// Fixed step size (rk4)
    #[arg(long, global = true, allow_negative_numbers = true)]
    step: Option<f64>,

    /// Absolute tolerance (rk45)
    #[arg(long, global = true, allow_negative_numbers = true)]
    abs_tol: Option<f64>,

    /// Relative tolerance (rk45)
    #[arg(long, global = true, allow_negative_numbers = true)]
    rel_tol: Option<f64>,

    /// Integration time horizon
    #[arg(long, global = true, allow_negative_numbers = true)]
    t_max: Option<f64>,

    /// Initial condition "s,i" (repeatable)
    #[arg(long, global = true)]
    initial: Vec<String>,

    /// Sweep spec "param:start:stop:count"
    #[arg(long, global = true)]
    sweep: Option<String>,

    /// Output directory
    #[arg(long, global = true)]
    out: Option<PathBuf>,

    /// Emit an SVG phase portrait (simulate)
    #[arg(long, global = true)]
    svg: bool,

    /// Scan grid resolution (certify)
    #[arg(long, global = true)]
    resolution: Option<usize>,

    /// Certification margin (certify)
    #[arg(long, global = true, allow_negative_numbers = true)]
    margin: Option<f64>,

    /// Scan boundary inset (certify)
    #[arg(long, global = true, allow_negative_numbers = true)]
    inset: Option<f64>,
}

#[derive(Subcommand)]
enum CommandArg {
    /// Report the reproduction number, equilibria, and local stability
    Analyze,
    /// Integrate trajectories and write CSV (plus an optional SVG portrait)
    Simulate,
    /// Run divergence and Lyapunov-derivative scans and print certificates
    Certify,
    /// Scan one parameter and tabulate the equilibrium structure
    Sweep,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let command = match cli.command {
        CommandArg::Analyze => Command::Analyze,
        CommandArg::Simulate => Command::Simulate,
        CommandArg::Certify => Command::Certify,
        CommandArg::Sweep => Command::Sweep,
    };
    let overrides = Overrides {
        beta: cli.beta,
        alpha: cli.alpha,
        mu1: cli.mu1,
        mu2: cli.mu2,
        mu3: cli.mu3,
        gamma: cli.gamma,
        rho: cli.rho,
        n_total: cli.n_total,
        incidence: cli.incidence,
        method: cli.method,
        step: cli.step,
        abs_tol: cli.abs_tol,
        rel_tol: cli.rel_tol,
        t_max: cli.t_max,
        initial: cli.initial,
        sweep: cli.sweep,
        out: cli.out,
        svg: if cli.svg { Some(true) } else { None },
        resolution: cli.resolution,
        margin: cli.margin,
        inset: cli.inset,
    };

    match cli::run(command, cli.config.as_deref(), &overrides) {
        Ok(outcome) => {
            print!("{}", outcome.report);
            ExitCode::from(outcome.exit_code as u8)
        }
        Err(err) => {
            eprintln!("error: {err}");
            ExitCode::from(err.exit_code() as u8)
        }
    }
}
