#![allow(clippy::neg_cmp_op_on_partial_ord)]

use std::fs;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use cqed_purify::{Error, IntegratorKind, SimConfig};

mod commands;

/// Cavity-QED entanglement purification: field statistics, postselected
/// fidelities, purification runs and lossy channel extraction.
#[derive(Parser, Debug)]
#[command(name = "cqed-purify", version, about)]
struct Cli {
    #[command(flatten)]
    config: ConfigArgs,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Debug, Default)]
struct ConfigArgs {
    /// Flat `key = value` config file; flags override its values.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Mean photon number of the coherent input.
    #[arg(long, global = true, allow_hyphen_values = true)]
    nbar: Option<f64>,
    /// Phase of the coherent input.
    #[arg(long, global = true, allow_hyphen_values = true)]
    phi: Option<f64>,
    /// Interaction time of the first atom, in units of 1/g.
    #[arg(long, global = true, allow_hyphen_values = true)]
    gtau1: Option<f64>,
    /// Interaction time of the second atom (defaults to gtau1).
    #[arg(long, global = true, allow_hyphen_values = true)]
    gtau2: Option<f64>,
    /// Free flight between the two atoms.
    #[arg(long = "gtau_f", global = true, allow_hyphen_values = true)]
    gtau_f: Option<f64>,
    /// Homodyne phase (defaults to phi + pi/2).
    #[arg(long, global = true, allow_hyphen_values = true)]
    theta: Option<f64>,
    /// Postselected quadrature value (0, or 0.15 when lossy).
    #[arg(long, global = true, allow_hyphen_values = true)]
    p: Option<f64>,
    /// Integration window `lo,hi`.
    #[arg(long = "p_window", global = true, allow_hyphen_values = true)]
    p_window: Option<String>,
    /// Cavity decay rate in units of g.
    #[arg(long, global = true, allow_hyphen_values = true)]
    kappa: Option<f64>,
    /// Atomic decay rate in units of g.
    #[arg(long, global = true, allow_hyphen_values = true)]
    gamma: Option<f64>,
    /// Mean thermal photon number.
    #[arg(long = "n_T", global = true, allow_hyphen_values = true)]
    n_t: Option<f64>,
    /// Fock cutoff (0 chooses automatically).
    #[arg(long = "n_f", global = true)]
    n_f: Option<usize>,
    /// Relative integrator tolerance.
    #[arg(long, global = true, allow_hyphen_values = true)]
    tol: Option<f64>,
    /// `rk45` or `krylov`.
    #[arg(long, global = true)]
    integrator: Option<String>,
    /// Output file (stdout when absent).
    #[arg(long, global = true)]
    output: Option<String>,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Husimi Q function of the field after both interactions (x, p, Q).
    Qfunc(commands::QfuncArgs),
    /// Quadrature distribution P(p) of the field (p, P).
    QuadDist(commands::QuadDistArgs),
    /// Postselected fidelity against the ideal branch (nbar, gtau, fstar).
    FstarSweep(commands::FstarArgs),
    /// Iterated purification (iter, F, P_step, cumulative_pairs).
    Purify(commands::PurifyArgs),
    /// Lossy postselected two-qubit channel as JSON.
    Channel,
    /// Rounds and pair cost to reach a target fidelity (N, F_N, NQ).
    Resources(commands::ResourcesArgs),
}

/// Failure classes with their exit codes.
#[derive(Debug)]
pub enum CliError {
    Config(String),
    Numerical(String),
    Precondition(String),
}

impl CliError {
    fn code(&self) -> u8 {
        match self {
            CliError::Config(_) => 2,
            CliError::Numerical(_) => 3,
            CliError::Precondition(_) => 4,
        }
    }

    fn message(&self) -> &str {
        match self {
            CliError::Config(m) | CliError::Numerical(m) | CliError::Precondition(m) => m,
        }
    }
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        let msg = e.to_string();
        if e.is_numerical() {
            CliError::Numerical(msg)
        } else if matches!(e, Error::Precondition(_) | Error::UndefinedFidelity(_)) {
            CliError::Precondition(msg)
        } else {
            CliError::Config(msg)
        }
    }
}

fn config_error(msg: impl Into<String>) -> CliError {
    CliError::Config(msg.into())
}

fn build_config(args: &ConfigArgs) -> Result<SimConfig, CliError> {
    let mut cfg = SimConfig::default();
    if let Some(path) = &args.config {
        let text = fs::read_to_string(path).map_err(|e| config_error(format!("cannot read {}: {e}", path.display())))?;
        cfg.merge_text(&text)?;
    }
    macro_rules! take {
        ($field:ident) => {
            if let Some(v) = args.$field {
                cfg.$field = v;
            }
        };
    }
    take!(nbar);
    take!(phi);
    take!(gtau1);
    take!(gtau_f);
    take!(kappa);
    take!(gamma);
    take!(n_t);
    take!(n_f);
    take!(tol);
    if args.gtau2.is_some() {
        cfg.gtau2 = args.gtau2;
    }
    if args.theta.is_some() {
        cfg.theta = args.theta;
    }
    if args.p.is_some() {
        cfg.p = args.p;
    }
    if let Some(w) = &args.p_window {
        cfg.p_window = cqed_purify::config::parse_window(w)?;
    }
    if let Some(s) = &args.integrator {
        cfg.integrator = s.parse::<IntegratorKind>()?;
    }
    if args.output.is_some() {
        cfg.output = args.output.clone();
    }
    cfg.validate()?;
    Ok(cfg)
}

fn emit(cfg: &SimConfig, text: &str) -> Result<(), CliError> {
    match &cfg.output {
        Some(path) => fs::write(path, text).map_err(|e| config_error(format!("cannot write {path}: {e}"))),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn run(cli: Cli) -> Result<(), CliError> {
    let cfg = build_config(&cli.config)?;
    let text = match &cli.command {
        Command::Qfunc(a) => commands::qfunc(&cfg, a)?,
        Command::QuadDist(a) => commands::quad_dist(&cfg, a)?,
        Command::FstarSweep(a) => commands::fstar_sweep(&cfg, a)?,
        Command::Purify(a) => commands::purify(&cfg, a)?,
        Command::Channel => commands::channel(&cfg)?,
        Command::Resources(a) => commands::resources(&cfg, a)?,
    };
    emit(&cfg, &text)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {}", e.message());
            ExitCode::from(e.code())
        }
    }
}
