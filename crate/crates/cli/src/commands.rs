use std::fmt::Write as _;
use std::fs;
use std::path::PathBuf;

use clap::Args;
use cqed_purify::bell::bell_vectors;
use cqed_purify::fock::{auto_dim, husimi_q_grid, trapezoid, uniform_grid, QuadratureSpec};
use cqed_purify::jc::evolve_sequential;
use cqed_purify::open_system::extract_channel;
use cqed_purify::postselect::{asymptotic_success, fidelity_star, quadrature_pdf, success_probability, w2_kraus_matrix, DEFAULT_P_STEP};
use cqed_purify::purification::{
    canonical_input, iterate, resources as resource_table, step_ab, step_ad, AdOptions, Backend, Protocol, Stop,
};
use cqed_purify::config::fmt_num as f;
use cqed_purify::{AtomFieldState, SimConfig, TwoQubitChannel, C};

use crate::{config_error, CliError};

type Out = Result<String, CliError>;

/// Initial two-atom state: `00`, `01`, `10`, `11` or `singlet`.
fn parse_state(s: &str) -> Result<[C<f64>; 4], CliError> {
    let mut c = [C::new(0.0, 0.0); 4];
    match s {
        "00" | "01" | "10" | "11" => {
            let idx = usize::from_str_radix(s, 2).map_err(|e| config_error(e.to_string()))?;
            c[idx] = C::new(1.0, 0.0);
        }
        "singlet" => c = bell_vectors(0.0).psi_minus,
        other => return Err(config_error(format!("unknown state `{other}` (00 | 01 | 10 | 11 | singlet)"))),
    }
    Ok(c)
}

fn parse_list(s: &str) -> Result<Vec<f64>, CliError> {
    s.split(',')
        .map(|t| t.trim().parse::<f64>().map_err(|_| config_error(format!("cannot parse `{t}` in list `{s}`"))))
        .collect()
}

fn header(cfg: &SimConfig, command: &str) -> String {
    let mut s = format!("# cqed-purify {command}\n");
    s.push_str(&cfg.header_lines());
    s
}

fn evolve(cfg: &SimConfig, state: &[C<f64>; 4]) -> Result<AtomFieldState<f64>, CliError> {
    Ok(evolve_sequential(state, cfg.alpha(), cfg.gtau1, cfg.gtau2(), cfg.resolved_n_f()?)?)
}

#[derive(Args, Debug)]
pub struct QfuncArgs {
    #[arg(long, default_value = "00")]
    pub state: String,
    #[arg(long = "x-min", allow_hyphen_values = true)]
    pub x_min: Option<f64>,
    #[arg(long = "x-max", allow_hyphen_values = true)]
    pub x_max: Option<f64>,
    #[arg(long = "p-min", allow_hyphen_values = true, default_value_t = -8.0)]
    pub p_min: f64,
    #[arg(long = "p-max", allow_hyphen_values = true, default_value_t = 8.0)]
    pub p_max: f64,
    #[arg(long, default_value_t = 0.1)]
    pub step: f64,
}

fn check_range(lo: f64, hi: f64, step: f64) -> Result<(), CliError> {
    if !(lo < hi) || !(step > 0.0) {
        return Err(config_error(format!("bad grid: [{lo}, {hi}] with step {step}")));
    }
    Ok(())
}

pub fn qfunc(cfg: &SimConfig, a: &QfuncArgs) -> Out {
    let x0 = (2.0 * cfg.nbar).sqrt();
    let (x_min, x_max) = (a.x_min.unwrap_or(x0 - 8.0), a.x_max.unwrap_or(x0 + 4.0));
    check_range(x_min, x_max, a.step)?;
    check_range(a.p_min, a.p_max, a.step)?;
    let st = evolve(cfg, &parse_state(&a.state)?)?;
    let xs = uniform_grid(x_min, x_max, a.step);
    let ps = uniform_grid(a.p_min, a.p_max, a.step);
    let q = husimi_q_grid(st.components(), &xs, &ps);
    let cell = (xs[1] - xs[0]) * (ps[1] - ps[0]) * 0.5;
    let mut out = header(cfg, "qfunc");
    let _ = writeln!(out, "# state = {}", a.state);
    let _ = writeln!(out, "# grid_integral = {}", f(q.iter().sum::<f64>() * cell));
    out.push_str("x,p,Q\n");
    for (ip, p) in ps.iter().enumerate() {
        for (ix, x) in xs.iter().enumerate() {
            let _ = writeln!(out, "{},{},{}", f(*x), f(*p), f(q[ip * xs.len() + ix]));
        }
    }
    Ok(out)
}

#[derive(Args, Debug)]
pub struct QuadDistArgs {
    #[arg(long, default_value = "00")]
    pub state: String,
    #[arg(long = "p-min", allow_hyphen_values = true, default_value_t = -6.0)]
    pub p_min: f64,
    #[arg(long = "p-max", allow_hyphen_values = true, default_value_t = 6.0)]
    pub p_max: f64,
    #[arg(long, default_value_t = 0.01)]
    pub step: f64,
}

pub fn quad_dist(cfg: &SimConfig, a: &QuadDistArgs) -> Out {
    check_range(a.p_min, a.p_max, a.step)?;
    let c = parse_state(&a.state)?;
    let st = evolve(cfg, &c)?;
    let grid = uniform_grid(a.p_min, a.p_max, a.step);
    let pdf = quadrature_pdf(&st, cfg.theta(), &grid);
    let ph = success_probability(&st, cfg.theta(), cfg.p_window, DEFAULT_P_STEP)?;
    let asym = asymptotic_success(&c, cfg.phi, cfg.p_window);
    let mut out = header(cfg, "quad-dist");
    let _ = writeln!(out, "# state = {}", a.state);
    let _ = writeln!(out, "# grid_integral = {}", f(trapezoid(&grid, &pdf)));
    let _ = writeln!(out, "# success_probability = {}", f(ph));
    let _ = writeln!(out, "# asymptotic_divided = {}", f(asym.divided));
    let _ = writeln!(out, "# asymptotic_multiplied = {}", f(asym.multiplied));
    out.push_str("p,P\n");
    for (p, v) in grid.iter().zip(&pdf) {
        let _ = writeln!(out, "{},{}", f(*p), f(*v));
    }
    Ok(out)
}

#[derive(Args, Debug)]
pub struct FstarArgs {
    #[arg(long, default_value = "00")]
    pub state: String,
    #[arg(long = "nbar-list", default_value = "10,50,100,200")]
    pub nbar_list: String,
    #[arg(long = "gtau-min", default_value_t = 0.05)]
    pub gtau_min: f64,
    #[arg(long = "gtau-max", default_value_t = 4.0)]
    pub gtau_max: f64,
    #[arg(long = "gtau-step", default_value_t = 0.05)]
    pub gtau_step: f64,
}

pub fn fstar_sweep(cfg: &SimConfig, a: &FstarArgs) -> Out {
    check_range(a.gtau_min, a.gtau_max, a.gtau_step)?;
    if a.gtau_min < 0.0 {
        return Err(config_error("gtau-min must be >= 0"));
    }
    let c = parse_state(&a.state)?;
    let nbars = parse_list(&a.nbar_list)?;
    let ratio = if cfg.gtau1 > 0.0 { cfg.gtau2() / cfg.gtau1 } else { 1.0 };
    let spec = QuadratureSpec::new(cfg.theta(), cfg.p());
    let mut out = header(cfg, "fstar-sweep");
    let _ = writeln!(out, "# state = {}", a.state);
    let _ = writeln!(out, "# gtau2_over_gtau1 = {}", f(ratio));
    out.push_str("nbar,gtau,fstar\n");
    for nbar in nbars {
        let n_f = if cfg.n_f > 0 { cfg.n_f } else { auto_dim(nbar)? };
        let alpha = C::from_polar(nbar.sqrt(), cfg.phi);
        for gtau in uniform_grid(a.gtau_min, a.gtau_max, a.gtau_step) {
            let st = evolve_sequential(&c, alpha, gtau, gtau * ratio, n_f)?;
            let fid = fidelity_star(&st, &spec, &c, cfg.phi)?;
            let _ = writeln!(out, "{},{},{}", f(nbar), f(gtau), f(fid));
        }
    }
    Ok(out)
}

#[derive(Args, Debug)]
pub struct PurifyArgs {
    /// `aB` or `aD`.
    #[arg(long, default_value = "aD")]
    pub protocol: String,
    /// `ideal`, `kraus` or `channel`.
    #[arg(long, default_value = "ideal")]
    pub backend: String,
    /// Channel JSON for the `channel` backend (extracted from the config
    /// when absent).
    #[arg(long = "channel-file")]
    pub channel_file: Option<PathBuf>,
    /// Initial fidelity.
    #[arg(long, default_value_t = 0.7)]
    pub f0: f64,
    /// Fidelity of a second, different input: runs a single round.
    #[arg(long = "f0-second")]
    pub f0_second: Option<f64>,
    #[arg(long, default_value_t = 5)]
    pub iterations: usize,
    /// Stop once this fidelity is reached instead of after `iterations`.
    #[arg(long)]
    pub target: Option<f64>,
    /// Skip the final b3 x b3 rotation of aD.
    #[arg(long = "no-final-rotation")]
    pub no_final_rotation: bool,
}

fn backend(cfg: &SimConfig, a: &PurifyArgs) -> Result<Backend<f64>, CliError> {
    match a.backend.as_str() {
        "ideal" => Ok(Backend::Ideal { phi: cfg.phi }),
        "kraus" => Ok(Backend::Kraus(w2_kraus_matrix(cfg)?)),
        "channel" => match &a.channel_file {
            Some(path) => {
                let text = fs::read_to_string(path).map_err(|e| config_error(format!("cannot read {}: {e}", path.display())))?;
                let doc: serde_json::Value =
                    serde_json::from_str(&text).map_err(|e| config_error(format!("{}: {e}", path.display())))?;
                Ok(Backend::Channel(TwoQubitChannel::from_json(&doc)?))
            }
            None => Ok(Backend::Channel(extract_channel(cfg)?)),
        },
        other => Err(config_error(format!("unknown backend `{other}` (ideal | kraus | channel)"))),
    }
}

pub fn purify(cfg: &SimConfig, a: &PurifyArgs) -> Out {
    let protocol: Protocol = a.protocol.parse()?;
    let backend = backend(cfg, a)?;
    let ad = AdOptions { final_rotation: !a.no_final_rotation };
    let mut out = header(cfg, "purify");
    let _ = writeln!(out, "# protocol = {protocol}");
    let _ = writeln!(out, "# backend = {}", a.backend);
    let _ = writeln!(out, "# f0 = {}", f(a.f0));
    if protocol == Protocol::AD {
        let _ = writeln!(out, "# final_rotation = {}", ad.final_rotation);
    }
    let first = canonical_input(protocol, a.f0)?;
    if let Some(f1) = a.f0_second {
        let second = canonical_input(protocol, f1)?;
        let r = match protocol {
            Protocol::AB => step_ab(&first, &second, &backend)?,
            Protocol::AD => step_ad(&first, &second, &backend, ad)?,
        };
        let _ = writeln!(out, "# f0_second = {}", f(f1));
        out.push_str("iter,F,P_step,cumulative_pairs\n");
        let _ = writeln!(out, "1,{},{},{}", f(r.fidelity), f(r.success_probability), f(2.0 / r.success_probability));
        return Ok(out);
    }
    let stop = match a.target {
        Some(t) => Stop::TargetFidelity(t),
        None => Stop::Iterations(a.iterations),
    };
    let traj = iterate(protocol, &first, stop, &backend, ad)?;
    for w in &traj.warnings {
        eprintln!("warning: {w}");
    }
    out.push_str("iter,F,P_step,cumulative_pairs\n");
    for p in &traj.points {
        let _ = writeln!(out, "{},{},{},{}", p.iteration, f(p.fidelity), f(p.success_probability), f(p.cumulative_pairs));
    }
    Ok(out)
}

pub fn channel(cfg: &SimConfig) -> Out {
    let ch = extract_channel::<f64>(cfg)?;
    let v = ch.validity();
    eprintln!(
        "hermiticity residual {:e}, Choi min eigenvalue {:e}, trace weights {:?}",
        v.hermiticity_residual, v.choi_min_eigenvalue, v.trace_weights
    );
    let meta = serde_json::json!({ "command": "channel", "config": cfg.to_json() });
    let mut s = serde_json::to_string_pretty(&ch.to_json(meta)).map_err(|e| CliError::Numerical(e.to_string()))?;
    s.push('\n');
    Ok(s)
}

#[derive(Args, Debug)]
pub struct ResourcesArgs {
    #[arg(long, default_value = "aD")]
    pub protocol: String,
    #[arg(long, default_value_t = 0.7)]
    pub f0: f64,
    #[arg(long, default_value_t = 0.999999)]
    pub target: f64,
}

pub fn resources(cfg: &SimConfig, a: &ResourcesArgs) -> Out {
    let protocol: Protocol = a.protocol.parse()?;
    let rows = resource_table(protocol, a.f0, a.target)?;
    let mut out = header(cfg, "resources");
    let _ = writeln!(out, "# protocol = {protocol}");
    let _ = writeln!(out, "# f0 = {}", f(a.f0));
    let _ = writeln!(out, "# target = {}", f(a.target));
    out.push_str("N,F_N,NQ\n");
    for r in rows {
        let _ = writeln!(out, "{},{},{}", r.iteration, f(r.fidelity), f(r.cumulative_pairs));
    }
    Ok(out)
}
