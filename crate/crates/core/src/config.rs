//! Physical and numerical parameters of a simulation run.
//!
//! Rates are in units of `g`, times as `gτ`. The text format is flat
//! `key = value` lines with `#` comments; keys are the field names below.

use std::fmt::Write as _;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fock::auto_dim;
use crate::open_system::{IntegratorKind, LossParams};
use crate::scalar::{lit, Real, C};

/// Quadrature value used when losses are switched on and none is given.
pub const LOSSY_DEFAULT_P: f64 = 0.15;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SimConfig {
    pub nbar: f64,
    pub phi: f64,
    pub gtau1: f64,
    /// Defaults to `gtau1`.
    pub gtau2: Option<f64>,
    pub gtau_f: f64,
    /// Defaults to `phi + π/2`.
    pub theta: Option<f64>,
    /// Defaults to 0 for lossless runs and 0.15 with losses.
    pub p: Option<f64>,
    pub p_window: [f64; 2],
    pub kappa: f64,
    pub gamma: f64,
    #[serde(rename = "n_T")]
    pub n_t: f64,
    /// Fock cutoff; 0 selects [`auto_dim`].
    pub n_f: usize,
    /// Relative integrator tolerance.
    pub tol: f64,
    pub integrator: IntegratorKind,
    pub output: Option<String>,
}

impl Default for SimConfig {
    fn default() -> Self {
        Self {
            nbar: 100.0,
            phi: 0.0,
            gtau1: 2.0,
            gtau2: None,
            gtau_f: 3.0,
            theta: None,
            p: None,
            p_window: [-2.0, 2.0],
            kappa: 0.0,
            gamma: 0.0,
            n_t: 0.1,
            n_f: 0,
            tol: 1e-8,
            integrator: IntegratorKind::RungeKutta,
            output: None,
        }
    }
}

pub const CONFIG_KEYS: [&str; 15] = [
    "nbar", "phi", "gtau1", "gtau2", "gtau_f", "theta", "p", "p_window", "kappa", "gamma", "n_T", "n_f", "tol",
    "integrator", "output",
];

fn parse_num<V: FromStr>(key: &str, value: &str) -> Result<V> {
    value
        .trim()
        .parse::<V>()
        .map_err(|_| Error::domain(format!("config key `{key}`: cannot parse `{value}`")))
}

fn parse_optional(key: &str, value: &str) -> Result<Option<f64>> {
    let v = value.trim();
    if v.is_empty() || v.eq_ignore_ascii_case("auto") {
        Ok(None)
    } else {
        parse_num(key, v).map(Some)
    }
}

/// Parses `lo,hi`.
pub fn parse_window(value: &str) -> Result<[f64; 2]> {
    let parts: Vec<&str> = value.split(',').map(str::trim).collect();
    if parts.len() != 2 {
        return Err(Error::domain(format!("p_window expects `lo,hi`, got `{value}`")));
    }
    Ok([parse_num("p_window", parts[0])?, parse_num("p_window", parts[1])?])
}

impl SimConfig {
    /// Sets one field from its textual value.
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        match key {
            "nbar" => self.nbar = parse_num(key, value)?,
            "phi" => self.phi = parse_num(key, value)?,
            "gtau1" => self.gtau1 = parse_num(key, value)?,
            "gtau2" => self.gtau2 = parse_optional(key, value)?,
            "gtau_f" => self.gtau_f = parse_num(key, value)?,
            "theta" => self.theta = parse_optional(key, value)?,
            "p" => self.p = parse_optional(key, value)?,
            "p_window" => self.p_window = parse_window(value)?,
            "kappa" => self.kappa = parse_num(key, value)?,
            "gamma" => self.gamma = parse_num(key, value)?,
            "n_T" => self.n_t = parse_num(key, value)?,
            "n_f" => self.n_f = parse_num(key, value)?,
            "tol" => self.tol = parse_num(key, value)?,
            "integrator" => self.integrator = value.trim().parse()?,
            "output" => {
                let v = value.trim();
                self.output = if v.is_empty() { None } else { Some(v.to_string()) };
            }
            other => return Err(Error::domain(format!("unknown config key `{other}`"))),
        }
        Ok(())
    }

    /// Applies every `key = value` line of a config file on top of `self`.
    pub fn merge_text(&mut self, text: &str) -> Result<()> {
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| Error::domain(format!("config line {}: expected `key = value`", lineno + 1)))?;
            self.set(key.trim(), value)?;
        }
        Ok(())
    }

    pub fn from_text(text: &str) -> Result<Self> {
        let mut cfg = Self::default();
        cfg.merge_text(text)?;
        Ok(cfg)
    }

    pub fn gtau2(&self) -> f64 {
        self.gtau2.unwrap_or(self.gtau1)
    }

    pub fn theta(&self) -> f64 {
        self.theta.unwrap_or(self.phi + std::f64::consts::FRAC_PI_2)
    }

    pub fn is_lossy(&self) -> bool {
        self.kappa > 0.0 || self.gamma > 0.0
    }

    pub fn p(&self) -> f64 {
        self.p.unwrap_or(if self.is_lossy() { LOSSY_DEFAULT_P } else { 0.0 })
    }

    /// `α = √n̄ e^{iφ}`.
    pub fn alpha<T: Real>(&self) -> C<T> {
        C::from_polar(lit::<T>(self.nbar.sqrt()), lit::<T>(self.phi))
    }

    pub fn resolved_n_f(&self) -> Result<usize> {
        if self.n_f > 0 {
            Ok(self.n_f)
        } else {
            auto_dim(self.nbar)
        }
    }

    pub fn loss_params<T: Real>(&self) -> LossParams<T> {
        LossParams {
            kappa: lit(self.kappa),
            gamma: lit(self.gamma),
            n_thermal: lit(self.n_t),
        }
    }

    /// Physical-range checks shared by every entry point.
    pub fn validate(&self) -> Result<()> {
        let finite = [self.nbar, self.phi, self.gtau1, self.gtau2(), self.gtau_f, self.theta(), self.p(), self.kappa, self.gamma, self.n_t, self.tol];
        if finite.iter().any(|v| !v.is_finite()) {
            return Err(Error::domain("config contains a non-finite value"));
        }
        if self.nbar <= 0.0 {
            return Err(Error::domain(format!("nbar must be > 0, got {}", self.nbar)));
        }
        if self.gtau1 < 0.0 || self.gtau2() < 0.0 || self.gtau_f < 0.0 {
            return Err(Error::domain("interaction and free times must be >= 0"));
        }
        if self.kappa < 0.0 || self.gamma < 0.0 || self.n_t < 0.0 {
            return Err(Error::domain("kappa, gamma and n_T must be >= 0"));
        }
        if !(self.p_window[0] < self.p_window[1]) {
            return Err(Error::domain(format!("p_window must satisfy lo < hi, got {:?}", self.p_window)));
        }
        if !(self.tol > 0.0 && self.tol < 1.0) {
            return Err(Error::domain(format!("tol must lie in (0, 1), got {}", self.tol)));
        }
        Ok(())
    }

    /// Effective configuration as `# key = value` comment lines.
    pub fn header_lines(&self) -> String {
        let mut s = String::new();
        let n_f = self.resolved_n_f().map(|n| n.to_string()).unwrap_or_else(|_| "auto".into());
        let f = fmt_num;
        let _ = writeln!(s, "# nbar = {}", f(self.nbar));
        let _ = writeln!(s, "# phi = {}", f(self.phi));
        let _ = writeln!(s, "# gtau1 = {}", f(self.gtau1));
        let _ = writeln!(s, "# gtau2 = {}", f(self.gtau2()));
        let _ = writeln!(s, "# gtau_f = {}", f(self.gtau_f));
        let _ = writeln!(s, "# theta = {}", f(self.theta()));
        let _ = writeln!(s, "# p = {}", f(self.p()));
        let _ = writeln!(s, "# p_window = {},{}", f(self.p_window[0]), f(self.p_window[1]));
        let _ = writeln!(s, "# kappa = {}", f(self.kappa));
        let _ = writeln!(s, "# gamma = {}", f(self.gamma));
        let _ = writeln!(s, "# n_T = {}", f(self.n_t));
        let _ = writeln!(s, "# n_f = {n_f}");
        let _ = writeln!(s, "# tol = {}", f(self.tol));
        let _ = writeln!(s, "# integrator = {}", self.integrator);
        s
    }

    pub fn to_json(&self) -> serde_json::Value {
        let mut v = serde_json::to_value(self).unwrap_or(serde_json::Value::Null);
        v["gtau2"] = self.gtau2().into();
        v["theta"] = self.theta().into();
        v["p"] = self.p().into();
        if let Ok(n) = self.resolved_n_f() {
            v["n_f"] = n.into();
        }
        v
    }
}

/// Shortest round-trip text for `x`, switching to exponent form outside
/// `[1e-4, 1e16)` so tiny tails stay readable.
pub fn fmt_num(x: f64) -> String {
    let a = x.abs();
    if a == 0.0 || !a.is_finite() || (1e-4..1e16).contains(&a) {
        format!("{x}")
    } else {
        format!("{x:e}")
    }
}
