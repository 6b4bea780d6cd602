//! Run configuration. Three layers are merged in order: built-in defaults,
//! a flat `key = value` file, then command-line flags. File keys are the
//! flag names without the leading dashes.

use std::fs;
use std::path::{Path, PathBuf};

use clap::{Parser, ValueEnum};
use ionnm_core::{dephasing::MIN_BETA_OMEGA_MAX, MIN_ABS_DELTA};

use crate::error::{CliError, Result};
use crate::output::sig12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Mode {
    Curve,
    Sweep,
    Validate,
    Spectrum,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Csv,
    Json,
}

#[derive(Debug, Clone, PartialEq)]
pub struct List(pub Vec<f64>);

fn parse_list(s: &str) -> Result<List, String> {
    let v = s
        .split(',')
        .map(|x| x.trim())
        .filter(|x| !x.is_empty())
        .map(|x| x.parse::<f64>().map_err(|e| format!("{x:?}: {e}")))
        .collect::<Result<Vec<_>, _>>()?;
    if v.is_empty() {
        return Err("empty list".into());
    }
    Ok(List(v))
}

/// One configuration layer; every field is optional so layers can be merged.
#[derive(Debug, Default, Parser)]
#[command(name = "ionnm", version, about = "Dephasing and non-Markovianity of a probe ion in a ring crystal")]
pub struct Layer {
    #[arg(long, value_enum)]
    pub mode: Option<Mode>,
    /// Number of ions, even and at least 4.
    #[arg(long)]
    pub n_ions: Option<usize>,
    /// Relative distance from the linear/zigzag transition.
    #[arg(long, allow_hyphen_values = true)]
    pub delta: Option<f64>,
    /// Comma-separated deltas; replaces --delta.
    #[arg(long, value_parser = parse_list, allow_hyphen_values = true)]
    pub delta_list: Option<List>,
    /// Comma-separated beta * omega_max values, `inf` for zero temperature.
    #[arg(long, value_parser = parse_list)]
    pub beta_omega_max: Option<List>,
    #[arg(long)]
    pub eta: Option<f64>,
    #[arg(long)]
    pub t_max: Option<f64>,
    #[arg(long)]
    pub dt: Option<f64>,
    /// Upper integration limit of the measure.
    #[arg(long)]
    pub t_trunc: Option<f64>,
    /// Output file; a directory in curve mode. Standard output when absent.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Worker threads for sweeps, 0 for one per core.
    #[arg(long)]
    pub jobs: Option<usize>,
    #[arg(long, value_enum)]
    pub format: Option<Format>,
    /// Environment modes kept by the exact oracle in validate mode.
    #[arg(long)]
    pub oracle_modes: Option<usize>,
    /// Fock cutoff per oracle mode; chosen from the thermal tail if absent.
    #[arg(long)]
    pub n_max: Option<usize>,
    /// Configuration file, read before the flags.
    #[arg(long, env = "IONNM_CONFIG")]
    pub config: Option<PathBuf>,
}

impl Layer {
    /// Reads a `key = value` file. Blank lines and `#` comments are skipped.
    pub fn from_file(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
        let mut argv = vec!["ionnm".to_string()];
        for (no, line) in text.lines().enumerate() {
            let line = line.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| CliError::Params(format!("{}:{}: expected key = value", path.display(), no + 1)))?;
            let key = key.trim().replace('_', "-");
            if key == "config" {
                return Err(CliError::Params(format!("{}: nested config files are not supported", path.display())));
            }
            argv.push(format!("--{key}={}", value.trim()));
        }
        let mut layer = Self::try_parse_from(argv).map_err(|e| CliError::Params(format!("{}: {e}", path.display())))?;
        layer.config = None;
        Ok(layer)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub mode: Mode,
    pub n_ions: usize,
    pub deltas: Vec<f64>,
    pub betas: Vec<f64>,
    pub eta: f64,
    pub t_max: f64,
    pub dt: f64,
    pub t_trunc: f64,
    pub out: Option<PathBuf>,
    pub jobs: usize,
    pub format: Format,
    pub oracle_modes: usize,
    pub n_max: Option<usize>,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            mode: Mode::Curve,
            n_ions: 100,
            deltas: vec![0.1],
            betas: vec![0.3],
            eta: 0.1,
            t_max: 200.0,
            dt: 0.01,
            t_trunc: 120.0,
            out: None,
            jobs: 0,
            format: Format::Csv,
            oracle_modes: 3,
            n_max: None,
        }
    }
}

impl RunConfig {
    pub fn apply(&mut self, l: Layer) -> Result<()> {
        if l.delta.is_some() && l.delta_list.is_some() {
            return Err(CliError::Params("delta and delta-list are mutually exclusive".into()));
        }
        macro_rules! take {
            ($($f:ident),*) => { $(if let Some(v) = l.$f { self.$f = v; })* };
        }
        take!(mode, n_ions, eta, t_max, dt, t_trunc, jobs, format, oracle_modes);
        if let Some(d) = l.delta {
            self.deltas = vec![d];
        }
        if let Some(List(v)) = l.delta_list {
            self.deltas = v;
        }
        if let Some(List(v)) = l.beta_omega_max {
            self.betas = v;
        }
        if l.out.is_some() {
            self.out = l.out;
        }
        if l.n_max.is_some() {
            self.n_max = l.n_max;
        }
        Ok(())
    }

    /// Defaults, then the file named by `--config` or `IONNM_CONFIG`, then
    /// the flags themselves.
    pub fn resolve(flags: Layer) -> Result<Self> {
        let mut cfg = Self::default();
        if let Some(path) = &flags.config {
            cfg.apply(Layer::from_file(path)?)?;
        }
        cfg.apply(flags)?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(CliError::Params(m));
        if self.n_ions < 4 || self.n_ions % 2 == 1 {
            return bad(format!("n-ions must be even and >= 4, got {}", self.n_ions));
        }
        for (name, v) in [("eta", self.eta), ("t-max", self.t_max), ("dt", self.dt), ("t-trunc", self.t_trunc)] {
            if !(v.is_finite() && v > 0.0) {
                return bad(format!("{name} must be positive and finite, got {v}"));
            }
        }
        if self.dt > self.t_max || self.dt > self.t_trunc {
            return bad("dt must not exceed t-max or t-trunc".into());
        }
        if self.deltas.iter().any(|d| !d.is_finite()) {
            return bad("deltas must be finite".into());
        }
        // Sweeps record a too-small delta as a failed point instead.
        if self.mode != Mode::Sweep {
            if let Some(d) = self.deltas.iter().find(|d| d.abs() < MIN_ABS_DELTA) {
                return bad(format!("|delta| must be >= {MIN_ABS_DELTA}, got {d}"));
            }
        }
        if let Some(b) = self.betas.iter().find(|b| !(**b > 0.0)) {
            return bad(format!("beta-omega-max must be positive or inf, got {b}"));
        }
        if self.betas.iter().any(|&b| b < MIN_BETA_OMEGA_MAX) {
            log::warn!("beta-omega-max below {MIN_BETA_OMEGA_MAX} lies outside the validated range");
        }
        if self.oracle_modes == 0 {
            return bad("oracle-modes must be at least 1".into());
        }
        Ok(())
    }

    fn mode_name(&self) -> &'static str {
        match self.mode {
            Mode::Curve => "curve",
            Mode::Sweep => "sweep",
            Mode::Validate => "validate",
            Mode::Spectrum => "spectrum",
        }
    }

    /// Resolved settings as written into every output header. The output
    /// path and thread count are left out so that they cannot change the
    /// bytes of a result.
    pub fn echo(&self) -> Vec<(&'static str, String)> {
        let list = |v: &[f64]| v.iter().map(|&x| sig12(x)).collect::<Vec<_>>().join(",");
        let mut out = vec![
            ("mode", self.mode_name().to_string()),
            ("n-ions", self.n_ions.to_string()),
            ("delta-list", list(&self.deltas)),
            ("beta-omega-max", list(&self.betas)),
            ("eta", sig12(self.eta)),
            ("t-max", sig12(self.t_max)),
            ("dt", sig12(self.dt)),
            ("t-trunc", sig12(self.t_trunc)),
        ];
        if self.mode == Mode::Validate {
            out.push(("oracle-modes", self.oracle_modes.to_string()));
            out.push(("n-max", self.n_max.map_or("auto".into(), |n| n.to_string())));
        }
        out
    }
}
