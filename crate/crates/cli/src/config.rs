//! Flat `key = value` run configuration.

use crate::CliError;
use landau_core::equilibrium::Equilibrium;
use landau_core::linresponse::{InitialDatumSpec, KGrid, SpatialProfile, VelocityProfile};
use landau_core::nonlinear::NonlinearConfig;
use sha2::{Digest, Sha256};
use std::f64::consts::PI;
use std::path::{Path, PathBuf};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum EquilibriumChoice {
    Poisson,
    Maxwellian,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum VelocityChoice {
    Poisson,
    Gaussian,
    Bump,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Mode {
    Direct,
    Picard,
}

#[derive(Clone, Debug, PartialEq)]
pub struct RunConfig {
    pub equilibrium: EquilibriumChoice,
    pub spatial_width: f64,
    pub velocity: VelocityChoice,
    pub velocity_width: f64,
    pub velocity_radius: f64,
    pub amplitude: f64,
    pub n_r: usize,
    pub r_max: f64,
    pub n_u: usize,
    pub n_l: usize,
    pub k_n: usize,
    pub k_min: f64,
    pub k_max: f64,
    pub dt: f64,
    pub t_max: f64,
    pub mode: Mode,
    pub markers_per_cell: usize,
    pub linearized: bool,
    pub control_variate: bool,
    pub reinject: bool,
    pub filter_k_late: Option<f64>,
    pub filter_k_boost: f64,
    pub tol_picard: f64,
    pub picard_max_iter: usize,
    pub picard_stride: usize,
    pub picard_ds: f64,
    pub relaxation: f64,
    pub pad_factor: usize,
    pub quad_tol: f64,
    pub fit_t_min: f64,
    /// `None`: up to t_max.
    pub fit_t_max: Option<f64>,
    pub stat_osc_window: f64,
    pub probe_radius: f64,
    pub output_stride: usize,
    /// 0: let rayon decide.
    pub workers: usize,
    pub output_dir: PathBuf,
}

impl Default for RunConfig {
    fn default() -> Self {
        let nl = NonlinearConfig::default();
        RunConfig {
            equilibrium: EquilibriumChoice::Poisson,
            spatial_width: 2.0,
            velocity: VelocityChoice::Gaussian,
            velocity_width: 1.0,
            velocity_radius: 4.0,
            amplitude: nl.datum.amplitude,
            n_r: nl.n_r,
            r_max: nl.r_max,
            n_u: nl.n_u,
            n_l: nl.n_l,
            k_n: 256,
            k_min: 1e-3,
            k_max: 20.0,
            dt: nl.dt,
            t_max: nl.t_max,
            mode: Mode::Direct,
            markers_per_cell: nl.markers_per_cell,
            linearized: nl.linearized,
            control_variate: nl.control_variate,
            reinject: nl.reinject,
            filter_k_late: nl.filter_k_late,
            filter_k_boost: nl.filter_k_boost,
            tol_picard: nl.tol_picard,
            picard_max_iter: nl.picard_max_iter,
            picard_stride: nl.picard_stride,
            picard_ds: nl.picard_ds,
            relaxation: nl.relaxation,
            pad_factor: nl.pad_factor,
            quad_tol: 1e-12,
            fit_t_min: 10.0,
            fit_t_max: None,
            stat_osc_window: 6.0 * PI,
            probe_radius: 1.0,
            output_stride: 1,
            workers: 0,
            output_dir: PathBuf::from("out"),
        }
    }
}

/// Every accepted key, in serialization order.
pub const KEYS: &[&str] = &[
    "equilibrium",
    "spatial_width",
    "velocity",
    "velocity_width",
    "velocity_radius",
    "amplitude",
    "n_r",
    "r_max",
    "n_u",
    "n_l",
    "k_n",
    "k_min",
    "k_max",
    "dt",
    "t_max",
    "mode",
    "markers_per_cell",
    "linearized",
    "control_variate",
    "reinject",
    "filter_k_late",
    "filter_k_boost",
    "tol_picard",
    "picard_max_iter",
    "picard_stride",
    "picard_ds",
    "relaxation",
    "pad_factor",
    "quad_tol",
    "fit_t_min",
    "fit_t_max",
    "stat_osc_window",
    "probe_radius",
    "output_stride",
    "workers",
    "output_dir",
];

fn parse_num<T: std::str::FromStr>(key: &str, v: &str) -> Result<T, CliError> {
    v.parse()
        .map_err(|_| CliError::Config(format!("{key}: cannot parse {v:?}")))
}

fn parse_bool(key: &str, v: &str) -> Result<bool, CliError> {
    match v {
        "true" | "yes" | "1" => Ok(true),
        "false" | "no" | "0" => Ok(false),
        _ => Err(CliError::Config(format!(
            "{key}: expected true/false, got {v:?}"
        ))),
    }
}

fn parse_opt(key: &str, v: &str) -> Result<Option<f64>, CliError> {
    if v == "none" {
        Ok(None)
    } else {
        parse_num(key, v).map(Some)
    }
}

fn opt_str(x: Option<f64>) -> String {
    x.map_or_else(|| "none".to_string(), |v| v.to_string())
}

impl RunConfig {
    pub fn set(&mut self, key: &str, v: &str) -> Result<(), CliError> {
        match key {
            "equilibrium" => {
                self.equilibrium = match v {
                    "poisson" => EquilibriumChoice::Poisson,
                    "maxwellian" => EquilibriumChoice::Maxwellian,
                    _ => return Err(CliError::Config(format!("unknown equilibrium {v:?}"))),
                }
            }
            "spatial_width" => self.spatial_width = parse_num(key, v)?,
            "velocity" => {
                self.velocity = match v {
                    "poisson" => VelocityChoice::Poisson,
                    "gaussian" => VelocityChoice::Gaussian,
                    "bump" => VelocityChoice::Bump,
                    _ => return Err(CliError::Config(format!("unknown velocity profile {v:?}"))),
                }
            }
            "velocity_width" => self.velocity_width = parse_num(key, v)?,
            "velocity_radius" => self.velocity_radius = parse_num(key, v)?,
            "amplitude" => self.amplitude = parse_num(key, v)?,
            "n_r" => self.n_r = parse_num(key, v)?,
            "r_max" => self.r_max = parse_num(key, v)?,
            "n_u" => self.n_u = parse_num(key, v)?,
            "n_l" => self.n_l = parse_num(key, v)?,
            "k_n" => self.k_n = parse_num(key, v)?,
            "k_min" => self.k_min = parse_num(key, v)?,
            "k_max" => self.k_max = parse_num(key, v)?,
            "dt" => self.dt = parse_num(key, v)?,
            "t_max" => self.t_max = parse_num(key, v)?,
            "mode" => {
                self.mode = match v {
                    "direct" => Mode::Direct,
                    "picard" => Mode::Picard,
                    _ => return Err(CliError::Config(format!("unknown mode {v:?}"))),
                }
            }
            "markers_per_cell" => self.markers_per_cell = parse_num(key, v)?,
            "linearized" => self.linearized = parse_bool(key, v)?,
            "control_variate" => self.control_variate = parse_bool(key, v)?,
            "reinject" => self.reinject = parse_bool(key, v)?,
            "filter_k_late" => self.filter_k_late = parse_opt(key, v)?,
            "filter_k_boost" => self.filter_k_boost = parse_num(key, v)?,
            "tol_picard" => self.tol_picard = parse_num(key, v)?,
            "picard_max_iter" => self.picard_max_iter = parse_num(key, v)?,
            "picard_stride" => self.picard_stride = parse_num(key, v)?,
            "picard_ds" => self.picard_ds = parse_num(key, v)?,
            "relaxation" => self.relaxation = parse_num(key, v)?,
            "pad_factor" => self.pad_factor = parse_num(key, v)?,
            "quad_tol" => self.quad_tol = parse_num(key, v)?,
            "fit_t_min" => self.fit_t_min = parse_num(key, v)?,
            "fit_t_max" => self.fit_t_max = parse_opt(key, v)?,
            "stat_osc_window" => self.stat_osc_window = parse_num(key, v)?,
            "probe_radius" => self.probe_radius = parse_num(key, v)?,
            "output_stride" => self.output_stride = parse_num(key, v)?,
            "workers" => self.workers = parse_num(key, v)?,
            "output_dir" => self.output_dir = PathBuf::from(v),
            _ => return Err(CliError::Config(format!("unknown key {key:?}"))),
        }
        Ok(())
    }

    pub fn get(&self, key: &str) -> String {
        let s = |x: &dyn ToString| x.to_string();
        match key {
            "equilibrium" => match self.equilibrium {
                EquilibriumChoice::Poisson => "poisson".into(),
                EquilibriumChoice::Maxwellian => "maxwellian".into(),
            },
            "spatial_width" => s(&self.spatial_width),
            "velocity" => match self.velocity {
                VelocityChoice::Poisson => "poisson".into(),
                VelocityChoice::Gaussian => "gaussian".into(),
                VelocityChoice::Bump => "bump".into(),
            },
            "velocity_width" => s(&self.velocity_width),
            "velocity_radius" => s(&self.velocity_radius),
            "amplitude" => s(&self.amplitude),
            "n_r" => s(&self.n_r),
            "r_max" => s(&self.r_max),
            "n_u" => s(&self.n_u),
            "n_l" => s(&self.n_l),
            "k_n" => s(&self.k_n),
            "k_min" => s(&self.k_min),
            "k_max" => s(&self.k_max),
            "dt" => s(&self.dt),
            "t_max" => s(&self.t_max),
            "mode" => match self.mode {
                Mode::Direct => "direct".into(),
                Mode::Picard => "picard".into(),
            },
            "markers_per_cell" => s(&self.markers_per_cell),
            "linearized" => s(&self.linearized),
            "control_variate" => s(&self.control_variate),
            "reinject" => s(&self.reinject),
            "filter_k_late" => opt_str(self.filter_k_late),
            "filter_k_boost" => s(&self.filter_k_boost),
            "tol_picard" => s(&self.tol_picard),
            "picard_max_iter" => s(&self.picard_max_iter),
            "picard_stride" => s(&self.picard_stride),
            "picard_ds" => s(&self.picard_ds),
            "relaxation" => s(&self.relaxation),
            "pad_factor" => s(&self.pad_factor),
            "quad_tol" => s(&self.quad_tol),
            "fit_t_min" => s(&self.fit_t_min),
            "fit_t_max" => opt_str(self.fit_t_max),
            "stat_osc_window" => s(&self.stat_osc_window),
            "probe_radius" => s(&self.probe_radius),
            "output_stride" => s(&self.output_stride),
            "workers" => s(&self.workers),
            "output_dir" => self.output_dir.display().to_string(),
            _ => unreachable!("key list and accessor out of sync: {key}"),
        }
    }

    /// Parses `key = value` lines; `#` starts a comment.
    pub fn parse_str(text: &str) -> Result<Self, CliError> {
        let mut cfg = RunConfig::default();
        let mut seen = std::collections::HashSet::new();
        for (no, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (k, v) = line.split_once('=').ok_or_else(|| {
                CliError::Config(format!("line {}: expected key = value", no + 1))
            })?;
            let (k, v) = (k.trim(), v.trim());
            if !seen.insert(k.to_string()) {
                return Err(CliError::Config(format!(
                    "line {}: duplicate key {k:?}",
                    no + 1
                )));
            }
            cfg.set(k, v)?;
        }
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Io(format!("cannot read {}: {e}", path.display())))?;
        Self::parse_str(&text)
    }

    /// Canonical text: every key, in `KEYS` order.
    pub fn serialize(&self) -> String {
        KEYS.iter()
            .map(|k| format!("{k} = {}\n", self.get(k)))
            .collect()
    }

    /// SHA-256 of the canonical text without `output_dir` and `workers`
    /// (neither changes any computed number), hex encoded.
    pub fn hash(&self) -> String {
        let text: String = KEYS
            .iter()
            .filter(|k| !matches!(**k, "output_dir" | "workers"))
            .map(|k| format!("{k} = {}\n", self.get(k)))
            .collect();
        Sha256::digest(text.as_bytes())
            .iter()
            .map(|b| format!("{b:02x}"))
            .collect()
    }

    pub fn validate(&self) -> Result<(), CliError> {
        let bad = |m: String| Err(CliError::Config(m));
        for (name, n) in [
            ("n_r", self.n_r),
            ("n_u", self.n_u),
            ("n_l", self.n_l),
            ("k_n", self.k_n),
        ] {
            if n < 4 {
                return bad(format!("{name} must be ≥ 4, got {n}"));
            }
        }
        if !(self.dt > 0.0 && self.dt <= 0.1) {
            return bad(format!(
                "dt must lie in (0, 0.1] to resolve the unit-frequency carrier, got {}",
                self.dt
            ));
        }
        if !(self.t_max >= self.dt && self.t_max.is_finite()) {
            return bad("t_max must be at least one step".into());
        }
        if !(self.amplitude >= 0.0 && self.amplitude.is_finite()) {
            return bad(format!("amplitude must be ≥ 0, got {}", self.amplitude));
        }
        if !(self.k_min > 0.0 && self.k_max > self.k_min) {
            return bad("need 0 < k_min < k_max (k = 0 is excluded)".into());
        }
        if !(self.r_max > 0.0
            && self.spatial_width > 0.0
            && self.velocity_width > 0.0
            && self.velocity_radius > 0.0)
        {
            return bad("lengths and widths must be positive".into());
        }
        if self.output_stride == 0 {
            return bad("output_stride must be ≥ 1".into());
        }
        if !(self.stat_osc_window > 0.0 && self.quad_tol > 0.0 && self.probe_radius >= 0.0) {
            return bad("stat_osc_window and quad_tol must be positive, probe_radius ≥ 0".into());
        }
        if let Some(hi) = self.fit_t_max {
            if !(hi > self.fit_t_min) {
                return bad("fit_t_max must exceed fit_t_min".into());
            }
        }
        self.nonlinear()
            .validate()
            .map_err(|e| CliError::Config(e.to_string()))
    }

    pub fn n_steps(&self) -> usize {
        (self.t_max / self.dt).round() as usize
    }

    pub fn fit_window(&self) -> (f64, f64) {
        (self.fit_t_min, self.fit_t_max.unwrap_or(self.t_max))
    }

    pub fn equilibrium(&self) -> Equilibrium {
        match self.equilibrium {
            EquilibriumChoice::Poisson => Equilibrium::poisson(),
            EquilibriumChoice::Maxwellian => Equilibrium::maxwellian(),
        }
    }

    pub fn datum(&self) -> InitialDatumSpec {
        let velocity = match self.velocity {
            VelocityChoice::Poisson => VelocityProfile::Poisson,
            VelocityChoice::Gaussian => VelocityProfile::Gaussian {
                width: self.velocity_width,
            },
            VelocityChoice::Bump => VelocityProfile::Bump {
                radius: self.velocity_radius,
            },
        };
        InitialDatumSpec {
            spatial: SpatialProfile::Gaussian {
                width: self.spatial_width,
            },
            velocity,
            amplitude: self.amplitude,
        }
    }

    pub fn kgrid(&self) -> Result<KGrid, CliError> {
        KGrid::log(self.k_n, self.k_min, self.k_max).map_err(|e| CliError::Config(e.to_string()))
    }

    pub fn nonlinear(&self) -> NonlinearConfig {
        NonlinearConfig {
            equilibrium: self.equilibrium(),
            datum: self.datum(),
            n_r: self.n_r,
            r_max: self.r_max,
            n_u: self.n_u,
            n_l: self.n_l,
            dt: self.dt,
            t_max: self.t_max,
            markers_per_cell: self.markers_per_cell,
            linearized: self.linearized,
            control_variate: self.control_variate,
            reinject: self.reinject,
            filter_k_late: self.filter_k_late,
            filter_k_boost: self.filter_k_boost,
            tol_picard: self.tol_picard,
            picard_max_iter: self.picard_max_iter,
            picard_stride: self.picard_stride,
            picard_ds: self.picard_ds,
            relaxation: self.relaxation,
            pad_factor: self.pad_factor,
        }
    }
}
