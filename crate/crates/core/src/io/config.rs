//! Flat `key = value` run configuration.
//!
//! Keys carry a dotted section prefix (`run.`, `params.`, `macro.`,
//! `output.`, `quantify.`). Blank lines and lines starting with `#` are
//! ignored. `run.scenario` loads a preset first; every other key overrides
//! on top of it, regardless of line order.

use std::collections::BTreeMap;
use std::fmt;
use std::path::PathBuf;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::micro::{check_tau_leap, MicroMode, Placement};
use crate::params::{scenario_preset, PhysicalParams, Scenario};
use crate::par::Exec;
use crate::quantify::QuantSettings;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Engine {
    MicroFull,
    MicroAveraged,
    Macro,
}

impl Engine {
    pub fn is_micro(self) -> bool {
        !matches!(self, Engine::Macro)
    }

    pub fn micro_mode(self) -> Option<MicroMode> {
        match self {
            Engine::MicroFull => Some(MicroMode::Full),
            Engine::MicroAveraged => Some(MicroMode::Averaged),
            Engine::Macro => None,
        }
    }

    /// Default time step for desk-scale runs.
    pub fn default_dt(self) -> f64 {
        match self {
            Engine::MicroFull => 1e-3,
            Engine::MicroAveraged => 0.01,
            Engine::Macro => 0.02,
        }
    }
}

impl fmt::Display for Engine {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Engine::MicroFull => "micro_full",
            Engine::MicroAveraged => "micro_averaged",
            Engine::Macro => "macro",
        })
    }
}

impl FromStr for Engine {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "micro_full" => Ok(Engine::MicroFull),
            "micro_averaged" => Ok(Engine::MicroAveraged),
            "macro" => Ok(Engine::Macro),
            _ => Err(Error::Config(format!(
                "unknown engine `{s}` (expected micro_full, micro_averaged or macro)"
            ))),
        }
    }
}

/// Initial data: `uniform` for particles, `perturbed_uniform` for
/// densities, `half_split` for both.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InitChoice {
    Uniform,
    PerturbedUniform,
    HalfSplit,
}

impl fmt::Display for InitChoice {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            InitChoice::Uniform => "uniform",
            InitChoice::PerturbedUniform => "perturbed_uniform",
            InitChoice::HalfSplit => "half_split",
        })
    }
}

impl FromStr for InitChoice {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "uniform" => Ok(InitChoice::Uniform),
            "perturbed_uniform" => Ok(InitChoice::PerturbedUniform),
            "half_split" => Ok(InitChoice::HalfSplit),
            _ => Err(Error::Config(format!(
                "unknown init `{s}` (expected uniform, perturbed_uniform or half_split)"
            ))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GridFormat {
    Text,
    Binary,
}

impl fmt::Display for GridFormat {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            GridFormat::Text => "text",
            GridFormat::Binary => "binary",
        })
    }
}

impl FromStr for GridFormat {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "text" => Ok(GridFormat::Text),
            "binary" => Ok(GridFormat::Binary),
            _ => Err(Error::Config(format!("unknown grid format `{s}` (expected text or binary)"))),
        }
    }
}

/// Everything needed to run one experiment.
#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    /// Preset label, or `custom`.
    pub scenario: String,
    pub params: PhysicalParams,
    pub engine: Engine,
    pub init: InitChoice,
    pub t_end: f64,
    pub dt: f64,
    pub seed: u64,
    pub output_dir: PathBuf,
    pub snapshot_stride: u64,
    pub parallel: bool,
    pub n_cells: usize,
    pub init_amplitude: f64,
    pub grid_format: GridFormat,
    pub quantify: bool,
    pub quant: QuantSettings,
}

/// Desk-scale horizon used when `run.t_end` is not given.
pub const DEFAULT_T_END: f64 = 500.0;
/// Horizon of the long reference runs.
pub const FULL_T_END: f64 = 8000.0;

impl RunConfig {
    pub fn new(engine: Engine, params: PhysicalParams) -> Self {
        let init = if engine.is_micro() { InitChoice::Uniform } else { InitChoice::PerturbedUniform };
        Self {
            scenario: "custom".into(),
            params,
            engine,
            init,
            t_end: DEFAULT_T_END,
            dt: engine.default_dt(),
            seed: 1,
            output_dir: PathBuf::from("out"),
            snapshot_stride: 1000,
            parallel: true,
            n_cells: 50,
            init_amplitude: 0.01,
            grid_format: GridFormat::Text,
            quantify: true,
            quant: QuantSettings::default(),
        }
    }

    pub fn from_scenario(sc: &Scenario, engine: Engine) -> Self {
        Self {
            scenario: sc.name.clone(),
            ..Self::new(engine, sc.params.clone())
        }
    }

    pub fn exec(&self) -> Exec {
        if self.parallel { Exec::Parallel } else { Exec::Sequential }
    }

    pub fn placement(&self) -> Placement {
        match self.init {
            InitChoice::HalfSplit => Placement::HalfSplit,
            _ => Placement::Uniform,
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.params.validate().map_err(|e| Error::Config(e.to_string()))?;
        let pos = |name: &str, v: f64| {
            if v > 0.0 && v.is_finite() {
                Ok(())
            } else {
                Err(Error::Config(format!("{name} = {v} must be positive")))
            }
        };
        pos("run.t_end", self.t_end)?;
        pos("run.dt", self.dt)?;
        if self.snapshot_stride == 0 {
            return Err(Error::Config("run.snapshot_stride must be positive".into()));
        }
        match (self.engine.is_micro(), self.init) {
            (true, InitChoice::PerturbedUniform) => {
                return Err(Error::Config("particle engines take init = uniform or half_split".into()))
            }
            (false, InitChoice::Uniform) => {
                return Err(Error::Config("the macro engine takes init = perturbed_uniform or half_split".into()))
            }
            _ => {}
        }
        if self.engine == Engine::MicroFull {
            check_tau_leap(&self.params, self.dt)?;
        }
        if self.engine == Engine::Macro && !(self.init_amplitude >= 0.0) {
            return Err(Error::Config("macro.init_amplitude must be nonnegative".into()));
        }
        Ok(())
    }

    /// Parse a configuration; unset keys keep their engine defaults.
    pub fn parse(text: &str) -> Result<Self> {
        let mut entries = BTreeMap::new();
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| Error::Config(format!("line {}: expected `key = value`", lineno + 1)))?;
            let (k, v) = (k.trim(), v.trim());
            if find_key(k).is_none() {
                return Err(Error::Config(format!("line {}: unknown key `{k}`", lineno + 1)));
            }
            if entries.insert(k.to_string(), v.to_string()).is_some() {
                return Err(Error::Config(format!("line {}: duplicate key `{k}`", lineno + 1)));
            }
        }
        let engine: Engine = entries.get("run.engine").map(|v| v.parse()).transpose()?.unwrap_or(Engine::Macro);
        let mut cfg = match entries.get("run.scenario") {
            Some(name) if name != "custom" => {
                let sc = scenario_preset(name).map_err(|e| Error::Config(e.to_string()))?;
                Self::from_scenario(&sc, engine)
            }
            _ => Self::new(engine, PhysicalParams::default()),
        };
        if !entries.contains_key("run.init") {
            cfg.init = Self::new(engine, PhysicalParams::default()).init;
        }
        for (k, v) in &entries {
            if k == "run.scenario" || k == "run.engine" {
                continue;
            }
            cfg.set(k, v)?;
        }
        Ok(cfg)
    }

    /// Set one key from its text value.
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        let k = find_key(key).ok_or_else(|| Error::Config(format!("unknown key `{key}`")))?;
        (k.set)(self, value.trim())
    }

    pub fn get(&self, key: &str) -> Option<String> {
        find_key(key).map(|k| (k.get)(self))
    }

    /// Every key with its resolved value, in registry order.
    pub fn entries(&self) -> Vec<(&'static str, String)> {
        KEYS.iter().map(|k| (k.name, (k.get)(self))).collect()
    }

    /// Canonical text form; parsing it reproduces `self` exactly.
    pub fn to_text(&self) -> String {
        self.entries().into_iter().map(|(k, v)| format!("{k} = {v}\n")).collect()
    }
}

/// One registry entry.
pub struct Key {
    pub name: &'static str,
    pub doc: &'static str,
    get: fn(&RunConfig) -> String,
    set: fn(&mut RunConfig, &str) -> Result<()>,
}

fn parse_val<T: FromStr>(key: &str, v: &str) -> Result<T> {
    v.parse().map_err(|_| Error::Config(format!("{key}: cannot parse `{v}`")))
}

macro_rules! key {
    ($name:literal, $doc:literal, $($field:ident).+) => {
        Key {
            name: $name,
            doc: $doc,
            get: |c| c.$($field).+.to_string(),
            set: |c, v| {
                c.$($field).+ = parse_val($name, v)?;
                Ok(())
            },
        }
    };
}

/// Documented key registry.
pub static KEYS: &[Key] = &[
    Key {
        name: "run.scenario",
        doc: "preset name (IA, IB, ..., IVB) or custom",
        get: |c| c.scenario.clone(),
        set: |c, v| {
            c.scenario = v.to_string();
            Ok(())
        },
    },
    key!("run.engine", "micro_full, micro_averaged or macro", engine),
    key!("run.init", "uniform, perturbed_uniform or half_split", init),
    key!("run.t_end", "final time", t_end),
    key!("run.dt", "time step", dt),
    key!("run.seed", "64-bit seed", seed),
    Key {
        name: "run.output_dir",
        doc: "output directory (relative paths resolve against the output root)",
        get: |c| c.output_dir.display().to_string(),
        set: |c, v| {
            c.output_dir = PathBuf::from(v);
            Ok(())
        },
    },
    key!("run.snapshot_stride", "steps between snapshots", snapshot_stride),
    key!("run.parallel", "use the data-parallel inner loops", parallel),
    key!("params.diffusion_a", "diffusion coefficient of A", params.diffusion_a),
    key!("params.diffusion_b", "diffusion coefficient of B", params.diffusion_b),
    key!("params.mobility", "mobility", params.mobility),
    key!("params.radius", "link rest length and interaction radius R", params.radius),
    key!("params.stiffness_aa", "kappa AA", params.stiffness_aa),
    key!("params.stiffness_bb", "kappa BB", params.stiffness_bb),
    key!("params.base_stiffness_ab", "reference kappa AB (scaled by s)", params.base_stiffness_ab),
    key!("params.base_stiffness_ba", "reference kappa BA (scaled by s)", params.base_stiffness_ba),
    key!("params.inter_scale", "interspecies scale s", params.inter_scale),
    key!("params.nu_ratio_aa", "creation/destruction rate ratio AA", params.nu_ratio_aa),
    key!("params.nu_ratio_bb", "creation/destruction rate ratio BB", params.nu_ratio_bb),
    key!("params.nu_ratio_ab", "creation/destruction rate ratio AB", params.nu_ratio_ab),
    key!("params.nu_d_aa", "destruction rate AA", params.nu_d_aa),
    key!("params.nu_d_bb", "destruction rate BB", params.nu_d_bb),
    key!("params.nu_d_ab", "destruction rate AB", params.nu_d_ab),
    key!("params.pop_ratio", "limit ratio N_A / N_B", params.pop_ratio),
    key!("params.n_a", "number of A particles", params.n_a),
    key!("params.n_b", "number of B particles", params.n_b),
    key!("params.half_length", "half side L of the periodic box", params.half_length),
    key!("params.epsilon", "link remodelling scale", params.epsilon),
    key!("macro.n_cells", "grid cells per axis", n_cells),
    key!("macro.init_amplitude", "relative amplitude of the initial perturbation", init_amplitude),
    key!("output.grid_format", "density dump format: text or binary", grid_format),
    key!("quantify.enabled", "quantify every snapshot", quantify),
    key!("quantify.pixel_size", "pixel side length", quant.raster.pixel_size),
    key!("quantify.disk_radius", "disk radius for particles and density cells", quant.raster.disk_radius),
    key!("quantify.density_jitter", "jitter of density disk centres", quant.density_jitter),
    key!("quantify.threshold_factor", "dominance threshold relative to max density", quant.thresholds.factor),
    key!("quantify.threshold_band", "width of the random-colour band", quant.thresholds.band),
    key!("quantify.threshold_seed", "seed of the random-colour band and jitter", quant.thresholds.seed),
    key!("quantify.remove_isolated", "drop isolated pixels", quant.cleanup.remove_isolated),
    key!("quantify.closing", "apply a 3x3 closing", quant.cleanup.closing),
    key!("quantify.fill_holes", "fill enclosed holes", quant.cleanup.fill_holes),
    key!("quantify.max_hole_fraction", "largest fillable hole as an image fraction", quant.cleanup.max_hole_fraction),
    key!("quantify.min_area", "smallest counted cluster in pixels", quant.cleanup.min_area),
];

pub fn find_key(name: &str) -> Option<&'static Key> {
    KEYS.iter().find(|k| k.name == name)
}
