//! Run configuration: defaults, presets, `key = value` files and flags all go
//! through [`RunConfig::set`].

use std::fmt;
use std::path::PathBuf;

use dicke_quench::model::{ModelParams, Operator, Parity};
use dicke_quench::presets::{uniform_grid, BasisChoice, InitialChoice, Preset};
use dicke_quench::quench::{TimeGrid, MODIFIED_THRESHOLD};
use dicke_quench::{Error, Result};

/// Coupling grid, kept in the form it was written.
#[derive(Clone, Debug, PartialEq)]
pub enum LambdaGrid {
    Range { start: f64, stop: f64, points: usize },
    List(Vec<f64>),
}

impl LambdaGrid {
    pub fn values(&self) -> Vec<f64> {
        match self {
            LambdaGrid::Range { start, stop, points } => uniform_grid(*start, *stop, *points),
            LambdaGrid::List(v) => v.clone(),
        }
    }

    fn parse(s: &str) -> Result<Self> {
        let bad = || {
            Error::InvalidGrid(format!(
                "lambda grid must be start:stop:points or a comma list, got {s:?}"
            ))
        };
        let parts: Vec<&str> = s.split(':').map(str::trim).collect();
        if parts.len() == 3 {
            let start = parse_f64("lambda_grid", parts[0])?;
            let stop = parse_f64("lambda_grid", parts[1])?;
            let points: usize = parts[2].parse().map_err(|_| bad())?;
            if points < 1 || (points == 1 && start != stop) {
                return Err(bad());
            }
            return Ok(LambdaGrid::Range { start, stop, points });
        }
        if parts.len() != 1 {
            return Err(bad());
        }
        s.split(',')
            .map(|x| parse_f64("lambda_grid", x))
            .collect::<Result<Vec<_>>>()
            .map(LambdaGrid::List)
    }
}

impl fmt::Display for LambdaGrid {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            LambdaGrid::Range { start, stop, points } => {
                write!(f, "{}:{}:{points}", fmt_f64(*start), fmt_f64(*stop))
            }
            LambdaGrid::List(v) => {
                let s: Vec<String> = v.iter().map(|x| fmt_f64(*x)).collect();
                f.write_str(&s.join(","))
            }
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum GridKind {
    Log,
    Linear,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum DispersionMode {
    All,
    Lowest,
}

#[derive(Clone, Debug, PartialEq)]
pub struct RunConfig {
    pub omega: f64,
    pub omega0: f64,
    pub delta: f64,
    pub two_j: u32,
    pub n_max: u32,
    pub basis: BasisChoice,
    pub lambda_i: f64,
    pub lambda_f: f64,
    pub lambda_grid: Option<LambdaGrid>,
    pub initial: InitialChoice,
    pub observable: Operator,
    pub lambda_lattice: Option<f64>,
    pub overlay: bool,
    /// Lattice energy window in units of `omega0 j`.
    pub energy_window: Option<(f64, f64)>,
    pub time_grid: GridKind,
    pub t_min: Option<f64>,
    pub t_max: Option<f64>,
    pub t_points: usize,
    pub population_floor: f64,
    pub threshold: f64,
    pub kernel_width: Option<f64>,
    pub dispersion_mode: DispersionMode,
    pub m_max: Option<u32>,
    pub preset: Option<String>,
    pub out: PathBuf,
}

/// Keys accepted in config files and as `--key` flags, in provenance order.
pub const KEYS: [&str; 25] = [
    "omega",
    "omega0",
    "delta",
    "two_j",
    "n_max",
    "basis",
    "lambda_i",
    "lambda_f",
    "lambda_grid",
    "initial",
    "observable",
    "lambda_lattice",
    "overlay",
    "energy_window",
    "time_grid",
    "t_min",
    "t_max",
    "t_points",
    "population_floor",
    "threshold",
    "kernel_width",
    "dispersion_mode",
    "m_max",
    "preset",
    "out",
];

/// Keys left out of the provenance line: they do not change any number.
const NOT_RECORDED: [&str; 1] = ["out"];

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            omega: 1.0,
            omega0: 1.0,
            delta: 0.0,
            two_j: 40,
            n_max: 100,
            basis: BasisChoice::Parity(Parity::Even),
            lambda_i: 0.0,
            lambda_f: 0.0,
            lambda_grid: None,
            initial: InitialChoice::Index(0),
            observable: Operator::PhotonNumber,
            lambda_lattice: None,
            overlay: true,
            energy_window: None,
            time_grid: GridKind::Log,
            t_min: None,
            t_max: None,
            t_points: 2000,
            population_floor: 1e-6,
            threshold: MODIFIED_THRESHOLD,
            kernel_width: None,
            dispersion_mode: DispersionMode::All,
            m_max: None,
            preset: None,
            out: PathBuf::from("."),
        }
    }
}

pub fn fmt_f64(x: f64) -> String {
    if x != 0.0 && x.is_finite() && (x.abs() < 1e-5 || x.abs() >= 1e16) {
        format!("{x:e}")
    } else {
        format!("{x}")
    }
}

fn parse_f64(key: &str, v: &str) -> Result<f64> {
    let x: f64 = v
        .trim()
        .parse()
        .map_err(|_| Error::InvalidParameter(format!("{key}: expected a number, got {v:?}")))?;
    if !x.is_finite() {
        return Err(Error::InvalidParameter(format!("{key}: must be finite")));
    }
    Ok(x)
}

fn parse_u32(key: &str, v: &str) -> Result<u32> {
    v.trim()
        .parse()
        .map_err(|_| Error::InvalidParameter(format!("{key}: expected a non-negative integer, got {v:?}")))
}

fn parse_auto(key: &str, v: &str) -> Result<Option<f64>> {
    match v.trim() {
        "auto" | "none" | "" => Ok(None),
        s => parse_f64(key, s).map(Some),
    }
}

fn fmt_auto(x: Option<f64>) -> String {
    x.map_or_else(|| "auto".to_string(), fmt_f64)
}

impl RunConfig {
    pub fn from_preset(p: &Preset) -> Self {
        let grid = p
            .lambda_grid
            .map(|(start, stop, points)| LambdaGrid::Range { start, stop, points });
        Self {
            omega: p.omega,
            omega0: p.omega0,
            delta: p.delta,
            two_j: p.two_j,
            n_max: p.n_max,
            basis: p.basis,
            lambda_i: p.lambda_i,
            lambda_f: p.lambda_f,
            lambda_grid: grid,
            initial: p.initial,
            observable: p.observable,
            lambda_lattice: p.lambda_lattice,
            preset: Some(p.name.to_string()),
            ..Self::default()
        }
    }

    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        let v = value.trim();
        match key {
            "omega" => self.omega = parse_f64(key, v)?,
            "omega0" => self.omega0 = parse_f64(key, v)?,
            "delta" => self.delta = parse_f64(key, v)?,
            "two_j" => self.two_j = parse_u32(key, v)?,
            "n_max" => self.n_max = parse_u32(key, v)?,
            "basis" => self.basis = v.parse()?,
            "lambda_i" => self.lambda_i = parse_f64(key, v)?,
            "lambda_f" => self.lambda_f = parse_f64(key, v)?,
            "lambda_grid" => {
                self.lambda_grid = match v {
                    "none" | "" => None,
                    _ => Some(LambdaGrid::parse(v)?),
                }
            }
            "initial" => self.initial = v.parse()?,
            "observable" => {
                self.observable = match v {
                    "photon_number" | "n" => Operator::PhotonNumber,
                    "jz" | "Jz" => Operator::Jz,
                    _ => {
                        return Err(Error::InvalidParameter(format!(
                            "observable must be photon_number or jz, got {v:?}"
                        )))
                    }
                }
            }
            "lambda_lattice" => self.lambda_lattice = parse_auto(key, v)?,
            "overlay" => {
                self.overlay = match v {
                    "true" | "yes" | "1" => true,
                    "false" | "no" | "0" => false,
                    _ => return Err(Error::InvalidParameter(format!("overlay: expected true/false, got {v:?}"))),
                }
            }
            "energy_window" => {
                self.energy_window = match v {
                    "none" | "" => None,
                    _ => {
                        let (a, b) = v.split_once(':').ok_or_else(|| {
                            Error::InvalidParameter(format!("energy_window must be lo:hi, got {v:?}"))
                        })?;
                        let (a, b) = (parse_f64(key, a)?, parse_f64(key, b)?);
                        if b <= a {
                            return Err(Error::InvalidParameter("energy_window: empty interval".into()));
                        }
                        Some((a, b))
                    }
                }
            }
            "time_grid" => {
                self.time_grid = match v {
                    "log" => GridKind::Log,
                    "linear" => GridKind::Linear,
                    _ => return Err(Error::InvalidParameter(format!("time_grid must be log or linear, got {v:?}"))),
                }
            }
            "t_min" => self.t_min = parse_auto(key, v)?,
            "t_max" => self.t_max = parse_auto(key, v)?,
            "t_points" => {
                self.t_points = parse_u32(key, v)? as usize;
                if self.t_points < 2 {
                    return Err(Error::InvalidGrid("t_points must be at least 2".into()));
                }
            }
            "population_floor" => self.population_floor = parse_f64(key, v)?,
            "threshold" => self.threshold = parse_f64(key, v)?,
            "kernel_width" => self.kernel_width = parse_auto(key, v)?,
            "dispersion_mode" => {
                self.dispersion_mode = match v {
                    "all" => DispersionMode::All,
                    "lowest" => DispersionMode::Lowest,
                    _ => return Err(Error::InvalidParameter(format!("dispersion_mode must be all or lowest, got {v:?}"))),
                }
            }
            "m_max" => {
                self.m_max = match v {
                    "auto" | "none" | "" => None,
                    _ => Some(parse_u32(key, v)?),
                }
            }
            "preset" => self.preset = Some(v.to_string()),
            "out" => self.out = PathBuf::from(v),
            _ => {
                return Err(Error::InvalidParameter(format!(
                    "unknown key {key:?}; known keys: {}",
                    KEYS.join(", ")
                )))
            }
        }
        Ok(())
    }

    pub fn get(&self, key: &str) -> String {
        match key {
            "omega" => fmt_f64(self.omega),
            "omega0" => fmt_f64(self.omega0),
            "delta" => fmt_f64(self.delta),
            "two_j" => self.two_j.to_string(),
            "n_max" => self.n_max.to_string(),
            "basis" => self.basis.to_string(),
            "lambda_i" => fmt_f64(self.lambda_i),
            "lambda_f" => fmt_f64(self.lambda_f),
            "lambda_grid" => self.lambda_grid.as_ref().map_or_else(|| "none".into(), |g| g.to_string()),
            "initial" => self.initial.to_string(),
            "observable" => match self.observable {
                Operator::Jz => "jz".into(),
                _ => "photon_number".into(),
            },
            "lambda_lattice" => fmt_auto(self.lambda_lattice),
            "overlay" => self.overlay.to_string(),
            "energy_window" => self
                .energy_window
                .map_or_else(|| "none".into(), |(a, b)| format!("{}:{}", fmt_f64(a), fmt_f64(b))),
            "time_grid" => match self.time_grid {
                GridKind::Log => "log".into(),
                GridKind::Linear => "linear".into(),
            },
            "t_min" => fmt_auto(self.t_min),
            "t_max" => fmt_auto(self.t_max),
            "t_points" => self.t_points.to_string(),
            "population_floor" => fmt_f64(self.population_floor),
            "threshold" => fmt_f64(self.threshold),
            "kernel_width" => fmt_auto(self.kernel_width),
            "dispersion_mode" => match self.dispersion_mode {
                DispersionMode::All => "all".into(),
                DispersionMode::Lowest => "lowest".into(),
            },
            "m_max" => self.m_max.map_or_else(|| "auto".into(), |m| m.to_string()),
            "preset" => self.preset.clone().unwrap_or_else(|| "none".into()),
            "out" => self.out.display().to_string(),
            _ => String::new(),
        }
    }

    /// Applies a line-oriented `key = value` text; `#` starts a comment.
    pub fn apply_text(&mut self, text: &str, origin: &str) -> Result<()> {
        for (no, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (k, v) = line.split_once('=').ok_or_else(|| {
                Error::InvalidParameter(format!("{origin}:{}: expected key = value", no + 1))
            })?;
            self.set(k.trim(), v).map_err(|e| {
                Error::InvalidParameter(format!("{origin}:{}: {e}", no + 1))
            })?;
        }
        Ok(())
    }

    /// Every numerically relevant key as `key=value`, separated by `; `.
    pub fn provenance(&self) -> String {
        KEYS.iter()
            .filter(|k| !NOT_RECORDED.contains(k))
            .map(|k| format!("{k}={}", self.get(k)))
            .collect::<Vec<_>>()
            .join("; ")
    }

    pub fn params(&self) -> Result<ModelParams> {
        ModelParams::new(self.omega, self.omega0, self.delta, self.two_j, self.n_max)
    }

    pub fn lambdas(&self) -> Result<Vec<f64>> {
        self.lambda_grid
            .as_ref()
            .map(LambdaGrid::values)
            .ok_or_else(|| Error::InvalidGrid("this command needs lambda_grid".into()))
    }

    /// Explicit time grid, or `None` when the run should pick one from its scalars.
    pub fn time_grid(&self) -> Result<Option<TimeGrid>> {
        match (self.t_min, self.t_max) {
            (None, None) => Ok(None),
            (lo, Some(hi)) => {
                let g = match self.time_grid {
                    GridKind::Log => TimeGrid::log(lo.unwrap_or(hi * 1e-6), hi, self.t_points, true)?,
                    GridKind::Linear => TimeGrid::linear(lo.unwrap_or(0.0), hi, self.t_points)?,
                };
                Ok(Some(g))
            }
            (Some(_), None) => Err(Error::InvalidGrid("t_min given without t_max".into())),
        }
    }
}
