//! Flat `key = value` configuration with dotted section keys.
//!
//! Blank lines and text after `#` are ignored. Keys may appear once.

use std::collections::{BTreeMap, BTreeSet};
use std::f64::consts::PI;
use std::path::{Path, PathBuf};

use helmns_core::verify::{self, CheckOptions};
use helmns_core::Boundary;
use serde_json::Value;

use crate::CliError;

/// Parsed but uninterpreted entries, in key order.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct RawConfig {
    entries: BTreeMap<String, String>,
}

fn config_err(msg: impl Into<String>) -> CliError {
    CliError::Config(msg.into())
}

impl RawConfig {
    pub fn parse(text: &str) -> Result<Self, CliError> {
        let mut entries = BTreeMap::new();
        for (no, line) in text.lines().enumerate() {
            let line = line.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| config_err(format!("line {}: expected 'key = value'", no + 1)))?;
            let (key, value) = (key.trim(), value.trim());
            let valid = !key.is_empty()
                && key
                    .chars()
                    .all(|c| c.is_ascii_lowercase() || c.is_ascii_digit() || c == '_' || c == '.');
            if !valid {
                return Err(config_err(format!("line {}: invalid key '{key}'", no + 1)));
            }
            if entries.insert(key.to_string(), value.to_string()).is_some() {
                return Err(config_err(format!("line {}: duplicate key '{key}'", no + 1)));
            }
        }
        Ok(Self { entries })
    }

    pub fn read(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| config_err(format!("cannot read {}: {e}", path.display())))?;
        Self::parse(&text)
    }

    pub fn entries(&self) -> &BTreeMap<String, String> {
        &self.entries
    }
}

/// Tracks which keys were consumed so leftovers can be rejected.
struct Reader<'a> {
    raw: &'a RawConfig,
    used: BTreeSet<&'a str>,
}

impl<'a> Reader<'a> {
    fn new(raw: &'a RawConfig) -> Self {
        Self {
            raw,
            used: BTreeSet::new(),
        }
    }

    fn get(&mut self, key: &str) -> Option<&'a str> {
        let (k, v) = self.raw.entries.get_key_value(key)?;
        self.used.insert(k.as_str());
        Some(v.as_str())
    }

    fn parsed<T>(&mut self, key: &str, default: T, parse: impl Fn(&str) -> Option<T>) -> Result<T, CliError> {
        match self.get(key) {
            None => Ok(default),
            Some(v) => parse(v).ok_or_else(|| config_err(format!("{key}: cannot parse '{v}'"))),
        }
    }

    fn real(&mut self, key: &str, default: f64) -> Result<f64, CliError> {
        self.parsed(key, default, parse_real)
    }

    fn count(&mut self, key: &str, default: usize) -> Result<usize, CliError> {
        self.parsed(key, default, |v| v.parse().ok())
    }

    fn flag(&mut self, key: &str, default: bool) -> Result<bool, CliError> {
        self.parsed(key, default, |v| match v {
            "true" | "yes" | "1" => Some(true),
            "false" | "no" | "0" => Some(false),
            _ => None,
        })
    }

    fn triple(&mut self, key: &str, default: [f64; 3]) -> Result<[f64; 3], CliError> {
        self.parsed(key, default, |v| {
            let parts: Vec<f64> = v.split(',').map(parse_real).collect::<Option<_>>()?;
            match parts[..] {
                [x] => Some([x; 3]),
                [x, y, z] => Some([x, y, z]),
                _ => None,
            }
        })
    }

    fn finish(self) -> Result<(), CliError> {
        let unknown: Vec<&str> = self
            .raw
            .entries
            .keys()
            .map(String::as_str)
            .filter(|k| !self.used.contains(k))
            .collect();
        if unknown.is_empty() {
            Ok(())
        } else {
            Err(config_err(format!("unknown key(s): {}", unknown.join(", "))))
        }
    }
}

/// Number, optionally written as a multiple of π (`pi`, `2pi`, `0.5pi`).
pub fn parse_real(v: &str) -> Option<f64> {
    let v = v.trim();
    if let Some(m) = v.strip_suffix("pi") {
        let m = m.trim().trim_end_matches('*');
        let factor = if m.is_empty() { 1.0 } else { m.parse::<f64>().ok()? };
        return Some(factor * PI);
    }
    v.parse().ok()
}

#[derive(Clone, Debug, PartialEq)]
pub struct GridSpec {
    pub n: [usize; 3],
    pub length: [f64; 3],
    pub boundary: Boundary,
}

#[derive(Clone, Debug, PartialEq)]
pub enum InitialCondition {
    Zero,
    TaylorGreen,
    Abc { a: f64, b: f64, c: f64 },
    GaussianVortex { center: [f64; 3], scale: f64, strength: f64 },
    RandomSolenoidal { seed: u64, kmax: usize, amplitude: f64 },
}

pub const INITIAL_CONDITIONS: &[&str] = &["zero", "taylor_green", "abc", "gaussian_vortex", "random_solenoidal"];

#[derive(Clone, Debug, PartialEq)]
pub struct SimSpec {
    pub nu: f64,
    pub rho: f64,
    pub dt: f64,
    pub t_end: f64,
    pub steps: usize,
    pub snapshot_every: usize,
    pub dealias: bool,
    pub ic: InitialCondition,
}

#[derive(Clone, Debug, PartialEq)]
pub struct OutputSpec {
    pub dir: PathBuf,
    pub json: bool,
    pub csv: bool,
    pub snapshots: bool,
}

#[derive(Clone, Debug, PartialEq)]
pub struct RunConfig {
    pub raw: RawConfig,
    pub grid: GridSpec,
    pub sim: SimSpec,
    pub checks: Vec<String>,
    pub options: CheckOptions,
    pub output: OutputSpec,
}

fn read_grid(r: &mut Reader) -> Result<GridSpec, CliError> {
    let n = r.parsed("grid.n", [32; 3], |v| {
        let parts: Vec<usize> = v.split(',').map(|p| p.trim().parse().ok()).collect::<Option<_>>()?;
        match parts[..] {
            [x] => Some([x; 3]),
            [x, y, z] => Some([x, y, z]),
            _ => None,
        }
    })?;
    let length = r.triple("grid.length", [2.0 * PI; 3])?;
    let boundary = r.parsed("grid.boundary", Boundary::Periodic, |v| match v {
        "periodic" => Some(Boundary::Periodic),
        "truncated_window" => Some(Boundary::TruncatedWindow),
        _ => None,
    })?;
    Ok(GridSpec { n, length, boundary })
}

fn read_ic(r: &mut Reader, grid: &GridSpec) -> Result<InitialCondition, CliError> {
    let name = r.get("sim.ic").unwrap_or("taylor_green");
    let ic = match name {
        "zero" => InitialCondition::Zero,
        "taylor_green" => InitialCondition::TaylorGreen,
        "abc" => InitialCondition::Abc {
            a: r.real("ic.a", 1.0)?,
            b: r.real("ic.b", 1.0)?,
            c: r.real("ic.c", 1.0)?,
        },
        "gaussian_vortex" => {
            let mid = [grid.length[0] / 2.0, grid.length[1] / 2.0, grid.length[2] / 2.0];
            InitialCondition::GaussianVortex {
                center: r.triple("ic.center", mid)?,
                scale: r.real("ic.scale", 1.0)?,
                strength: r.real("ic.strength", 1.0)?,
            }
        }
        "random_solenoidal" => InitialCondition::RandomSolenoidal {
            seed: r.parsed("sim.seed", 0u64, |v| v.parse().ok())?,
            kmax: r.count("ic.kmax", 4)?,
            amplitude: r.real("ic.amplitude", 1.0)?,
        },
        other => {
            return Err(config_err(format!(
                "sim.ic: unknown initial condition '{other}' (expected one of {})",
                INITIAL_CONDITIONS.join(", ")
            )))
        }
    };
    Ok(ic)
}

fn read_sim(r: &mut Reader, grid: &GridSpec) -> Result<SimSpec, CliError> {
    let nu = r.real("sim.nu", 0.1)?;
    let rho = r.real("sim.rho", 1.0)?;
    let dt = r.real("sim.dt", 5e-3)?;
    let t_end = r.real("sim.t_end", 1.0)?;
    for (key, v) in [("sim.nu", nu), ("sim.rho", rho), ("sim.dt", dt)] {
        if !(v > 0.0 && v.is_finite()) {
            return Err(config_err(format!("{key} must be positive, got {v}")));
        }
    }
    if !(t_end >= 0.0 && t_end.is_finite()) {
        return Err(config_err(format!("sim.t_end must be non-negative, got {t_end}")));
    }
    let steps = (t_end / dt).round();
    if (steps * dt - t_end).abs() > 1e-9 * t_end.max(dt) {
        return Err(config_err(format!("sim.t_end = {t_end} is not a whole number of steps of {dt}")));
    }
    let snapshot_every = r.count("sim.snapshot_every", 10)?;
    if snapshot_every == 0 {
        return Err(config_err("sim.snapshot_every must be at least 1"));
    }
    Ok(SimSpec {
        nu,
        rho,
        dt,
        t_end,
        steps: steps as usize,
        snapshot_every,
        dealias: r.flag("sim.dealias", true)?,
        ic: read_ic(r, grid)?,
    })
}

fn read_checks(r: &mut Reader) -> Result<(Vec<String>, CheckOptions), CliError> {
    let list = r.get("checks.run").unwrap_or("all");
    let names: Vec<String> = if list == "all" {
        verify::check_names().into_iter().map(String::from).collect()
    } else {
        list.split(',').map(|s| s.trim().to_string()).filter(|s| !s.is_empty()).collect()
    };
    for name in &names {
        if verify::find_check(name).is_err() {
            return Err(config_err(format!("unknown check '{name}'")));
        }
    }

    // every CheckOptions field may be overridden as `checks.<field>`
    let defaults = serde_json::to_value(CheckOptions::default()).expect("options serialize");
    let Value::Object(mut fields) = defaults else {
        unreachable!("options serialize to an object")
    };
    for (field, value) in fields.iter_mut() {
        let key = format!("checks.{field}");
        let Some(text) = r.get(&key) else { continue };
        *value = match value {
            Value::Bool(_) => Value::Bool(match text {
                "true" => true,
                "false" => false,
                _ => return Err(config_err(format!("{key}: expected true or false, got '{text}'"))),
            }),
            Value::Number(n) if n.is_u64() => Value::from(
                text.parse::<u64>()
                    .map_err(|_| config_err(format!("{key}: expected a whole number, got '{text}'")))?,
            ),
            _ => {
                let v = parse_real(text).ok_or_else(|| config_err(format!("{key}: cannot parse '{text}'")))?;
                if field.ends_with("_tol") && !(v > 0.0) {
                    return Err(config_err(format!("{key}: tolerances must be positive, got {v}")));
                }
                Value::from(v)
            }
        };
    }
    let options: CheckOptions =
        serde_json::from_value(Value::Object(fields)).map_err(|e| config_err(format!("check options: {e}")))?;
    if options.theorem2_k == 0 {
        return Err(config_err("checks.theorem2_k must be at least 1"));
    }
    Ok((names, options))
}

fn read_output(r: &mut Reader) -> Result<OutputSpec, CliError> {
    let dir = PathBuf::from(r.get("output.dir").unwrap_or("helmns_out"));
    let formats = r.get("output.formats").unwrap_or("json,csv");
    let (mut json, mut csv) = (false, false);
    for f in formats.split(',').map(str::trim) {
        match f {
            "json" => json = true,
            "csv" => csv = true,
            other => return Err(config_err(format!("output.formats: unknown format '{other}'"))),
        }
    }
    Ok(OutputSpec {
        dir,
        json,
        csv,
        snapshots: r.flag("output.snapshots", true)?,
    })
}

impl RunConfig {
    pub fn from_raw(raw: RawConfig) -> Result<Self, CliError> {
        let mut r = Reader::new(&raw);
        let grid = read_grid(&mut r)?;
        let sim = read_sim(&mut r, &grid)?;
        let (checks, options) = read_checks(&mut r)?;
        let output = read_output(&mut r)?;
        r.finish()?;
        Ok(Self {
            grid,
            sim,
            checks,
            options,
            output,
            raw: raw.clone(),
        })
    }

    pub fn load(path: &Path) -> Result<Self, CliError> {
        Self::from_raw(RawConfig::read(path)?)
    }
}

/// Input for `compare-backends`: a ladder of window resolutions against one
/// periodic reference grid.
#[derive(Clone, Debug, PartialEq)]
pub struct LadderConfig {
    pub raw: RawConfig,
    pub window_n: Vec<usize>,
    pub window_length: f64,
    pub periodic_n: usize,
    pub periodic_length: f64,
    pub field: LadderField,
    pub output: PathBuf,
}

#[derive(Clone, Debug, PartialEq)]
pub enum LadderField {
    /// Gaussian vortex centred in the window.
    GaussianVortex { scale: f64, strength: f64 },
    /// ABC flow, which does not decay.
    Abc,
}

impl LadderConfig {
    pub fn from_raw(raw: RawConfig) -> Result<Self, CliError> {
        let mut r = Reader::new(&raw);
        let window_n = r.parsed("ladder.window_n", vec![5, 10, 20], |v| {
            v.split(',').map(|p| p.trim().parse().ok()).collect::<Option<Vec<usize>>>()
        })?;
        if window_n.is_empty() {
            return Err(config_err("ladder.window_n is empty"));
        }
        let window_length = r.real("ladder.window_length", 6.0)?;
        let periodic_n = r.count("ladder.periodic_n", 40)?;
        let periodic_length = r.real("ladder.periodic_length", 12.0)?;
        let field = match r.get("ladder.field").unwrap_or("gaussian_vortex") {
            "gaussian_vortex" => LadderField::GaussianVortex {
                scale: r.real("ladder.scale", 1.0)?,
                strength: r.real("ladder.strength", 1.0)?,
            },
            "abc" => LadderField::Abc,
            other => return Err(config_err(format!("ladder.field: unknown field '{other}'"))),
        };
        let output = PathBuf::from(r.get("output.dir").unwrap_or("helmns_out"));
        r.finish()?;
        Ok(Self {
            window_n,
            window_length,
            periodic_n,
            periodic_length,
            field,
            output,
            raw: raw.clone(),
        })
    }

    pub fn load(path: &Path) -> Result<Self, CliError> {
        Self::from_raw(RawConfig::read(path)?)
    }
}
