//! JSON-configured parameter sweeps and figure presets, written out as CSV.
//!
//! A [`Config`] describes one protocol run; its optional `sweep` section
//! names one or two parameter paths (such as `system.nu` or `pulses.tp`) and
//! the values to visit. The special path `time` instead samples a single
//! trajectory at the listed instants.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::dynamics::TimeGrid;
use crate::error::{Error, Result};
use crate::model::{FullModelOptions, ModelKind, SystemParams};
use crate::protocols::{clone_phase_covariant, prepare_w_state, BasisOptions, CloningInput, Evolution, ProtocolResult, Setup};
use crate::pulses::{PulseParams, SiteDrive};

/// Every path accepted by `sweep.param` and [`Config::set_param`].
pub const PARAMETER_PATHS: &[&str] = &[
    "system.g",
    "system.delta",
    "system.nu",
    "system.n_sites",
    "system.kappa_c",
    "system.kappa_f",
    "system.kappa",
    "system.gamma",
    "pulses.omega_m",
    "pulses.t0",
    "pulses.t1",
    "pulses.tp",
    "pulses.T",
    "clone.delta_phase",
    "time",
];

const RATE_PATHS: &[&str] = &["system.kappa_c", "system.kappa_f", "system.kappa", "system.gamma"];

/// Marker written in place of a value when a grid point fails.
pub const ERROR_MARKER: &str = "ERROR";

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Protocol {
    #[default]
    PrepareW,
    Clone,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridConfig {
    #[serde(default = "GridConfig::default_dt")]
    pub dt: f64,
    #[serde(default = "GridConfig::default_stride")]
    pub sample_stride: usize,
}

impl GridConfig {
    fn default_dt() -> f64 {
        TimeGrid::DEFAULT_DT
    }

    fn default_stride() -> usize {
        (1.0 / TimeGrid::DEFAULT_DT).round() as usize
    }
}

impl Default for GridConfig {
    fn default() -> Self {
        GridConfig { dt: Self::default_dt(), sample_stride: Self::default_stride() }
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CloneConfig {
    #[serde(default)]
    pub delta_phase: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DriveConfig {
    /// Include the compensating drive tone in the full model.
    #[serde(default = "default_true")]
    pub second_tone: bool,
    /// Per-site schedule; omitted means site 0 on `Ω₀`, the rest on `Ω`.
    #[serde(default)]
    pub sites: Option<Vec<SiteDrive>>,
}

fn default_true() -> bool {
    true
}

impl Default for DriveConfig {
    fn default() -> Self {
        DriveConfig { second_tone: true, sites: None }
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SweepObservable {
    /// Fidelity of the whole register against the protocol target.
    #[default]
    Fidelity,
    /// Mean single-copy fidelity `⟨ψ_in|ρ_k|ψ_in⟩` (cloning only).
    PerCopy,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepConfig {
    pub param: String,
    pub values: Vec<f64>,
    #[serde(default)]
    pub param2: Option<String>,
    #[serde(default)]
    pub values2: Option<Vec<f64>>,
    #[serde(default)]
    pub observable: SweepObservable,
}

impl SweepConfig {
    pub fn one(param: &str, values: Vec<f64>) -> Self {
        SweepConfig { param: param.into(), values, param2: None, values2: None, observable: SweepObservable::Fidelity }
    }

    pub fn two(param: &str, values: Vec<f64>, param2: &str, values2: Vec<f64>) -> Self {
        SweepConfig { param2: Some(param2.into()), values2: Some(values2), ..Self::one(param, values) }
    }

    pub fn is_time_series(&self) -> bool {
        self.param == "time"
    }

    fn sweeps_rate(&self) -> bool {
        RATE_PATHS.contains(&self.param.as_str()) || self.param2.as_deref().is_some_and(|p| RATE_PATHS.contains(&p))
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputConfig {
    pub path: PathBuf,
}

/// One protocol run, optionally swept over a parameter grid.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Config {
    pub system: SystemParams,
    pub pulses: PulseParams,
    #[serde(default)]
    pub grid: GridConfig,
    #[serde(default)]
    pub model: ModelKind,
    #[serde(default)]
    pub protocol: Protocol,
    #[serde(default)]
    pub clone: CloneConfig,
    #[serde(default)]
    pub basis: BasisOptions,
    #[serde(default)]
    pub drive: DriveConfig,
    #[serde(default)]
    pub evolution: Evolution,
    #[serde(default)]
    pub sweep: Option<SweepConfig>,
    #[serde(default)]
    pub output: Option<OutputConfig>,
}

/// Turn a deserialization failure into a config error naming the field.
fn path_error(err: serde_path_to_error::Error<serde_json::Error>) -> Error {
    let mut path = err.path().to_string();
    let inner = err.into_inner();
    let mut message = inner.to_string();
    // missing fields are reported against the parent object
    if let Some(rest) = message.strip_prefix("missing field `") {
        if let Some(name) = rest.split('`').next() {
            path = if path == "." { name.to_string() } else { format!("{path}.{name}") };
        }
    }
    if path == "." {
        path = "<root>".into();
    }
    if inner.line() > 0 && !message.contains(" line ") {
        message = format!("{message} at line {} column {}", inner.line(), inner.column());
    }
    Error::config(path, message)
}

/// Parse a JSON config document.
pub fn parse_config(text: &str) -> Result<Config> {
    let mut de = serde_json::Deserializer::from_str(text);
    let config: Config = serde_path_to_error::deserialize(&mut de).map_err(path_error)?;
    de.end().map_err(|e| Error::config("<root>", e.to_string()))?;
    Ok(config)
}

/// Deserialize a config from an already parsed JSON value.
pub fn config_from_value(value: Value) -> Result<Config> {
    serde_path_to_error::deserialize(value).map_err(path_error)
}

pub fn read_config(path: impl AsRef<Path>) -> Result<Config> {
    parse_config(&fs::read_to_string(path)?)
}

pub fn write_config(config: &Config, path: impl AsRef<Path>) -> Result<()> {
    let text = serde_json::to_string_pretty(config).map_err(|e| Error::config("<root>", e.to_string()))?;
    fs::write(path, text + "\n")?;
    Ok(())
}

/// Apply `dotted.path=value` overrides to a JSON document. The value is read
/// as JSON when possible and as a bare string otherwise.
pub fn apply_overrides(value: &mut Value, overrides: &[String]) -> Result<()> {
    for spec in overrides {
        let (path, raw) = spec
            .split_once('=')
            .ok_or_else(|| Error::config(spec.clone(), "override must have the form dotted.path=value"))?;
        let parsed = serde_json::from_str(raw).unwrap_or_else(|_| Value::String(raw.to_string()));
        let mut cursor = &mut *value;
        let keys: Vec<&str> = path.split('.').collect();
        for (i, key) in keys.iter().enumerate() {
            if key.is_empty() {
                return Err(Error::config(path, "empty path segment"));
            }
            if cursor.is_null() {
                *cursor = Value::Object(Default::default());
            }
            let Value::Object(map) = cursor else {
                return Err(Error::config(keys[..i].join("."), "is not an object"));
            };
            if i + 1 == keys.len() {
                map.insert(key.to_string(), parsed.clone());
                break;
            }
            cursor = map.entry(key.to_string()).or_insert(Value::Null);
        }
        log::info!("override {path} = {raw}");
    }
    Ok(())
}

/// Round `x` to nine decimals so grid values print cleanly.
fn tidy(x: f64) -> f64 {
    (x * 1e9).round() / 1e9
}

/// `start, start + step, …` up to and including `stop`.
pub fn linspace_step(start: f64, stop: f64, step: f64) -> Vec<f64> {
    let n = ((stop - start) / step).round() as usize;
    (0..=n).map(|i| tidy(start + i as f64 * step)).collect()
}

impl Config {
    pub fn setup(&self) -> Setup {
        Setup {
            system: self.system,
            pulses: self.pulses,
            model: self.model,
            dt: self.grid.dt,
            sample_stride: self.grid.sample_stride,
            basis: self.basis,
            full_model: FullModelOptions { second_tone: self.drive.second_tone },
            drives: self.drive.sites.clone(),
            evolution: self.evolution,
        }
    }

    /// Set one scalar parameter by its dotted path.
    pub fn set_param(&mut self, path: &str, value: f64) -> Result<()> {
        let s = &mut self.system;
        let p = &mut self.pulses;
        match path {
            "system.g" => s.g = value,
            "system.delta" => s.delta = value,
            "system.nu" => s.nu = value,
            "system.kappa_c" => s.kappa_c = value,
            "system.kappa_f" => s.kappa_f = value,
            "system.kappa" => {
                s.kappa_c = value;
                s.kappa_f = value;
            }
            "system.gamma" => s.gamma = value,
            "system.n_sites" => {
                if value < 1.0 || value.fract() != 0.0 {
                    return Err(Error::param(path, format!("expected a positive integer, got {value}")));
                }
                s.n_sites = value as usize;
            }
            "pulses.omega_m" => p.omega_m = value,
            "pulses.t0" => p.t0 = value,
            "pulses.t1" => p.t1 = value,
            "pulses.tp" => p.tp = value,
            "pulses.T" => p.total_time = value,
            "clone.delta_phase" => self.clone.delta_phase = value,
            _ => return Err(Error::config("sweep.param", format!("unknown parameter path `{path}`"))),
        }
        Ok(())
    }

    pub fn validate(&self) -> Result<()> {
        self.system.validate(self.model)?;
        self.pulses.validate()?;
        let grid = self.setup().grid();
        grid.steps().map_err(|e| Error::config("grid.dt", e.to_string()))?;
        if let Some(sites) = &self.drive.sites {
            if sites.len() != self.system.n_sites {
                return Err(Error::config("drive.sites", "one entry per emitter is required"));
            }
        }
        if let Some(sweep) = &self.sweep {
            self.validate_sweep(sweep)?;
        }
        Ok(())
    }

    fn validate_sweep(&self, sweep: &SweepConfig) -> Result<()> {
        let check_axis = |param: &str, values: &[f64], key: &str| -> Result<()> {
            if !PARAMETER_PATHS.contains(&param) {
                return Err(Error::config(key, format!("unknown parameter path `{param}`")));
            }
            if values.is_empty() {
                return Err(Error::config(key.replace("param", "values"), "grid is empty"));
            }
            if values.windows(2).any(|w| !(w[1] > w[0])) || values.iter().any(|v| !v.is_finite()) {
                return Err(Error::config(key.replace("param", "values"), "grid must be finite and strictly increasing"));
            }
            Ok(())
        };
        check_axis(&sweep.param, &sweep.values, "sweep.param")?;
        match (&sweep.param2, &sweep.values2) {
            (Some(p2), Some(v2)) => {
                check_axis(p2, v2, "sweep.param2")?;
                if sweep.is_time_series() || p2 == "time" {
                    return Err(Error::config("sweep.param2", "time series cannot be combined with a second axis"));
                }
            }
            (None, None) => {}
            _ => return Err(Error::config("sweep.param2", "param2 and values2 must be given together")),
        }
        if sweep.observable == SweepObservable::PerCopy && self.protocol != Protocol::Clone {
            return Err(Error::config("sweep.observable", "per_copy needs the clone protocol"));
        }
        if sweep.is_time_series() {
            if sweep.observable == SweepObservable::PerCopy {
                return Err(Error::config("sweep.observable", "time series record the global fidelity only"));
            }
            time_steps(&sweep.values, &self.setup().grid())?;
        }
        Ok(())
    }
}

/// Step indices of the requested sample times.
fn time_steps(times: &[f64], grid: &TimeGrid) -> Result<Vec<usize>> {
    let n = grid.steps()?;
    times
        .iter()
        .map(|&t| {
            let x = (t - grid.t_start) / grid.dt;
            let k = x.round();
            if (x - k).abs() > 1e-9 * k.max(1.0) || k < 0.0 || k as usize > n {
                return Err(Error::config("sweep.values", format!("time {t} is not a grid point of [0, T] at dt = {}", grid.dt)));
            }
            Ok(k as usize)
        })
        .collect()
}

fn gcd(a: usize, b: usize) -> usize {
    if b == 0 {
        a
    } else {
        gcd(b, a % b)
    }
}

/// Run the configured protocol once.
pub fn run_protocol(config: &Config) -> Result<ProtocolResult> {
    config.validate()?;
    let setup = config.setup();
    match config.protocol {
        Protocol::PrepareW => prepare_w_state(&setup),
        Protocol::Clone => clone_phase_covariant(&setup, CloningInput { delta: config.clone.delta_phase }),
    }
}

fn observe(config: &Config, observable: SweepObservable) -> Result<f64> {
    let result = run_protocol(config)?;
    Ok(match observable {
        SweepObservable::Fidelity => result.final_fidelity,
        SweepObservable::PerCopy => {
            let copies = result.per_copy.unwrap_or_default();
            copies.iter().sum::<f64>() / copies.len() as f64
        }
    })
}

#[derive(Clone, Debug, PartialEq)]
pub struct Row {
    /// Swept parameter value(s), or the time for a time series.
    pub params: Vec<f64>,
    /// The observable, or the failure message.
    pub value: std::result::Result<f64, String>,
    /// Wall-clock seconds spent on this point (shared by all rows of a time
    /// series).
    pub seconds: f64,
}

#[derive(Clone, Debug)]
pub struct SweepResult {
    pub config: Config,
    pub header: Vec<String>,
    pub rows: Vec<Row>,
    pub dt: f64,
    pub basis_dimension: usize,
    pub excitation_cap: Option<u32>,
}

impl SweepResult {
    pub fn values(&self) -> Vec<f64> {
        self.rows.iter().map(|r| r.value.clone().unwrap_or(f64::NAN)).collect()
    }

    pub fn failures(&self) -> usize {
        self.rows.iter().filter(|r| r.value.is_err()).count()
    }
}

/// Evaluate every grid point of `config.sweep` on `workers` threads. Rows come
/// back in grid order (first axis outermost) regardless of scheduling.
pub fn run_sweep(config: &Config, workers: usize) -> Result<SweepResult> {
    config.validate()?;
    let sweep = config.sweep.clone().ok_or_else(|| Error::config("sweep", "missing sweep section"))?;
    if workers == 0 {
        return Err(Error::param("workers", "at least one worker is required"));
    }
    let mut base = config.clone();
    if base.evolution == Evolution::Auto && sweep.sweeps_rate() {
        base.evolution = Evolution::Lindblad;
    }
    let basis_dimension = base.setup().build_basis()?.dimension();
    let value_column = match sweep.observable {
        SweepObservable::Fidelity => "fidelity",
        SweepObservable::PerCopy => "per_copy_fidelity",
    };

    let (header, rows) = if sweep.is_time_series() {
        (vec!["gt".to_string(), value_column.to_string()], time_series(&base, &sweep.values)?)
    } else {
        let mut points = Vec::new();
        match (&sweep.param2, &sweep.values2) {
            (Some(_), Some(v2)) => {
                for &a in &sweep.values {
                    for &b in v2 {
                        points.push(vec![a, b]);
                    }
                }
            }
            _ => points.extend(sweep.values.iter().map(|&a| vec![a])),
        }
        let mut names = vec![sweep.param.clone()];
        names.extend(sweep.param2.clone());
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(workers)
            .build()
            .map_err(|e| Error::param("workers", e.to_string()))?;
        let rows: Vec<Row> = pool.install(|| {
            points
                .par_iter()
                .map(|params| {
                    let start = Instant::now();
                    let value = point_config(&base, &names, params)
                        .and_then(|c| observe(&c, sweep.observable))
                        .map_err(|e| {
                            log::warn!("grid point {params:?} failed: {e}");
                            e.to_string()
                        });
                    Row { params: params.clone(), value, seconds: start.elapsed().as_secs_f64() }
                })
                .collect()
        });
        names.push(value_column.to_string());
        (names, rows)
    };

    Ok(SweepResult {
        config: config.clone(),
        header,
        rows,
        dt: base.grid.dt,
        basis_dimension,
        excitation_cap: base.basis.excitation_cap,
    })
}

fn point_config(base: &Config, names: &[String], params: &[f64]) -> Result<Config> {
    let mut c = base.clone();
    c.sweep = None;
    for (name, &v) in names.iter().zip(params) {
        c.set_param(name, v)?;
    }
    Ok(c)
}

/// One trajectory sampled at the gcd of the requested step indices.
fn time_series(base: &Config, times: &[f64]) -> Result<Vec<Row>> {
    let start = Instant::now();
    let grid = base.setup().grid();
    let n = grid.steps()?;
    let steps = time_steps(times, &grid)?;
    let stride = steps.iter().copied().filter(|&k| k > 0).fold(0, gcd);
    let mut c = base.clone();
    c.sweep = None;
    c.grid.sample_stride = if stride == 0 { n } else { stride };
    let stride = c.grid.sample_stride;
    let result = run_protocol(&c);
    let seconds = start.elapsed().as_secs_f64();
    Ok(match result {
        Ok(r) => {
            let series = r.fidelity_series();
            times
                .iter()
                .zip(&steps)
                .map(|(&t, &k)| {
                    let idx = if k == n { series.len() - 1 } else { k / stride };
                    Row { params: vec![t], value: Ok(series[idx]), seconds }
                })
                .collect()
        }
        Err(e) => {
            if e.is_numerical() || matches!(e, Error::BasisMismatch) {
                log::warn!("time series failed: {e}");
                times.iter().map(|&t| Row { params: vec![t], value: Err(e.to_string()), seconds }).collect()
            } else {
                return Err(e);
            }
        }
    })
}

/// `%.12g`: twelve significant digits, trailing zeros removed.
pub fn format_g12(x: f64) -> String {
    if x == 0.0 {
        return "0".into();
    }
    if !x.is_finite() {
        return x.to_string();
    }
    let sci = format!("{x:.11e}");
    let (mantissa, exp) = sci.split_once('e').expect("exponent present");
    let exp: i32 = exp.parse().expect("integer exponent");
    let trim = |s: &str| -> String {
        if s.contains('.') {
            s.trim_end_matches('0').trim_end_matches('.').to_string()
        } else {
            s.to_string()
        }
    };
    if !(-4..12).contains(&exp) {
        format!("{}e{}{:02}", trim(mantissa), if exp < 0 { '-' } else { '+' }, exp.abs())
    } else {
        let decimals = (11 - exp).max(0) as usize;
        trim(&format!("{x:.decimals$}"))
    }
}

/// CSV text: header row, then one row per grid point, LF line endings.
pub fn to_csv(result: &SweepResult) -> String {
    let mut out = result.header.join(",");
    out.push('\n');
    for row in &result.rows {
        for p in &row.params {
            out.push_str(&format_g12(*p));
            out.push(',');
        }
        match &row.value {
            Ok(v) => out.push_str(&format_g12(*v)),
            Err(_) => out.push_str(ERROR_MARKER),
        }
        out.push('\n');
    }
    out
}

pub fn write_csv(result: &SweepResult, path: impl AsRef<Path>) -> Result<()> {
    fs::write(path, to_csv(result))?;
    Ok(())
}

/// `gt,fidelity` rows of a single protocol run.
pub fn trajectory_csv(result: &ProtocolResult) -> String {
    let mut out = String::from("gt,fidelity\n");
    for (t, f) in result.trajectory.times.iter().zip(result.fidelity_series()) {
        let _ = writeln!(out, "{},{}", format_g12(*t), format_g12(f));
    }
    out
}

/// Identifiers accepted by [`figure_preset`].
pub const FIGURE_IDS: &[&str] = &["3a", "3b", "3c", "4", "5", "6", "7"];

/// Sweep reproducing one figure panel. All presets run in the single-excitation
/// capped basis.
pub fn figure_preset(id: &str) -> Result<Config> {
    let mut c = Config {
        basis: BasisOptions { n_max: 1, excitation_cap: Some(1) },
        output: Some(OutputConfig { path: PathBuf::from(format!("fig{id}.csv")) }),
        ..Config::default()
    };
    c.sweep = Some(match id {
        "3a" => SweepConfig::one("pulses.omega_m", linspace_step(0.1, 2.1, 0.1)),
        "3b" => SweepConfig::one("pulses.t1", linspace_step(40.0, 140.0, 5.0)),
        "3c" => SweepConfig::one("pulses.tp", linspace_step(20.0, 120.0, 5.0)),
        "4" => SweepConfig::one("system.nu", linspace_step(0.5, 10.5, 0.5)),
        "5" => SweepConfig::one("system.delta", linspace_step(0.5, 10.5, 0.5)),
        "6" => SweepConfig::one("time", linspace_step(0.0, 200.0, 1.0)),
        "7" => {
            c.model = ModelKind::Full;
            c.protocol = Protocol::Clone;
            c.evolution = Evolution::Lindblad;
            let rates = linspace_step(0.0, 0.01, 0.002);
            SweepConfig::two("system.kappa", rates.clone(), "system.gamma", rates)
        }
        other => {
            return Err(Error::config(
                "figure",
                format!("unknown figure id `{other}`, expected one of {}", FIGURE_IDS.join(", ")),
            ))
        }
    });
    Ok(c)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn quick(mut c: Config) -> Config {
        c.pulses.total_time = 20.0;
        c.grid = GridConfig { dt: 0.01, sample_stride: 100 };
        c
    }

    #[test]
    fn presets_have_expected_grids() {
        // (id, swept path, first, last, count, omega_m, t0, t1, tp, delta, nu, T)
        let table = [
            ("3a", "pulses.omega_m", 0.1, 2.1, 21),
            ("3b", "pulses.t1", 40.0, 140.0, 21),
            ("3c", "pulses.tp", 20.0, 120.0, 21),
            ("4", "system.nu", 0.5, 10.5, 21),
            ("5", "system.delta", 0.5, 10.5, 21),
            ("6", "time", 0.0, 200.0, 201),
        ];
        for (id, path, first, last, count) in table {
            let c = figure_preset(id).unwrap();
            let s = c.sweep.as_ref().unwrap();
            assert_eq!(s.param, path);
            assert_eq!(s.values.len(), count, "{id}");
            assert_eq!(s.values[0], first);
            assert_eq!(*s.values.last().unwrap(), last);
            assert_eq!(c.pulses, PulseParams { omega_m: 1.0, t0: 150.0, t1: 90.0, tp: 50.0, total_time: 200.0 });
            assert_eq!((c.system.delta, c.system.nu, c.system.n_sites), (10.0, 10.0, 3));
            assert_eq!(c.model, ModelKind::Effective);
            assert_eq!(c.protocol, Protocol::PrepareW);
            c.validate().unwrap();
        }
        let tp = figure_preset("3c").unwrap().sweep.unwrap().values;
        for v in [40.0, 45.0, 50.0, 55.0, 60.0, 100.0] {
            assert!(tp.contains(&v));
        }
        assert!(figure_preset("4").unwrap().sweep.unwrap().values.contains(&10.0));

        let c = figure_preset("7").unwrap();
        let s = c.sweep.as_ref().unwrap();
        assert_eq!(s.param, "system.kappa");
        assert_eq!(s.param2.as_deref(), Some("system.gamma"));
        assert_eq!(s.values, vec![0.0, 0.002, 0.004, 0.006, 0.008, 0.01]);
        assert_eq!(s.values2.as_ref().unwrap(), &s.values);
        assert_eq!((c.model, c.protocol), (ModelKind::Full, Protocol::Clone));
        c.validate().unwrap();
        assert!(figure_preset("8").is_err());
    }

    #[test]
    fn preset_round_trips() {
        let dir = tempfile::tempdir().unwrap();
        for id in FIGURE_IDS {
            let c = figure_preset(id).unwrap();
            let path = dir.path().join(format!("{id}.json"));
            write_config(&c, &path).unwrap();
            assert_eq!(read_config(&path).unwrap(), c);
        }
    }

    #[test]
    fn missing_field_names_its_path() {
        let text = r#"{"system": {"g": 1, "nu": 10, "n_sites": 3},
                       "pulses": {"omega_m": 1, "t0": 150, "t1": 90, "tp": 50, "T": 200}}"#;
        let err = parse_config(text).unwrap_err();
        assert!(err.to_string().starts_with("system.delta:"), "{err}");
        let text = r#"{"system": {"g": 1, "delta": 10, "nu": 10, "n_sites": 3},
                       "pulses": {"omega_m": 1, "t0": 150, "t1": 90, "T": 200}}"#;
        assert!(parse_config(text).unwrap_err().to_string().starts_with("pulses.tp:"));
        let err = parse_config(r#"{"pulses": {}}"#).unwrap_err();
        assert!(err.to_string().starts_with("pulses."), "{err}");
    }

    #[test]
    fn type_errors_carry_path_and_line() {
        let text = "{\"system\": {\"g\": 1, \"delta\": \"ten\", \"nu\": 10, \"n_sites\": 3},\n\"pulses\": {}}";
        let msg = parse_config(text).unwrap_err().to_string();
        assert!(msg.starts_with("system.delta:"), "{msg}");
        assert!(msg.contains("line 1"), "{msg}");
        let unknown = r#"{"system": {"g": 1, "delta": 10, "nu": 10, "n_sites": 3, "chi": 2},
                          "pulses": {"omega_m": 1, "t0": 150, "t1": 90, "tp": 50, "T": 200}}"#;
        assert!(parse_config(unknown).unwrap_err().to_string().contains("chi"));
    }

    #[test]
    fn overrides_edit_dotted_paths() {
        let mut v = serde_json::to_value(Config::default()).unwrap();
        apply_overrides(&mut v, &["system.nu=2.5".into(), "model=full".into(), "clone.delta_phase=1".into()]).unwrap();
        let c = config_from_value(v.clone()).unwrap();
        assert_eq!(c.system.nu, 2.5);
        assert_eq!(c.model, ModelKind::Full);
        assert_eq!(c.clone.delta_phase, 1.0);
        apply_overrides(&mut v, &["system.nu=abc".into()]).unwrap();
        assert!(config_from_value(v.clone()).unwrap_err().to_string().starts_with("system.nu"));
        assert!(apply_overrides(&mut v, &["nonsense".into()]).is_err());
    }

    #[test]
    fn set_param_paths() {
        let mut c = Config::default();
        for path in PARAMETER_PATHS.iter().filter(|p| **p != "time") {
            c.set_param(path, 3.0).unwrap();
        }
        assert_eq!((c.system.kappa_c, c.system.kappa_f), (3.0, 3.0));
        assert_eq!(c.pulses.total_time, 3.0);
        assert!(c.set_param("system.n_sites", 2.5).is_err());
        assert!(c.set_param("system.chi", 1.0).is_err());
    }

    #[test]
    fn sweep_validation() {
        let mut c = quick(Config::default());
        c.sweep = Some(SweepConfig::one("pulses.tp", vec![]));
        assert!(c.validate().is_err());
        c.sweep = Some(SweepConfig::one("pulses.tp", vec![2.0, 1.0]));
        assert!(c.validate().is_err());
        c.sweep = Some(SweepConfig::one("pulses.width", vec![1.0]));
        assert!(c.validate().is_err());
        c.sweep = Some(SweepConfig::one("time", vec![0.0, 0.005]));
        assert!(c.validate().is_err());
        c.sweep = Some(SweepConfig::one("time", vec![0.0, 30.0]));
        assert!(c.validate().is_err());
        c.sweep = Some(SweepConfig { observable: SweepObservable::PerCopy, ..SweepConfig::one("pulses.tp", vec![1.0]) });
        assert!(c.validate().is_err());
    }

    #[test]
    fn rows_are_ordered_and_deterministic() {
        let mut c = quick(figure_preset("4").unwrap());
        c.sweep = Some(SweepConfig::one("system.nu", linspace_step(0.5, 10.5, 0.5)));
        let one = run_sweep(&c, 1).unwrap();
        let many = run_sweep(&c, 8).unwrap();
        assert_eq!(one.rows.len(), 21);
        assert!(one.rows.windows(2).all(|w| w[0].params[0] < w[1].params[0]));
        assert_eq!(to_csv(&one), to_csv(&many));
        assert!(to_csv(&one).starts_with("system.nu,fidelity\n0.5,"));
        assert!(one.values().iter().all(|v| (0.0..=1.0 + 1e-9).contains(v)));
        assert_eq!(one.basis_dimension, 8);
    }

    #[test]
    fn two_dimensional_sweep_layout() {
        let mut c = quick(figure_preset("7").unwrap());
        c.sweep = Some(SweepConfig::two("system.kappa", vec![0.0, 0.01], "system.gamma", vec![0.0, 0.005, 0.01]));
        let r = run_sweep(&c, 2).unwrap();
        let csv = to_csv(&r);
        let lines: Vec<&str> = csv.lines().collect();
        assert_eq!(lines[0], "system.kappa,system.gamma,fidelity");
        assert_eq!(lines.len(), 7);
        assert!(lines[1].starts_with("0,0,"));
        assert!(lines[2].starts_with("0,0.005,"));
        assert!(lines[4].starts_with("0.01,0,"));
        assert!(!csv.contains('\r'));
    }

    #[test]
    fn time_series_samples_requested_instants() {
        let mut c = quick(Config::default());
        c.sweep = Some(SweepConfig::one("time", vec![0.0, 5.0, 10.0, 20.0]));
        let r = run_sweep(&c, 1).unwrap();
        assert_eq!(r.header, ["gt", "fidelity"]);
        let full = run_protocol(&Config { sweep: None, grid: GridConfig { sample_stride: 500, ..c.grid }, ..c.clone() })
            .unwrap()
            .fidelity_series();
        let got = r.values();
        assert_eq!(got[0], full[0]);
        assert_eq!(got[1], full[1]);
        assert_eq!(got[2], full[2]);
        assert_eq!(got[3], *full.last().unwrap());
    }

    #[test]
    fn failed_points_are_marked() {
        let mut c = quick(Config::default());
        c.sweep = Some(SweepConfig::one("pulses.tp", vec![-1.0, 10.0]));
        let r = run_sweep(&c, 2).unwrap();
        assert_eq!(r.failures(), 1);
        let csv = to_csv(&r);
        assert!(csv.lines().nth(1).unwrap().ends_with(",ERROR"));
        assert!(r.rows[1].value.is_ok());
    }

    #[test]
    fn g12_formatting() {
        assert_eq!(format_g12(0.1 + 0.2), "0.3");
        assert_eq!(format_g12(200.0), "200");
        assert_eq!(format_g12(0.998677123456789), "0.998677123457");
        assert_eq!(format_g12(1.5e-7), "1.5e-07");
        assert_eq!(format_g12(-2.5), "-2.5");
        assert_eq!(format_g12(1e12), "1e+12");
        assert_eq!(format_g12(123456789012.0), "123456789012");
        assert_eq!(format_g12(0.0001), "0.0001");
    }
}
