//! Run configuration: a TOML file with an optional `command` key, a
//! `[params]` table and at most one command block, plus `--set` overrides.

use std::fmt;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use wgm_isolator::analytic::SweepVariable;
use wgm_isolator::oracle::EmitterModel;
use wgm_isolator::{ModeLabel, SystemParams, TruncationSpec};

use crate::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Command {
    Spectrum,
    Eigen,
    Helicity,
    Optimize,
    Sweep,
    Validate,
}

impl Command {
    pub const ALL: [Command; 6] = [
        Command::Spectrum,
        Command::Eigen,
        Command::Helicity,
        Command::Optimize,
        Command::Sweep,
        Command::Validate,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Command::Spectrum => "spectrum",
            Command::Eigen => "eigen",
            Command::Helicity => "helicity",
            Command::Optimize => "optimize",
            Command::Sweep => "sweep",
            Command::Validate => "validate",
        }
    }
}

impl fmt::Display for Command {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SpectrumSpec {
    pub delta_c_min: f64,
    pub delta_c_max: f64,
    pub points: usize,
}

impl Default for SpectrumSpec {
    fn default() -> Self {
        Self {
            delta_c_min: -60.0,
            delta_c_max: 60.0,
            points: 1201,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct EigenSpec {
    pub variable: SweepVariable,
    pub start: f64,
    pub stop: f64,
    pub points: usize,
}

impl Default for EigenSpec {
    fn default() -> Self {
        Self {
            variable: SweepVariable::Delta12,
            start: 0.0,
            stop: 60.0,
            points: 121,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SyntheticSpec {
    pub n_rho: usize,
    pub n_z: usize,
    pub p: f64,
    pub tilt: f64,
}

impl Default for SyntheticSpec {
    fn default() -> Self {
        Self {
            n_rho: 41,
            n_z: 31,
            p: 0.8,
            tilt: 0.3,
        }
    }
}

/// Helicity map of an imported field grid, or of a synthetic one when no
/// `input` is given.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct HelicitySpec {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub input: Option<PathBuf>,
    pub mode_number: i32,
    pub label: ModeLabel,
    /// Also map the counter-propagating partner.
    pub partner: bool,
    pub synthetic: SyntheticSpec,
}

impl Default for HelicitySpec {
    fn default() -> Self {
        Self {
            input: None,
            mode_number: 129,
            label: ModeLabel::QuasiTe,
            partner: true,
            synthetic: SyntheticSpec::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OptimizeSpec {
    /// Hold the splitting fixed and optimise `(kappa_ex, delta_c)` only.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub delta12: Option<f64>,
}

/// `kappa_ex` bounds default to `[kappa_i, kappa_i + 20]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SweepSpec {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub kappa_ex_min: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub kappa_ex_max: Option<f64>,
    pub kappa_ex_points: usize,
    pub delta12_min: f64,
    pub delta12_max: f64,
    pub delta12_points: usize,
}

impl Default for SweepSpec {
    fn default() -> Self {
        Self {
            kappa_ex_min: None,
            kappa_ex_max: None,
            kappa_ex_points: 41,
            delta12_min: 0.0,
            delta12_max: 80.0,
            delta12_points: 81,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ValidateSpec {
    pub n_max: usize,
    pub drive_amp: f64,
    pub emitter: EmitterModel,
    pub delta_c_min: f64,
    pub delta_c_max: f64,
    pub points: usize,
    /// Largest accepted relative deviation.
    pub tolerance: f64,
}

impl Default for ValidateSpec {
    fn default() -> Self {
        Self {
            n_max: 3,
            drive_amp: 0.01,
            emitter: EmitterModel::VType,
            delta_c_min: -60.0,
            delta_c_max: 60.0,
            points: 41,
            tolerance: 1e-3,
        }
    }
}

impl ValidateSpec {
    pub fn truncation(&self) -> TruncationSpec {
        TruncationSpec {
            emitter: self.emitter,
            ..TruncationSpec::new(self.n_max, self.drive_amp)
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Task {
    Spectrum(SpectrumSpec),
    Eigen(EigenSpec),
    Helicity(HelicitySpec),
    Optimize(OptimizeSpec),
    Sweep(SweepSpec),
    Validate(ValidateSpec),
}

impl Task {
    pub fn command(&self) -> Command {
        match self {
            Task::Spectrum(_) => Command::Spectrum,
            Task::Eigen(_) => Command::Eigen,
            Task::Helicity(_) => Command::Helicity,
            Task::Optimize(_) => Command::Optimize,
            Task::Sweep(_) => Command::Sweep,
            Task::Validate(_) => Command::Validate,
        }
    }
}

/// Fully resolved and validated configuration.
#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub params: SystemParams,
    pub task: Task,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawConfig {
    command: Option<Command>,
    #[serde(default)]
    params: SystemParams,
    spectrum: Option<SpectrumSpec>,
    eigen: Option<EigenSpec>,
    helicity: Option<HelicitySpec>,
    optimize: Option<OptimizeSpec>,
    sweep: Option<SweepSpec>,
    validate: Option<ValidateSpec>,
    /// Written by the run sidecar; ignored on input.
    #[allow(dead_code)]
    meta: Option<toml::Table>,
}

fn config_err(msg: impl Into<String>) -> CliError {
    CliError::Config(msg.into())
}

/// Parses a `--set` value as a TOML value, falling back to a bare string.
fn parse_value(text: &str) -> toml::Value {
    format!("v = {text}")
        .parse::<toml::Table>()
        .ok()
        .and_then(|mut t| t.remove("v"))
        .unwrap_or_else(|| toml::Value::String(text.to_string()))
}

/// Applies `key.path=value` to `table`, creating intermediate tables.
pub fn apply_override(table: &mut toml::Table, assignment: &str) -> Result<(), CliError> {
    let (key, value) = assignment
        .split_once('=')
        .ok_or_else(|| config_err(format!("override `{assignment}` is not of the form key=value")))?;
    let parts: Vec<&str> = key.trim().split('.').map(str::trim).collect();
    if parts.iter().any(|p| p.is_empty()) {
        return Err(config_err(format!("override key `{key}` has an empty component")));
    }
    let (last, path) = parts.split_last().expect("split yields at least one part");
    let mut current = table;
    for (depth, part) in path.iter().enumerate() {
        let entry = current
            .entry(part.to_string())
            .or_insert_with(|| toml::Value::Table(toml::Table::new()));
        current = entry.as_table_mut().ok_or_else(|| {
            config_err(format!("override `{key}`: `{}` is not a table", parts[..=depth].join(".")))
        })?;
    }
    current.insert(last.to_string(), parse_value(value.trim()));
    Ok(())
}

fn check_grid(block: &str, min: f64, max: f64, points: usize) -> Result<(), CliError> {
    if !(min.is_finite() && max.is_finite()) {
        return Err(config_err(format!("{block}: grid bounds must be finite")));
    }
    if points < 2 || !(max > min) {
        return Err(config_err(format!(
            "{block}: grid needs min < max and at least 2 points (got [{min}, {max}], {points} points)"
        )));
    }
    Ok(())
}

fn resolve_path(path: &Path, base: Option<&Path>) -> Result<PathBuf, CliError> {
    let joined = match base {
        Some(dir) if path.is_relative() => dir.join(path),
        _ => path.to_path_buf(),
    };
    joined
        .canonicalize()
        .map_err(|e| config_err(format!("helicity.input `{}`: {e}", joined.display())))
}

/// Builds a validated [`RunConfig`] for `command` from the parsed file
/// contents and overrides. Relative input paths are resolved against
/// `base_dir`.
pub fn resolve(
    command: Command,
    mut table: toml::Table,
    overrides: &[String],
    base_dir: Option<&Path>,
) -> Result<RunConfig, CliError> {
    for o in overrides {
        apply_override(&mut table, o)?;
    }
    let raw: RawConfig = toml::Value::Table(table)
        .try_into()
        .map_err(|e: toml::de::Error| config_err(format!("invalid configuration: {e}")))?;
    if let Some(c) = raw.command {
        if c != command {
            return Err(config_err(format!(
                "configuration is for `{c}` but `{command}` was requested"
            )));
        }
    }
    let present: Vec<&str> = [
        (raw.spectrum.is_some(), "spectrum"),
        (raw.eigen.is_some(), "eigen"),
        (raw.helicity.is_some(), "helicity"),
        (raw.optimize.is_some(), "optimize"),
        (raw.sweep.is_some(), "sweep"),
        (raw.validate.is_some(), "validate"),
    ]
    .into_iter()
    .filter_map(|(p, n)| p.then_some(n))
    .collect();
    if present.len() > 1 {
        return Err(config_err(format!(
            "exactly one command block allowed, found [{}]",
            present.join("], [")
        )));
    }
    if let Some(&other) = present.first() {
        if other != command.name() {
            return Err(config_err(format!(
                "block [{other}] does not belong to command `{command}`"
            )));
        }
    }
    let params = raw.params;
    params
        .validate()
        .map_err(|e| config_err(format!("params: {e}")))?;

    let task = match command {
        Command::Spectrum => {
            let s = raw.spectrum.unwrap_or_default();
            check_grid("spectrum", s.delta_c_min, s.delta_c_max, s.points)?;
            Task::Spectrum(s)
        }
        Command::Eigen => {
            let s = raw.eigen.unwrap_or_default();
            check_grid("eigen", s.start, s.stop, s.points)?;
            if s.variable == SweepVariable::P && (s.start < -1.0 || s.stop > 1.0) {
                return Err(config_err("eigen: p sweep must stay within [-1, 1]"));
            }
            Task::Eigen(s)
        }
        Command::Helicity => {
            let mut s = raw.helicity.unwrap_or_default();
            if s.mode_number == 0 {
                return Err(config_err("helicity.mode_number must be non-zero"));
            }
            match &s.input {
                Some(path) => s.input = Some(resolve_path(path, base_dir)?),
                None => {
                    let g = &s.synthetic;
                    if g.n_rho == 0 || g.n_z == 0 {
                        return Err(config_err("helicity.synthetic: n_rho and n_z must be >= 1"));
                    }
                    if !(-1.0..=1.0).contains(&g.p) || !g.tilt.is_finite() {
                        return Err(config_err("helicity.synthetic: need -1 <= p <= 1 and a finite tilt"));
                    }
                }
            }
            Task::Helicity(s)
        }
        Command::Optimize => {
            let s = raw.optimize.unwrap_or_default();
            if s.delta12.is_some_and(|d| !d.is_finite()) {
                return Err(config_err("optimize.delta12 must be finite"));
            }
            Task::Optimize(s)
        }
        Command::Sweep => {
            let mut s = raw.sweep.unwrap_or_default();
            let lo = *s.kappa_ex_min.get_or_insert(params.kappa_i);
            let hi = *s.kappa_ex_max.get_or_insert(params.kappa_i + 20.0 * params.gamma);
            if lo < 0.0 {
                return Err(config_err("sweep.kappa_ex_min must be >= 0"));
            }
            check_grid("sweep (kappa_ex)", lo, hi, s.kappa_ex_points)?;
            check_grid("sweep (delta12)", s.delta12_min, s.delta12_max, s.delta12_points)?;
            Task::Sweep(s)
        }
        Command::Validate => {
            let s = raw.validate.unwrap_or_default();
            s.truncation()
                .validate()
                .map_err(|e| config_err(format!("validate: {e}")))?;
            if !(s.drive_amp > 0.0) {
                return Err(config_err("validate.drive_amp must be > 0"));
            }
            check_grid("validate", s.delta_c_min, s.delta_c_max, s.points)?;
            if !(s.tolerance > 0.0) {
                return Err(config_err("validate.tolerance must be > 0"));
            }
            Task::Validate(s)
        }
    };
    Ok(RunConfig { params, task })
}

/// Reads and resolves a configuration file; `None` uses defaults only.
pub fn parse_config(
    command: Command,
    path: Option<&Path>,
    overrides: &[String],
) -> Result<RunConfig, CliError> {
    let (table, base) = match path {
        Some(p) => {
            let text = std::fs::read_to_string(p)
                .map_err(|e| config_err(format!("cannot read {}: {e}", p.display())))?;
            let table: toml::Table = text
                .parse()
                .map_err(|e| config_err(format!("{}: {e}", p.display())))?;
            (table, p.parent().map(Path::to_path_buf))
        }
        None => (toml::Table::new(), None),
    };
    resolve(command, table, overrides, base.as_deref())
}

impl RunConfig {
    /// Resolved configuration as a table that [`parse_config`] accepts.
    pub fn to_table(&self) -> toml::Table {
        fn value<T: Serialize>(v: &T) -> toml::Value {
            toml::Value::try_from(v).expect("configuration serialises")
        }
        let mut t = toml::Table::new();
        let command = self.task.command();
        t.insert("command".into(), toml::Value::String(command.name().into()));
        t.insert("params".into(), value(&self.params));
        let block = match &self.task {
            Task::Spectrum(s) => value(s),
            Task::Eigen(s) => value(s),
            Task::Helicity(s) => value(s),
            Task::Optimize(s) => value(s),
            Task::Sweep(s) => value(s),
            Task::Validate(s) => value(s),
        };
        t.insert(command.name().into(), block);
        t
    }
}
