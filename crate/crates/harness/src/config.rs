//! Run configuration: a TOML file with nested sections, optionally amended
//! by `section.key=value` overrides from the command line.

use crate::error::{HarnessError, Result};
use mrsav_core::diagnostics::{Band, Window};
use mrsav_core::{
    ForcingSpec, Grid, InitialPreset, ManufacturedSolution, ModelSpec, Scheme, StepperParams,
};
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;
use std::path::{Path, PathBuf};

pub const DEFAULT_GAMMA: f64 = 1000.0;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub model: ModelConfig,
    pub grid: GridConfig,
    #[serde(default)]
    pub forcing: ForcingConfig,
    #[serde(default)]
    pub initial: InitialConfig,
    pub stepper: StepperConfig,
    pub run: RunSection,
    #[serde(default)]
    pub output: OutputConfig,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub convergence: Option<ConvergenceConfig>,
    #[serde(default)]
    pub diagnostics: DiagnosticsConfig,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ModelKind {
    NavierStokes,
    Qg2d,
    Cqg3d,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelConfig {
    pub kind: ModelKind,
    pub reynolds: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub beta: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub froude: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridConfig {
    /// Points per axis; a single entry is used for every axis.
    pub modes: Vec<usize>,
    /// Box side lengths, `2 pi` per axis when omitted.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lengths: Option<Vec<f64>>,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ForcingKind {
    #[default]
    None,
    Kolmogorov,
    Manufactured,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ForcingConfig {
    #[serde(default)]
    pub kind: ForcingKind,
    /// Kolmogorov wavenumber `m` (default 2).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub wavenumber: Option<u32>,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InitialConfig {
    /// `zero`, `kolmogorov_perturbed_a`, `kolmogorov_perturbed_b` or
    /// `manufactured`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub preset: Option<String>,
    /// Restart from a checkpoint instead of a preset.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub checkpoint: Option<PathBuf>,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Mode {
    #[default]
    Mrsav,
    /// `q` frozen at one: BDF2 with explicit advection.
    ExplicitBaseline,
    /// mr-SAV without mean reversion.
    GammaZero,
}

impl Mode {
    pub fn name(&self) -> &'static str {
        match self {
            Mode::Mrsav => "mrsav",
            Mode::ExplicitBaseline => "explicit_baseline",
            Mode::GammaZero => "gamma_zero",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StepperConfig {
    pub dt: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gamma: Option<f64>,
    #[serde(default)]
    pub dealias: bool,
    #[serde(default)]
    pub mode: Mode,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunSection {
    /// Final time, measured from `t = 0` even when restarting.
    pub t_end: f64,
    #[serde(default = "default_sample_stride")]
    pub sample_stride: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub checkpoint_stride: Option<u64>,
    /// A run whose largest vorticity coefficient exceeds this is treated as
    /// diverged even before it overflows.
    #[serde(default = "default_blowup_threshold")]
    pub blowup_threshold: f64,
}

fn default_sample_stride() -> u64 {
    10
}

fn default_blowup_threshold() -> f64 {
    1e8
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputConfig {
    #[serde(default = "default_output_dir")]
    pub dir: PathBuf,
}

impl Default for OutputConfig {
    fn default() -> Self {
        OutputConfig {
            dir: default_output_dir(),
        }
    }
}

fn default_output_dir() -> PathBuf {
    PathBuf::from("output")
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConvergenceConfig {
    /// Step sizes, strictly decreasing.
    pub dts: Vec<f64>,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum WindowKind {
    None,
    #[default]
    Hann,
}

impl From<WindowKind> for Window {
    fn from(w: WindowKind) -> Self {
        match w {
            WindowKind::None => Window::None,
            WindowKind::Hann => Window::Hann,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct DiagnosticsConfig {
    /// Samples with `t < spin_up` are discarded.
    pub spin_up: f64,
    pub burst_column: String,
    /// Defaults to 1.5 times the post-spin-up median.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub burst_threshold: Option<f64>,
    pub burst_min_separation: f64,
    pub psd_column: String,
    pub window: WindowKind,
    pub tail_column: String,
    /// Closed bands `[lo, hi]`; use `inf` for an open upper end.
    pub tail_bands: Vec<[f64; 2]>,
}

impl Default for DiagnosticsConfig {
    fn default() -> Self {
        DiagnosticsConfig {
            spin_up: 100.0,
            burst_column: "palinstrophy".into(),
            burst_threshold: None,
            burst_min_separation: 10.0,
            psd_column: "max_abs_omega".into(),
            window: WindowKind::Hann,
            tail_column: "grad_omega_l2".into(),
            tail_bands: vec![[12.6, f64::INFINITY], [15.0, f64::INFINITY], [11.5, 12.4]],
        }
    }
}

impl DiagnosticsConfig {
    pub fn bands(&self) -> Vec<Band> {
        self.tail_bands.iter().map(|b| Band::new(b[0], b[1])).collect()
    }
}

fn config_err(msg: impl Into<String>) -> HarnessError {
    HarnessError::Config(msg.into())
}

impl RunConfig {
    pub fn dim(&self) -> usize {
        match self.model.kind {
            ModelKind::NavierStokes | ModelKind::Qg2d => 2,
            ModelKind::Cqg3d => 3,
        }
    }

    pub fn model_spec(&self) -> Result<ModelSpec> {
        let m = &self.model;
        if !(m.reynolds > 0.0 && m.reynolds.is_finite()) {
            return Err(config_err(format!("model.reynolds must be positive, got {}", m.reynolds)));
        }
        match m.kind {
            ModelKind::NavierStokes => {
                if m.beta.is_some_and(|b| b != 0.0) {
                    return Err(config_err("model.beta is not used by navier_stokes; use kind = \"qg2d\""));
                }
                if m.froude.is_some() {
                    return Err(config_err("model.froude only applies to cqg3d"));
                }
                Ok(ModelSpec::navier_stokes(m.reynolds))
            }
            ModelKind::Qg2d => {
                if m.froude.is_some() {
                    return Err(config_err("model.froude only applies to cqg3d"));
                }
                Ok(ModelSpec::qg2d(m.reynolds, m.beta.unwrap_or(0.0)))
            }
            ModelKind::Cqg3d => Ok(ModelSpec::cqg3d(
                m.reynolds,
                m.beta.unwrap_or(1.0),
                m.froude.unwrap_or(1.0),
            )),
        }
    }

    pub fn grid(&self) -> Result<Grid> {
        let dim = self.dim();
        let modes = match self.grid.modes.as_slice() {
            [n] => vec![*n; dim],
            m if m.len() == dim => m.to_vec(),
            m => {
                return Err(config_err(format!(
                    "grid.modes has {} entries for a {dim}-dimensional model",
                    m.len()
                )))
            }
        };
        let lengths = match &self.grid.lengths {
            None => vec![2.0 * PI; dim],
            Some(l) if l.len() == 1 => vec![l[0]; dim],
            Some(l) if l.len() == dim => l.clone(),
            Some(l) => {
                return Err(config_err(format!(
                    "grid.lengths has {} entries for a {dim}-dimensional model",
                    l.len()
                )))
            }
        };
        Grid::new(&lengths, &modes).map_err(|e| config_err(format!("grid: {e}")))
    }

    fn manufactured(&self) -> ManufacturedSolution {
        if self.dim() == 2 {
            ManufacturedSolution::cosine_2d()
        } else {
            ManufacturedSolution::cosine_3d()
        }
    }

    pub fn forcing_spec(&self) -> Result<ForcingSpec> {
        let f = &self.forcing;
        match f.kind {
            ForcingKind::None | ForcingKind::Manufactured if f.wavenumber.is_some() => {
                Err(config_err("forcing.wavenumber only applies to kind = \"kolmogorov\""))
            }
            ForcingKind::None => Ok(ForcingSpec::None),
            ForcingKind::Kolmogorov => Ok(ForcingSpec::Kolmogorov {
                wavenumber: f.wavenumber.unwrap_or(2),
                reynolds: self.model.reynolds,
            }),
            ForcingKind::Manufactured => Ok(ForcingSpec::Manufactured(self.manufactured())),
        }
    }

    /// Preset for the initial vorticity; `None` when restarting from a
    /// checkpoint.
    pub fn initial_preset(&self) -> Result<Option<InitialPreset>> {
        match (&self.initial.preset, &self.initial.checkpoint) {
            (Some(_), Some(_)) => Err(config_err("initial.preset and initial.checkpoint are exclusive")),
            (_, Some(_)) => Ok(None),
            (None, None) => Ok(Some(InitialPreset::Zero)),
            (Some(name), None) if name == "manufactured" => {
                Ok(Some(InitialPreset::Manufactured(self.manufactured())))
            }
            (Some(name), None) => InitialPreset::from_name(name)
                .map(Some)
                .map_err(|e| config_err(format!("initial.preset: {e}"))),
        }
    }

    pub fn gamma(&self) -> Result<f64> {
        match (self.stepper.mode, self.stepper.gamma) {
            (Mode::GammaZero, Some(g)) if g != 0.0 => Err(config_err(format!(
                "stepper.mode = \"gamma_zero\" conflicts with stepper.gamma = {g}"
            ))),
            (Mode::GammaZero, _) => Ok(0.0),
            (_, g) => Ok(g.unwrap_or(DEFAULT_GAMMA)),
        }
    }

    pub fn scheme(&self) -> Scheme {
        match self.stepper.mode {
            Mode::ExplicitBaseline => Scheme::FrozenAuxiliary,
            Mode::Mrsav | Mode::GammaZero => Scheme::MeanRevertingSav,
        }
    }

    pub fn stepper_params(&self) -> Result<StepperParams> {
        let mut p = StepperParams::new(self.stepper.dt, self.gamma()?)
            .map_err(|e| config_err(format!("stepper: {e}")))?;
        p.dealias = self.stepper.dealias;
        Ok(p)
    }

    /// Number of steps needed to reach `t_end` from `t = 0`.
    pub fn total_steps(&self) -> Result<u64> {
        steps_for(self.run.t_end, self.stepper.dt)
    }

    pub fn validate(&self) -> Result<()> {
        self.model_spec()?;
        self.grid()?;
        self.forcing_spec()?;
        self.initial_preset()?;
        self.stepper_params()?;
        let run = &self.run;
        if !(run.t_end > 0.0 && run.t_end.is_finite()) {
            return Err(config_err(format!("run.t_end must be positive, got {}", run.t_end)));
        }
        if run.sample_stride == 0 {
            return Err(config_err("run.sample_stride must be >= 1"));
        }
        if run.checkpoint_stride == Some(0) {
            return Err(config_err("run.checkpoint_stride must be >= 1"));
        }
        if !(run.blowup_threshold > 0.0) {
            return Err(config_err("run.blowup_threshold must be positive"));
        }
        if let Some(c) = &self.convergence {
            if c.dts.is_empty() || c.dts.iter().any(|&k| !(k > 0.0 && k.is_finite())) {
                return Err(config_err("convergence.dts must be a non-empty list of positive steps"));
            }
            if c.dts.windows(2).any(|w| w[1] >= w[0]) {
                return Err(config_err("convergence.dts must be strictly decreasing"));
            }
        }
        let d = &self.diagnostics;
        if d.burst_min_separation < 0.0 {
            return Err(config_err("diagnostics.burst_min_separation must be >= 0"));
        }
        if d.tail_bands.iter().any(|b| !(b[0] <= b[1])) {
            return Err(config_err("diagnostics.tail_bands entries must be [lo, hi] with lo <= hi"));
        }
        Ok(())
    }

    pub fn to_toml_string(&self) -> String {
        toml::to_string(self).expect("configuration is representable in TOML")
    }
}

/// `round(t / dt)`, requiring `t` to be a whole number of steps.
pub fn steps_for(t: f64, dt: f64) -> Result<u64> {
    let n = (t / dt).round();
    if n < 1.0 || ((n * dt - t).abs() > 1e-9 * t.abs().max(1.0)) {
        return Err(config_err(format!(
            "time {t} is not a whole number of steps of size {dt}"
        )));
    }
    Ok(n as u64)
}

/// Splits `section.key=value`.
pub fn parse_override(arg: &str) -> Result<(String, String)> {
    let (key, value) = arg
        .split_once('=')
        .ok_or_else(|| config_err(format!("override {arg:?} is not of the form key=value")))?;
    let key = key.trim();
    if key.is_empty() || key.split('.').any(str::is_empty) {
        return Err(config_err(format!("override {arg:?} has an empty key")));
    }
    Ok((key.to_string(), value.trim().to_string()))
}

fn override_value(raw: &str) -> toml::Value {
    // Values are read as TOML literals; anything else is a bare string.
    toml::from_str::<toml::Table>(&format!("v = {raw}"))
        .ok()
        .and_then(|mut t| t.remove("v"))
        .unwrap_or_else(|| toml::Value::String(raw.to_string()))
}

fn apply_override(table: &mut toml::Table, key: &str, raw: &str) -> Result<()> {
    let mut parts: Vec<&str> = key.split('.').collect();
    let last = parts.pop().expect("key is non-empty");
    let mut cur = table;
    let mut walked = String::new();
    for p in parts {
        if !walked.is_empty() {
            walked.push('.');
        }
        walked.push_str(p);
        let entry = cur
            .entry(p.to_string())
            .or_insert_with(|| toml::Value::Table(toml::Table::new()));
        cur = entry
            .as_table_mut()
            .ok_or_else(|| config_err(format!("{walked} is not a section")))?;
    }
    cur.insert(last.to_string(), override_value(raw));
    Ok(())
}

/// Parses configuration text and applies `(key path, value)` overrides.
pub fn parse_config(text: &str, overrides: &[(String, String)]) -> Result<RunConfig> {
    let mut table: toml::Table =
        toml::from_str(text).map_err(|e| config_err(format!("invalid TOML: {e}")))?;
    for (k, v) in overrides {
        apply_override(&mut table, k, v)?;
    }
    let config: RunConfig = serde_path_to_error::deserialize(toml::Value::Table(table))
        .map_err(|e| {
            let path = e.path().to_string();
            if path == "." {
                config_err(e.inner().to_string())
            } else {
                config_err(format!("{path}: {}", e.inner()))
            }
        })?;
    config.validate()?;
    Ok(config)
}

/// Reads only the `[diagnostics]` section of `text` (defaults when absent)
/// and applies `diagnostics.*` overrides; other sections are ignored.
pub fn parse_diagnostics(text: Option<&str>, overrides: &[(String, String)]) -> Result<DiagnosticsConfig> {
    let mut table: toml::Table = match text {
        Some(t) => toml::from_str(t).map_err(|e| config_err(format!("invalid TOML: {e}")))?,
        None => toml::Table::new(),
    };
    let mut section = toml::Table::new();
    if let Some(v) = table.remove("diagnostics") {
        section.insert("diagnostics".into(), v);
    }
    for (k, v) in overrides {
        if !k.starts_with("diagnostics.") {
            return Err(config_err(format!("override {k:?} is not a diagnostics setting")));
        }
        apply_override(&mut section, k, v)?;
    }
    let inner = section
        .remove("diagnostics")
        .unwrap_or_else(|| toml::Value::Table(toml::Table::new()));
    serde_path_to_error::deserialize(inner)
        .map_err(|e| config_err(format!("diagnostics.{}: {}", e.path(), e.inner())))
}

pub fn load_config(path: &Path, overrides: &[(String, String)]) -> Result<RunConfig> {
    let text = std::fs::read_to_string(path).map_err(|e| HarnessError::io(path, e))?;
    parse_config(&text, overrides)
        .map_err(|e| match e {
            HarnessError::Config(m) => config_err(format!("{}: {m}", path.display())),
            other => other,
        })
}
