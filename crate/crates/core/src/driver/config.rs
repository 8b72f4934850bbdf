//! Run configuration: JSON file, environment overrides and validation.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use serde_json::Value;
use thiserror::Error;

use crate::absorption::{AbsorptionSettings, ControlPowerMode};
use crate::atomic::{AtomicMedium, GeneratorMode, QuadratureSpec};
use crate::cavity::CavityParams;
use crate::modefield::{analytic_profile, load_mode_profile, AnalyticSpec, ModeError, ModeProfile};
use crate::units::RateConvention;

/// Prefix of environment variables that override configuration keys.
/// Nested keys are joined with `__`, e.g. `ZENO_POWERS__CONTROL_W`.
pub const ENV_PREFIX: &str = "ZENO_";

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read {path}: {source}")]
    Io { path: String, source: std::io::Error },
    #[error("config syntax/schema error at line {line}, column {column}: {message}")]
    Schema { line: usize, column: usize, message: String },
    #[error("environment override {key}: {message}")]
    Override { key: String, message: String },
    #[error("invalid configuration: {0}")]
    Invalid(String),
    #[error(transparent)]
    Profile(#[from] ModeError),
}

/// Atomic parameters. Rate fields are tabulated numbers read through the
/// run's rate convention.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct MediumConfig {
    pub signal_dipole_c_m: f64,
    pub control_dipole_c_m: f64,
    pub decay_12: f64,
    pub decay_23: f64,
    pub decay_13: f64,
    pub density_m3: f64,
    pub doppler_width: f64,
    pub signal_wavelength_m: f64,
    pub control_wavelength_m: f64,
}

impl Default for MediumConfig {
    fn default() -> Self {
        Self {
            signal_dipole_c_m: 2.1e-29,
            control_dipole_c_m: 4.6e-30,
            decay_12: 6.0e6,
            decay_23: 280.0e3,
            decay_13: 150.0e3,
            density_m3: 5.0e18,
            doppler_width: 240.0e6,
            signal_wavelength_m: 780.0e-9,
            control_wavelength_m: 776.0e-9,
        }
    }
}

impl MediumConfig {
    pub fn medium(&self, convention: RateConvention) -> AtomicMedium {
        AtomicMedium {
            signal_dipole: self.signal_dipole_c_m,
            control_dipole: self.control_dipole_c_m,
            decay_12: convention.to_angular(self.decay_12),
            decay_23: convention.to_angular(self.decay_23),
            decay_13: convention.to_angular(self.decay_13),
            density: self.density_m3,
            doppler_width: convention.to_angular(self.doppler_width),
            signal_wavelength: self.signal_wavelength_m,
            control_wavelength: self.control_wavelength_m,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, rename_all = "snake_case")]
pub enum ProfileSource {
    Analytic(AnalyticSpec),
    File(PathBuf),
}

impl Default for ProfileSource {
    fn default() -> Self {
        ProfileSource::Analytic(AnalyticSpec::reference())
    }
}

impl ProfileSource {
    /// Builds or loads the profile; relative paths resolve against `base`.
    pub fn load(&self, base: Option<&Path>) -> Result<ModeProfile, ModeError> {
        match self {
            ProfileSource::Analytic(spec) => analytic_profile(spec),
            ProfileSource::File(path) => match base {
                Some(dir) if path.is_relative() => load_mode_profile(&dir.join(path)),
                _ => load_mode_profile(path),
            },
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct CavityConfig {
    pub q0: f64,
    pub wavelength_m: f64,
    /// Symmetric coupling κ1 = κ2 at which the atomic loss pair is
    /// evaluated (rate units).
    pub reference_coupling: f64,
    /// Optional optimizer bracket (rate units); derived from the loss pair
    /// when absent.
    pub coupling_bracket: Option<(f64, f64)>,
    /// Fixed (κ_e_on, κ_e_off) in rate units. When set, the designs use this
    /// pair instead of the atomic calculation.
    pub atomic_loss: Option<(f64, f64)>,
}

impl Default for CavityConfig {
    fn default() -> Self {
        Self { q0: 3.6e6, wavelength_m: 780.0e-9, reference_coupling: 26.7e9, coupling_bracket: None, atomic_loss: None }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PowerConfig {
    pub signal_w: f64,
    pub control_w: f64,
    pub control_mode: ControlPowerMode,
}

impl Default for PowerConfig {
    fn default() -> Self {
        Self { signal_w: 20e-15, control_w: 2.0e-6, control_mode: ControlPowerMode::WaveguideInput }
    }
}

/// Detuning grids. Spans are in rate units.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct GridConfig {
    pub absorption_half_span: f64,
    pub absorption_points: usize,
    /// Smallest half-span of the transmission grids; widened to cover the
    /// widest switching band.
    pub spectrum_min_half_span: f64,
    pub spectrum_points: usize,
    /// Control detuning from the 2↔3 line (rate units).
    pub control_detuning: f64,
}

impl Default for GridConfig {
    fn default() -> Self {
        Self {
            absorption_half_span: 4.0e9,
            absorption_points: 201,
            spectrum_min_half_span: 2.0e9,
            spectrum_points: 2001,
            control_detuning: 0.0,
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct AbsorptionConfig {
    pub generator: GeneratorMode,
    pub quadrature: QuadratureSpec,
    /// Intracavity light speed in κ_e = v·ᾱ; c/n_eff when absent.
    pub light_speed_m_s: Option<f64>,
    /// Probe floor for Im ρ12/Ωs (rate units); 10⁻⁶·Γ12 when absent.
    pub probe_floor: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RunConfig {
    pub convention: RateConvention,
    pub medium: MediumConfig,
    pub profile: ProfileSource,
    pub cavity: CavityConfig,
    pub powers: PowerConfig,
    pub grids: GridConfig,
    pub absorption: AbsorptionConfig,
    pub output_dir: PathBuf,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            convention: RateConvention::Ordinary,
            medium: MediumConfig::default(),
            profile: ProfileSource::default(),
            cavity: CavityConfig::default(),
            powers: PowerConfig::default(),
            grids: GridConfig::default(),
            absorption: AbsorptionConfig::default(),
            output_dir: PathBuf::from("out"),
        }
    }
}

fn schema_error(e: serde_json::Error) -> ConfigError {
    ConfigError::Schema { line: e.line(), column: e.column(), message: e.to_string() }
}

impl RunConfig {
    pub fn parse(text: &str) -> Result<Self, ConfigError> {
        serde_json::from_str(text).map_err(schema_error)
    }

    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path)
            .map_err(|source| ConfigError::Io { path: path.display().to_string(), source })?;
        Self::parse(&text)
    }

    /// Applies `ZENO_`-prefixed overrides. Values are read as JSON when
    /// they parse, otherwise as strings.
    pub fn with_overrides<I, K, V>(self, vars: I) -> Result<Self, ConfigError>
    where
        I: IntoIterator<Item = (K, V)>,
        K: AsRef<str>,
        V: AsRef<str>,
    {
        let mut overrides: Vec<(String, String)> = vars
            .into_iter()
            .filter_map(|(k, v)| {
                k.as_ref().strip_prefix(ENV_PREFIX).map(|rest| (rest.to_ascii_lowercase(), v.as_ref().to_string()))
            })
            .collect();
        if overrides.is_empty() {
            return Ok(self);
        }
        overrides.sort();
        let mut tree = serde_json::to_value(&self).expect("config serializes");
        for (key, raw) in &overrides {
            let path: Vec<&str> = key.split("__").collect();
            let value = serde_json::from_str::<Value>(raw).unwrap_or_else(|_| Value::String(raw.clone()));
            set_path(&mut tree, &path, value)
                .map_err(|message| ConfigError::Override { key: format!("{ENV_PREFIX}{}", key.to_ascii_uppercase()), message })?;
        }
        serde_json::from_value(tree).map_err(|e| ConfigError::Override {
            key: overrides.iter().map(|(k, _)| k.as_str()).collect::<Vec<_>>().join(","),
            message: e.to_string(),
        })
    }

    pub fn medium(&self) -> AtomicMedium {
        self.medium.medium(self.convention)
    }

    pub fn rate(&self, value: f64) -> f64 {
        self.convention.to_angular(value)
    }

    /// Cavity at the reference coupling with no atomic loss.
    pub fn reference_cavity(&self) -> CavityParams {
        let k = self.rate(self.cavity.reference_coupling);
        CavityParams::from_quality(self.cavity.wavelength_m, self.cavity.q0, k, k, 0.0)
    }

    pub fn absorption_settings(&self) -> AbsorptionSettings {
        AbsorptionSettings {
            generator: self.absorption.generator,
            quadrature: self.absorption.quadrature,
            probe_floor: self.absorption.probe_floor.map(|f| self.rate(f)),
            light_speed: self.absorption.light_speed_m_s,
            control_power: self.powers.control_mode,
        }
    }

    /// Checks everything that can be checked without computing.
    pub fn validate(&self) -> Result<(), ConfigError> {
        let invalid = |m: String| Err(ConfigError::Invalid(m));
        self.medium().validate().map_err(|e| ConfigError::Invalid(e.to_string()))?;
        self.absorption.quadrature.validate().map_err(|e| ConfigError::Invalid(e.to_string()))?;
        let positive = [
            ("cavity.q0", self.cavity.q0),
            ("cavity.wavelength_m", self.cavity.wavelength_m),
            ("cavity.reference_coupling", self.cavity.reference_coupling),
            ("grids.absorption_half_span", self.grids.absorption_half_span),
            ("grids.spectrum_min_half_span", self.grids.spectrum_min_half_span),
        ];
        for (name, v) in positive {
            if !(v.is_finite() && v > 0.0) {
                return invalid(format!("{name} must be finite and > 0, got {v}"));
            }
        }
        for (name, v) in [("powers.signal_w", self.powers.signal_w), ("powers.control_w", self.powers.control_w)] {
            if !(v.is_finite() && v >= 0.0) {
                return invalid(format!("{name} must be finite and >= 0, got {v}"));
            }
        }
        if !self.grids.control_detuning.is_finite() {
            return invalid("grids.control_detuning must be finite".into());
        }
        for (name, n) in [
            ("grids.absorption_points", self.grids.absorption_points),
            ("grids.spectrum_points", self.grids.spectrum_points),
        ] {
            if n < 3 || n % 2 == 0 {
                return invalid(format!("{name} must be odd and >= 3 so the grid contains zero, got {n}"));
            }
        }
        if let Some((lo, hi)) = self.cavity.coupling_bracket {
            if !(lo > 0.0 && hi > lo && hi.is_finite()) {
                return invalid(format!("cavity.coupling_bracket must satisfy 0 < lo < hi, got [{lo}, {hi}]"));
            }
        }
        if let Some((on, off)) = self.cavity.atomic_loss {
            if !(on.is_finite() && off.is_finite() && on >= 0.0 && off >= 0.0) {
                return invalid(format!("cavity.atomic_loss must be finite and >= 0, got ({on}, {off})"));
            }
        }
        if let Some(v) = self.absorption.light_speed_m_s {
            if !(v.is_finite() && v > 0.0) {
                return invalid(format!("absorption.light_speed_m_s must be > 0, got {v}"));
            }
        }
        if let Some(v) = self.absorption.probe_floor {
            if !(v.is_finite() && v > 0.0) {
                return invalid(format!("absorption.probe_floor must be > 0, got {v}"));
            }
        }
        if let ProfileSource::Analytic(spec) = &self.profile {
            if !(spec.target_exterior_fraction > 0.0 && spec.target_exterior_fraction < 1.0) {
                return invalid("profile exterior fraction must lie in (0, 1)".into());
            }
        }
        Ok(())
    }
}

fn set_path(tree: &mut Value, path: &[&str], value: Value) -> Result<(), String> {
    let (last, parents) = path.split_last().ok_or("empty key")?;
    let mut node = tree;
    for part in parents {
        let obj = node.as_object_mut().ok_or_else(|| format!("`{part}` is not inside an object"))?;
        node = obj.entry(part.to_string()).or_insert_with(|| Value::Object(Default::default()));
    }
    match node.as_object_mut() {
        Some(obj) => {
            obj.insert(last.to_string(), value);
            Ok(())
        }
        None => Err(format!("`{last}` is not inside an object")),
    }
}
