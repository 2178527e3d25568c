//! Run configuration: TOML in, validated `RunConfig` out.

use std::fmt;
use std::path::PathBuf;

use matterwave::budget::LabParams;
use matterwave::exec::Execution;
use matterwave::interferometer::{GwUnits, PairLink, SequenceSpec};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum Mode {
    Single,
    Pair,
    Budget,
    Sweep,
    Verify,
}

impl fmt::Display for Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Mode::Single => "single",
            Mode::Pair => "pair",
            Mode::Budget => "budget",
            Mode::Sweep => "sweep",
            Mode::Verify => "verify",
        };
        f.write_str(s)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ModelConfig {
    pub omega: f64,
    pub chi_a: f64,
    pub amplitude: f64,
    pub interrogation_time: f64,
    pub signal_phases: [f64; 3],
    pub mirror_back_action: bool,
}

impl Default for ModelConfig {
    fn default() -> Self {
        ModelConfig {
            omega: 1.0,
            chi_a: 1e-3,
            amplitude: 30.0,
            interrogation_time: 1.0,
            signal_phases: [0.0; 3],
            mirror_back_action: true,
        }
    }
}

impl ModelConfig {
    pub fn sequence(&self, signal_phases: [f64; 3]) -> SequenceSpec {
        let mut s = SequenceSpec::mach_zehnder(
            self.omega,
            self.chi_a,
            self.amplitude,
            signal_phases,
            self.interrogation_time,
        );
        s.mirror_back_action = self.mirror_back_action;
        s
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PairConfig {
    pub link: PairLink,
    pub second_signal_phases: [f64; 3],
}

impl Default for PairConfig {
    fn default() -> Self {
        PairConfig {
            link: PairLink::Shared,
            second_signal_phases: [0.0; 3],
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct BudgetConfig {
    pub atom_number: f64,
    pub photon_number: f64,
    pub momentum_scale: f64,
}

impl Default for BudgetConfig {
    fn default() -> Self {
        BudgetConfig {
            atom_number: 1e3,
            photon_number: 1e6,
            momentum_scale: 1.0,
        }
    }
}

/// A log-spaced axis.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Axis {
    pub lo: f64,
    pub hi: f64,
    pub points: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct GwConfig {
    pub strain: f64,
    pub baseline: f64,
    pub interrogation_time: f64,
    pub wavenumber: f64,
    pub time: f64,
    pub speed_of_light: f64,
}

impl Default for GwConfig {
    fn default() -> Self {
        GwConfig {
            strain: 1e-3,
            baseline: 1.0,
            interrogation_time: 1.0,
            wavenumber: 10.0,
            time: 0.5,
            speed_of_light: GwUnits::default().speed_of_light,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SweepConfig {
    /// Atom-number axis of the budget curve.
    pub atom_number: Option<Axis>,
    /// Angular-frequency axis of the gravitational-wave response.
    pub gw_omega: Option<Axis>,
    pub gw: GwConfig,
}

impl Default for SweepConfig {
    fn default() -> Self {
        SweepConfig {
            atom_number: Some(Axis {
                lo: 1e3,
                hi: 1e9,
                points: 601,
            }),
            gw_omega: Some(Axis {
                lo: 1e-3,
                hi: 1e1,
                points: 401,
            }),
            gw: GwConfig::default(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RunConfig {
    pub mode: Mode,
    pub seed: u64,
    /// Monte Carlo samples; 0 skips sampling in single and pair mode.
    pub samples: usize,
    pub execution: Execution,
    pub output_dir: PathBuf,
    pub model: ModelConfig,
    pub pair: PairConfig,
    pub budget: BudgetConfig,
    pub sweep: SweepConfig,
    /// Laboratory parameters; when given, the budget uses the mapped values.
    pub lab: Option<LabParams>,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            mode: Mode::Verify,
            seed: 20_240_601,
            samples: 100_000,
            execution: Execution::default(),
            output_dir: PathBuf::from("matterwave-out"),
            model: ModelConfig::default(),
            pair: PairConfig::default(),
            budget: BudgetConfig::default(),
            sweep: SweepConfig::default(),
            lab: None,
        }
    }
}

/// A configuration problem, located by line or field.
#[derive(Debug, thiserror::Error)]
pub enum ConfigError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("{path}: {message}")]
    Parse { path: String, message: String },
    #[error("field `{field}`: {reason}")]
    Field { field: String, reason: String },
}

fn field(name: &str, reason: impl Into<String>) -> ConfigError {
    ConfigError::Field {
        field: name.into(),
        reason: reason.into(),
    }
}

pub fn parse(text: &str, origin: &str) -> Result<RunConfig, ConfigError> {
    toml::from_str(text).map_err(|e| ConfigError::Parse {
        path: origin.into(),
        message: e.to_string(),
    })
}

fn positive(name: &str, v: f64) -> Result<(), ConfigError> {
    if v.is_finite() && v > 0.0 {
        Ok(())
    } else {
        Err(field(name, format!("must be finite and positive, got {v}")))
    }
}

fn finite(name: &str, v: f64) -> Result<(), ConfigError> {
    if v.is_finite() {
        Ok(())
    } else {
        Err(field(name, format!("must be finite, got {v}")))
    }
}

fn axis(name: &str, a: &Axis) -> Result<(), ConfigError> {
    positive(&format!("{name}.lo"), a.lo)?;
    positive(&format!("{name}.hi"), a.hi)?;
    if a.hi <= a.lo {
        return Err(field(&format!("{name}.hi"), "must exceed lo"));
    }
    if a.points < 2 {
        return Err(field(&format!("{name}.points"), "need at least two points"));
    }
    Ok(())
}

impl RunConfig {
    pub fn validate(&self) -> Result<(), ConfigError> {
        let m = &self.model;
        positive("model.omega", m.omega)?;
        finite("model.chi_a", m.chi_a)?;
        if m.chi_a < 0.0 {
            return Err(field("model.chi_a", "must be non-negative"));
        }
        positive("model.amplitude", m.amplitude)?;
        positive("model.interrogation_time", m.interrogation_time)?;
        for (k, p) in m.signal_phases.iter().enumerate() {
            finite(&format!("model.signal_phases[{k}]"), *p)?;
        }
        for (k, p) in self.pair.second_signal_phases.iter().enumerate() {
            finite(&format!("pair.second_signal_phases[{k}]"), *p)?;
        }
        positive("budget.atom_number", self.budget.atom_number)?;
        positive("budget.photon_number", self.budget.photon_number)?;
        positive("budget.momentum_scale", self.budget.momentum_scale)?;
        if let Some(lab) = &self.lab {
            lab.validate().map_err(|e| field("lab", e.to_string()))?;
        }
        if self.samples != 0 && self.samples < 1000 {
            return Err(field("samples", "use 0 to skip sampling or at least 1000"));
        }
        if self.mode == Mode::Verify && self.samples < 1000 {
            return Err(field("samples", "verify mode needs at least 1000 samples"));
        }
        let s = &self.sweep;
        if self.mode == Mode::Sweep && s.atom_number.is_none() && s.gw_omega.is_none() {
            return Err(field("sweep", "sweep mode needs at least one axis"));
        }
        if let Some(a) = &s.atom_number {
            axis("sweep.atom_number", a)?;
        }
        if let Some(a) = &s.gw_omega {
            axis("sweep.gw_omega", a)?;
        }
        positive("sweep.gw.baseline", s.gw.baseline)?;
        positive("sweep.gw.interrogation_time", s.gw.interrogation_time)?;
        positive("sweep.gw.speed_of_light", s.gw.speed_of_light)?;
        finite("sweep.gw.strain", s.gw.strain)?;
        finite("sweep.gw.wavenumber", s.gw.wavenumber)?;
        finite("sweep.gw.time", s.gw.time)?;
        Ok(())
    }

    /// Canonical TOML text; parsing it gives back an equal config.
    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    /// Hex SHA-256 of the canonical TOML text.
    pub fn hash(&self) -> String {
        let digest = Sha256::digest(self.to_toml().as_bytes());
        digest.iter().map(|b| format!("{b:02x}")).collect()
    }
}
