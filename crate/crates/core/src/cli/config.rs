//! TOML run configuration, schema version 1.

use std::path::PathBuf;

use serde::{Deserialize, Serialize};

use super::CliError;
use crate::drive::OpticalCalibration;
use crate::dynamics::{SystemParams, TimeGrid};
use crate::scenarios::{default_k_phases, default_output_dt, default_padding};

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Scenario {
    Spectrum,
    PlDecay,
    CwPulse,
    DetunedControl,
    TwoPulse,
    Saturation,
    NonlinearMap,
    Eigenfrequencies,
}

impl Scenario {
    pub const ALL: [Scenario; 8] = [
        Scenario::Spectrum,
        Scenario::PlDecay,
        Scenario::CwPulse,
        Scenario::DetunedControl,
        Scenario::TwoPulse,
        Scenario::Saturation,
        Scenario::NonlinearMap,
        Scenario::Eigenfrequencies,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Scenario::Spectrum => "spectrum",
            Scenario::PlDecay => "pl-decay",
            Scenario::CwPulse => "cw-pulse",
            Scenario::DetunedControl => "detuned-control",
            Scenario::TwoPulse => "two-pulse",
            Scenario::Saturation => "saturation",
            Scenario::NonlinearMap => "nonlinear-map",
            Scenario::Eigenfrequencies => "eigenfrequencies",
        }
    }

    pub fn description(self) -> &'static str {
        match self {
            Scenario::Spectrum => {
                "steady-state transmission versus laser detuning, with and without the dot"
            }
            Scenario::PlDecay => {
                "photoluminescence after excitation into |e,0>, with relaxation and IRF"
            }
            Scenario::CwPulse => "cw signal plus resonant control pulse: T(s), T(c), T(s+c) and dT",
            Scenario::DetunedControl => {
                "cw signal on resonance, control pulse detuned by a wavelength offset"
            }
            Scenario::TwoPulse => "normalized transmission of two Gaussian pulses versus delay",
            Scenario::Saturation => "normal-mode spectra and contrast at increasing drive",
            Scenario::NonlinearMap => "steady dn/n(s) over signal power and control multiplier",
            Scenario::Eigenfrequencies => {
                "complex polariton frequencies versus dot-cavity detuning"
            }
        }
    }

    /// Config blocks the scenario reads, besides `system` and `calibration`.
    pub fn required_blocks(self) -> &'static [&'static str] {
        match self {
            Scenario::Spectrum => &["spectrum"],
            Scenario::PlDecay => &["pl", "grid"],
            Scenario::CwPulse | Scenario::DetunedControl => &["switch", "grid"],
            Scenario::TwoPulse => &["two_pulse"],
            Scenario::Saturation => &["saturation"],
            Scenario::NonlinearMap => &["nonlinear_map"],
            Scenario::Eigenfrequencies => &["eigenfrequencies"],
        }
    }

    pub fn supports_trajectories(self) -> bool {
        matches!(self, Scenario::CwPulse | Scenario::DetunedControl)
    }
}

/// A point list, either explicit or `{ start, stop, n_points }` inclusive.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Points {
    List(Vec<f64>),
    Range {
        start: f64,
        stop: f64,
        n_points: usize,
    },
}

impl Points {
    pub fn values(&self) -> Vec<f64> {
        match self {
            Points::List(v) => v.clone(),
            Points::Range {
                start,
                stop,
                n_points,
            } => match n_points {
                0 => Vec::new(),
                1 => vec![*start],
                n => (0..*n)
                    .map(|k| start + (stop - start) * k as f64 / (n - 1) as f64)
                    .collect(),
            },
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum SolverBlock {
    #[default]
    Master,
    Trajectories {
        n_traj: usize,
    },
}

fn yes() -> bool {
    true
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SpectrumBlock {
    /// Drive amplitude (ns^-1/2); keep it in the linear-response regime.
    pub omega0: f64,
    /// Laser detunings (GHz).
    pub detunings: Points,
    /// Also write the spectrum with g = 0.
    #[serde(default = "yes")]
    pub empty_cavity: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PlBlock {
    pub tau_rise_ns: f64,
    pub irf_fwhm_ns: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SwitchBlock {
    pub cw_power_nw: f64,
    pub pulse_power_nw: f64,
    pub pulse_center_ns: f64,
    pub pulse_fwhm_ns: f64,
    /// Control wavelength offset from the cavity (nm).
    #[serde(default)]
    pub control_delta_lambda_nm: f64,
    #[serde(default = "default_k_phases")]
    pub k_phases: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TwoPulseBlock {
    pub per_pulse_power_nw: f64,
    pub fwhm_ns: f64,
    pub delays_ns: Points,
    /// One sweep per dephasing rate (GHz).
    pub gamma_d: Vec<f64>,
    #[serde(default = "default_k_phases")]
    pub k_phases: usize,
    #[serde(default = "default_padding")]
    pub padding_ns: f64,
    #[serde(default = "default_output_dt")]
    pub output_dt_ns: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SaturationBlock {
    pub powers_nw: Vec<f64>,
    /// Pulse FWHM used for the cw-equivalent flux (ns).
    pub fwhm_ns: f64,
    pub detunings: Points,
}

fn default_multipliers() -> Vec<f64> {
    vec![1.0, 2.0, 3.0, 4.0, 5.0]
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MapBlock {
    pub signal_powers_nw: Points,
    #[serde(default = "default_multipliers")]
    pub multipliers: Vec<f64>,
    #[serde(default = "default_k_phases")]
    pub k_phases: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EigenBlock {
    /// Dot-cavity detunings ω_d − ω_r (GHz).
    pub delta: Points,
}

fn default_output_dir() -> PathBuf {
    PathBuf::from("out")
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub schema_version: u32,
    pub scenario: Scenario,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub master_seed: Option<u64>,
    #[serde(default = "default_output_dir")]
    pub output_dir: PathBuf,
    pub system: SystemParams,
    #[serde(default)]
    pub calibration: OpticalCalibration,
    #[serde(default)]
    pub solver: SolverBlock,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub grid: Option<TimeGrid>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub spectrum: Option<SpectrumBlock>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub pl: Option<PlBlock>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub switch: Option<SwitchBlock>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub two_pulse: Option<TwoPulseBlock>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub saturation: Option<SaturationBlock>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub nonlinear_map: Option<MapBlock>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub eigenfrequencies: Option<EigenBlock>,
}

impl RunConfig {
    /// Parse TOML text and apply `key=value` overrides with dotted keys.
    pub fn from_toml(text: &str, overrides: &[String]) -> Result<Self, CliError> {
        if overrides.is_empty() {
            return toml::from_str(text).map_err(|e| CliError::Parse(e.to_string()));
        }
        let mut table: toml::Table = text
            .parse()
            .map_err(|e: toml::de::Error| CliError::Parse(e.to_string()))?;
        for item in overrides {
            apply_override(&mut table, item)?;
        }
        let merged = toml::to_string(&table).map_err(|e| CliError::Parse(e.to_string()))?;
        toml::from_str(&merged).map_err(|e| CliError::Parse(format!("after overrides: {e}")))
    }

    pub fn grid(&self) -> Result<TimeGrid, CliError> {
        self.grid.ok_or(CliError::MissingBlock("grid"))
    }

    pub fn seed(&self) -> Result<u64, CliError> {
        self.master_seed
            .ok_or(CliError::MissingBlock("master_seed"))
    }
}

fn parse_value(raw: &str) -> toml::Value {
    let wrapped = format!("v = {raw}");
    match wrapped.parse::<toml::Table>() {
        Ok(mut t) => t
            .remove("v")
            .unwrap_or_else(|| toml::Value::String(raw.to_string())),
        Err(_) => toml::Value::String(raw.to_string()),
    }
}

fn apply_override(table: &mut toml::Table, item: &str) -> Result<(), CliError> {
    let bad = |why: &str| CliError::Override(item.to_string(), why.to_string());
    let (key, raw) = item
        .split_once('=')
        .ok_or_else(|| bad("expected key=value"))?;
    let path: Vec<&str> = key.trim().split('.').collect();
    if path.iter().any(|p| p.is_empty()) {
        return Err(bad("empty key segment"));
    }
    let (last, parents) = path
        .split_last()
        .expect("split yields at least one segment");
    let mut node = table;
    for p in parents {
        let entry = node
            .entry(p.to_string())
            .or_insert_with(|| toml::Value::Table(toml::Table::new()));
        node = entry
            .as_table_mut()
            .ok_or_else(|| bad(&format!("`{p}` is not a table")))?;
    }
    node.insert(last.to_string(), parse_value(raw.trim()));
    Ok(())
}
