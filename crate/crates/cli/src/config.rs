//! JSON run configuration.
//!
//! Every object rejects unknown keys. Energies and times are in units with
//! `hbar = k_B = 1`.

use otto_core::cycle::CycleSpec;
use otto_core::optimize::AdiabatConstraint;
use otto_core::schedule::{NoiseParams, ScheduleKind};
use otto_core::sweep::TemperatureMode;
use otto_core::{Bath, MediumParams};
use serde::{Deserialize, Serialize};

use crate::error::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum Mode {
    Cycle,
    LimitCycle,
    Trajectory,
    Frictionless,
    Optimize,
    Comb,
    MinTemp,
    JScaling,
}

impl Mode {
    pub fn name(self) -> &'static str {
        match self {
            Mode::Cycle => "cycle",
            Mode::LimitCycle => "limit-cycle",
            Mode::Trajectory => "trajectory",
            Mode::Frictionless => "frictionless",
            Mode::Optimize => "optimize",
            Mode::Comb => "comb",
            Mode::MinTemp => "min-temp",
            Mode::JScaling => "j-scaling",
        }
    }
}

fn one() -> f64 {
    1.0
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CycleConfig {
    pub j: f64,
    #[serde(default)]
    pub gamma_b: f64,
    pub omega_c: f64,
    pub omega_h: f64,
    pub t_c: f64,
    pub t_h: f64,
    #[serde(default = "one")]
    pub gamma_c: f64,
    #[serde(default = "one")]
    pub gamma_h: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tau_h: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tau_hc: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tau_c: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tau_ch: Option<f64>,
    /// Winding number selecting a frictionless demagnetization time.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub l_hc: Option<u32>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub l_ch: Option<u32>,
    #[serde(default)]
    pub schedule_hc: ScheduleKind,
    #[serde(default)]
    pub schedule_ch: ScheduleKind,
    #[serde(default)]
    pub gamma_p: f64,
    #[serde(default)]
    pub gamma_a: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub injected_delta: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TrajectoryConfig {
    #[serde(default = "TrajectoryConfig::default_samples")]
    pub samples: usize,
}

impl TrajectoryConfig {
    fn default_samples() -> usize {
        200
    }
}

impl Default for TrajectoryConfig {
    fn default() -> Self {
        Self {
            samples: Self::default_samples(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FrictionlessConfig {
    #[serde(default = "FrictionlessConfig::default_l_max")]
    pub l_max: u32,
}

impl FrictionlessConfig {
    fn default_l_max() -> u32 {
        10
    }
}

impl Default for FrictionlessConfig {
    fn default() -> Self {
        Self {
            l_max: Self::default_l_max(),
        }
    }
}

fn default_budget() -> usize {
    20_000
}

/// Mirror of [`AdiabatConstraint`] that rejects unknown keys.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case", tag = "kind", deny_unknown_fields)]
pub enum ConstraintConfig {
    #[default]
    Free,
    Symmetric,
    Fixed,
    FrictionlessGrid {
        l_max: u32,
        #[serde(default)]
        symmetric: bool,
    },
}

impl From<ConstraintConfig> for AdiabatConstraint {
    fn from(c: ConstraintConfig) -> Self {
        match c {
            ConstraintConfig::Free => AdiabatConstraint::Free,
            ConstraintConfig::Symmetric => AdiabatConstraint::Symmetric,
            ConstraintConfig::Fixed => AdiabatConstraint::Fixed,
            ConstraintConfig::FrictionlessGrid { l_max, symmetric } => {
                AdiabatConstraint::FrictionlessGrid { l_max, symmetric }
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OptimizeConfig {
    /// Fixed cycle time; absent means maximize cooling power.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub total_time: Option<f64>,
    #[serde(default)]
    pub adiabats: ConstraintConfig,
    #[serde(default = "default_budget")]
    pub budget: usize,
}

impl Default for OptimizeConfig {
    fn default() -> Self {
        Self {
            total_time: None,
            adiabats: ConstraintConfig::default(),
            budget: default_budget(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CombConfig {
    pub tau_iso: f64,
    #[serde(default = "CombConfig::default_l_max")]
    pub l_max: u32,
    #[serde(default = "default_budget")]
    pub budget: usize,
    /// Explicit cycle times instead of the quantized grid and its midpoints.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub times: Option<Vec<f64>>,
}

impl CombConfig {
    fn default_l_max() -> u32 {
        8
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(
    rename_all = "kebab-case",
    tag = "kind",
    content = "value",
    deny_unknown_fields
)]
pub enum TemperatureModeConfig {
    FixedReversibility(f64),
    FixedHot(f64),
}

impl From<TemperatureModeConfig> for TemperatureMode {
    fn from(m: TemperatureModeConfig) -> Self {
        match m {
            TemperatureModeConfig::FixedReversibility(r) => TemperatureMode::FixedReversibility(r),
            TemperatureModeConfig::FixedHot(t) => TemperatureMode::FixedHot(t),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MinTempPointConfig {
    pub l: u32,
    #[serde(default)]
    pub gamma_p: f64,
    #[serde(default)]
    pub gamma_a: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub injected_delta: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MinTempConfig {
    pub mode: TemperatureModeConfig,
    pub points: Vec<MinTempPointConfig>,
    #[serde(default = "MinTempConfig::default_strength")]
    pub isochore_strength: f64,
    #[serde(default = "MinTempConfig::default_resolution")]
    pub resolution: f64,
}

impl MinTempConfig {
    fn default_strength() -> f64 {
        40.0
    }

    fn default_resolution() -> f64 {
        1e-4
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct JScalingConfig {
    pub j_values: Vec<f64>,
    pub j_over_tc: Vec<f64>,
    #[serde(default = "JScalingConfig::default_reversibility")]
    pub reversibility: f64,
    #[serde(default = "JScalingConfig::default_ratio")]
    pub tc_over_th: f64,
    #[serde(default = "JScalingConfig::default_omega_c")]
    pub omega_c: f64,
    #[serde(default = "JScalingConfig::default_conductance")]
    pub conductance: f64,
    #[serde(default)]
    pub gamma_b: f64,
    #[serde(default = "JScalingConfig::default_l_max")]
    pub l_max: u32,
    #[serde(default)]
    pub gamma_p: f64,
    #[serde(default)]
    pub gamma_a: f64,
    #[serde(default = "default_budget")]
    pub budget: usize,
}

impl JScalingConfig {
    fn default_reversibility() -> f64 {
        1.453
    }
    fn default_ratio() -> f64 {
        0.75
    }
    fn default_omega_c() -> f64 {
        0.1
    }
    fn default_conductance() -> f64 {
        40.0
    }
    fn default_l_max() -> u32 {
        8
    }
}

/// Top-level configuration document.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(deny_unknown_fields)]
pub struct ConfigFile {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub out: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub cycle: Option<CycleConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub trajectory: Option<TrajectoryConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub frictionless: Option<FrictionlessConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub optimize: Option<OptimizeConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub comb: Option<CombConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub min_temp: Option<MinTempConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub j_scaling: Option<JScalingConfig>,
}

/// Parses a configuration document; syntax errors and unknown keys carry
/// the line and column.
pub fn parse_config(text: &str) -> Result<ConfigFile, CliError> {
    serde_json::from_str(text).map_err(CliError::from_json)
}

impl CycleConfig {
    pub fn medium(&self) -> Result<MediumParams, CliError> {
        Ok(MediumParams::new(self.j, self.gamma_b)?)
    }

    /// Builds the cycle. Durations missing from the document are filled
    /// with `fallback` when given, otherwise they are an error.
    pub fn spec(&self, fallback: Option<f64>) -> Result<CycleSpec, CliError> {
        let medium = self.medium()?;
        let need = |name: &'static str, v: Option<f64>| {
            v.or(fallback).ok_or_else(|| {
                CliError::Validation(format!("cycle.{name} is required for this mode"))
            })
        };
        if self.l_hc.is_some() && self.tau_hc.is_some() {
            return Err(CliError::Validation(
                "give at most one of cycle.tau_hc and cycle.l_hc".into(),
            ));
        }
        if self.l_ch.is_some() && self.tau_ch.is_some() {
            return Err(CliError::Validation(
                "give at most one of cycle.tau_ch and cycle.l_ch".into(),
            ));
        }
        let winding_time = |l: u32, ws: f64, we: f64| -> Result<f64, CliError> {
            let g = otto_core::adiabat::AdiabatGeometry::new(&medium, ws, we, 1.0);
            Ok(otto_core::adiabat::frictionless_solution(&g, l)?.tau_l)
        };
        let tau_hc = match self.l_hc {
            Some(l) => winding_time(l, self.omega_h, self.omega_c)?,
            None => need("tau_hc", self.tau_hc)?,
        };
        let tau_ch = match self.l_ch {
            Some(l) => winding_time(l, self.omega_c, self.omega_h)?,
            None => need("tau_ch", self.tau_ch)?,
        };
        let mut spec = CycleSpec::new(
            medium,
            self.omega_c,
            self.omega_h,
            Bath::new(self.t_c, self.gamma_c)?,
            Bath::new(self.t_h, self.gamma_h)?,
            need("tau_h", self.tau_h)?,
            tau_hc,
            need("tau_c", self.tau_c)?,
            tau_ch,
        );
        spec.schedule_hc = self.schedule_hc.clone();
        spec.schedule_ch = self.schedule_ch.clone();
        spec.noise = NoiseParams::new(self.gamma_p, self.gamma_a)?;
        spec.injected_delta = self.injected_delta;
        spec.validate()?;
        spec.demagnetization().validate()?;
        spec.magnetization().validate()?;
        Ok(spec)
    }
}
