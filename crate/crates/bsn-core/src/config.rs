//! Run configuration: one hierarchical TOML file per run.
//!
//! The file replaces per-node launch files with dotted key paths; every
//! validation failure names the offending key path. The key schema is
//! normative, the serialization syntax is TOML.

use crate::formula::FormulaShape;
use crate::message::QosAttribute;
use serde::{Deserialize, Serialize};
use std::collections::BTreeSet;
use std::path::Path;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("{path}: {reason}")]
    Invalid { path: String, reason: String },
    #[error("cannot read {path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
    #[error("cannot parse {path}: {source}")]
    Syntax {
        path: String,
        source: Box<toml::de::Error>,
    },
}

impl ConfigError {
    pub fn invalid(path: impl Into<String>, reason: impl Into<String>) -> Self {
        ConfigError::Invalid {
            path: path.into(),
            reason: reason.into(),
        }
    }
}

pub const STOCHASTIC_TOLERANCE: f64 = 1e-9;

fn default_tick_ms() -> u64 {
    100
}
fn default_duration() -> f64 {
    300.0
}
fn default_seed() -> u64 {
    42
}
fn default_out_dir() -> String {
    "out".into()
}
fn default_patient_frequency() -> f64 {
    10.0
}
fn default_true() -> bool {
    true
}
fn default_accuracy() -> f64 {
    1.0
}
fn default_energy() -> f64 {
    0.1
}
fn default_failure_margin() -> f64 {
    0.05
}
fn default_battery_capacity() -> f64 {
    100.0
}
fn default_sensor_f_min() -> f64 {
    0.5
}
fn default_sensor_f_max() -> f64 {
    12.0
}
fn default_hub_id() -> String {
    "central_hub".into()
}
fn default_queue_capacity() -> usize {
    10
}
fn default_hub_f_min() -> f64 {
    1.0
}
fn default_hub_f_max() -> f64 {
    120.0
}
fn default_one() -> f64 {
    1.0
}
fn default_stability_margin() -> f64 {
    0.02
}
fn default_kp() -> f64 {
    200.0
}
fn default_info_quant() -> usize {
    2400
}
fn default_offset() -> f64 {
    0.2
}
fn default_gain() -> f64 {
    0.05
}
fn default_flood_burst() -> usize {
    4
}
fn default_flood_frequency() -> f64 {
    4.0
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimulationSection {
    #[serde(default = "default_duration")]
    pub duration: f64,
    #[serde(default = "default_seed")]
    pub seed: u64,
    #[serde(default = "default_tick_ms")]
    pub tick_ms: u64,
    #[serde(default = "default_out_dir")]
    pub out_dir: String,
}

impl Default for SimulationSection {
    fn default() -> Self {
        Self {
            duration: default_duration(),
            seed: default_seed(),
            tick_ms: default_tick_ms(),
            out_dir: default_out_dir(),
        }
    }
}

/// One five-state discrete-time Markov chain driving a vital sign.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VitalSignConfig {
    pub name: String,
    /// State changes per virtual second; the chain may move every
    /// `1/change_frequency + change_offset` seconds.
    pub change_frequency: f64,
    #[serde(default)]
    pub change_offset: f64,
    /// Row-stochastic 5x5 matrix. May be omitted when the paired sensor's
    /// risk band probabilities are present; a stationary matrix is then
    /// synthesized from them.
    #[serde(default)]
    pub transition_matrix: Option<Vec<Vec<f64>>>,
    /// Five `[lo, hi)` value ranges, ordered and pairwise disjoint.
    pub state_ranges: Vec<[f64; 2]>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PatientSection {
    /// How often the chains are checked for due transitions.
    #[serde(default = "default_patient_frequency")]
    pub frequency: f64,
    pub vital_signs: Vec<VitalSignConfig>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SensorSection {
    #[serde(alias = "sensor_id")]
    pub id: String,
    /// Vital sign this sensor samples; defaults to the sensor id.
    #[serde(default)]
    pub vital_sign: Option<String>,
    #[serde(alias = "initial_frequency")]
    pub frequency: f64,
    /// (p_low, p_mod, p_high), summing to 1.
    pub risk_band_probabilities: [f64; 3],
    /// Five ordered `[lo, hi)` intervals mapped to bands
    /// high, moderate, low, moderate, high.
    pub risk_value_ranges: Vec<[f64; 2]>,
    #[serde(default = "default_accuracy")]
    pub accuracy: f64,
    #[serde(default = "default_true")]
    pub instant_recharge: bool,
    #[serde(default = "default_true")]
    pub start_active: bool,
    #[serde(default = "default_energy")]
    pub energy_per_execution: f64,
    /// Noise factor magnitude beyond which a collection fails.
    #[serde(default = "default_failure_margin")]
    pub failure_margin: f64,
    #[serde(default = "default_battery_capacity")]
    pub battery_capacity: f64,
    /// Units per second while recharging; defaults to 10x energy_per_execution.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub recharge_rate: Option<f64>,
    #[serde(default = "default_sensor_f_min")]
    pub f_min: f64,
    #[serde(default = "default_sensor_f_max")]
    pub f_max: f64,
}

impl SensorSection {
    pub fn vital_sign(&self) -> &str {
        self.vital_sign.as_deref().unwrap_or(&self.id)
    }

    pub fn recharge_rate(&self) -> f64 {
        self.recharge_rate
            .unwrap_or(10.0 * self.energy_per_execution)
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FusionStrategy {
    #[default]
    Mean,
    Max,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HubSection {
    #[serde(default = "default_hub_id")]
    pub id: String,
    #[serde(alias = "initial_frequency")]
    pub frequency: f64,
    #[serde(default = "default_queue_capacity", alias = "capacity")]
    pub queue_capacity: usize,
    #[serde(default = "default_energy")]
    pub energy_per_execution: f64,
    #[serde(default)]
    pub fusion: FusionStrategy,
    #[serde(default = "default_true")]
    pub instant_recharge: bool,
    #[serde(default = "default_battery_capacity")]
    pub battery_capacity: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub recharge_rate: Option<f64>,
    #[serde(default = "default_hub_f_min")]
    pub f_min: f64,
    #[serde(default = "default_hub_f_max")]
    pub f_max: f64,
}

impl HubSection {
    pub fn recharge_rate(&self) -> f64 {
        self.recharge_rate
            .unwrap_or(10.0 * self.energy_per_execution)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum WaveKind {
    Step,
    Ramp,
    Random,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WaveConfig {
    pub sensor: String,
    pub kind: WaveKind,
    #[serde(default)]
    pub offset: f64,
    pub amplitude: f64,
    #[serde(default = "default_one")]
    pub frequency: f64,
    pub duration: f64,
    pub begin: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InjectorSection {
    #[serde(default = "default_true")]
    pub enabled: bool,
    /// Global injection rate driving the injector node.
    #[serde(default = "default_one")]
    pub frequency: f64,
    /// Sensors eligible for injection; all others never receive noise.
    #[serde(default)]
    pub sensors: Vec<String>,
    #[serde(default)]
    pub waves: Vec<WaveConfig>,
}

impl Default for InjectorSection {
    fn default() -> Self {
        Self {
            enabled: false,
            frequency: default_one(),
            sensors: Vec::new(),
            waves: Vec::new(),
        }
    }
}

/// Synthetic hub traffic simulating additional patients flooding the channel.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FloodSection {
    #[serde(default)]
    pub enabled: bool,
    #[serde(default = "default_flood_frequency")]
    pub frequency: f64,
    /// Messages published per activation.
    #[serde(default = "default_flood_burst")]
    pub burst: usize,
}

impl Default for FloodSection {
    fn default() -> Self {
        Self {
            enabled: false,
            frequency: default_flood_frequency(),
            burst: default_flood_burst(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ManagerSection {
    #[serde(default = "default_one")]
    pub monitor_freq: f64,
    #[serde(default = "default_one")]
    pub actuation_freq: f64,
    pub setpoint: f64,
    #[serde(default = "default_info_quant")]
    pub info_quant: usize,
    /// Half-width of the planner's common-delta search.
    #[serde(default = "default_offset")]
    pub offset: f64,
    /// Step of the planner's common-delta search.
    #[serde(default = "default_gain")]
    pub gain: f64,
    pub qos_attribute: QosAttribute,
    #[serde(default = "default_stability_margin")]
    pub stability_margin: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnactorSection {
    #[serde(default = "default_one")]
    pub frequency: f64,
    #[serde(default = "default_kp")]
    pub kp: f64,
}

impl Default for EnactorSection {
    fn default() -> Self {
        Self {
            frequency: default_one(),
            kp: default_kp(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FormulaSection {
    #[serde(default = "reliability_shape_default")]
    pub reliability: FormulaShape,
    #[serde(default = "cost_shape_default")]
    pub cost: FormulaShape,
}

fn reliability_shape_default() -> FormulaShape {
    FormulaShape::ProductOfTerms
}
fn cost_shape_default() -> FormulaShape {
    FormulaShape::SumOfTerms
}

impl Default for FormulaSection {
    fn default() -> Self {
        Self {
            reliability: reliability_shape_default(),
            cost: cost_shape_default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    #[serde(default)]
    pub simulation: SimulationSection,
    pub patient: PatientSection,
    pub sensors: Vec<SensorSection>,
    pub hub: HubSection,
    #[serde(default)]
    pub injector: InjectorSection,
    #[serde(default)]
    pub flood: FloodSection,
    pub manager: ManagerSection,
    #[serde(default)]
    pub enactor: EnactorSection,
    #[serde(default)]
    pub formulas: FormulaSection,
}

fn check_ranges(path: &str, ranges: &[[f64; 2]]) -> Result<(), ConfigError> {
    if ranges.len() != 5 {
        return Err(ConfigError::invalid(
            path,
            format!("expected 5 ranges, found {}", ranges.len()),
        ));
    }
    for (i, r) in ranges.iter().enumerate() {
        if r[0] >= r[1] {
            return Err(ConfigError::invalid(
                format!("{path}[{i}]"),
                format!("range [{}, {}) is empty or inverted", r[0], r[1]),
            ));
        }
    }
    for i in 0..4 {
        if ranges[i][1] > ranges[i + 1][0] + STOCHASTIC_TOLERANCE {
            return Err(ConfigError::invalid(
                format!("{path}[{}]", i + 1),
                format!(
                    "range [{}, {}) overlaps or is out of order with [{}, {})",
                    ranges[i + 1][0],
                    ranges[i + 1][1],
                    ranges[i][0],
                    ranges[i][1]
                ),
            ));
        }
    }
    Ok(())
}

pub(crate) fn check_matrix(path: &str, matrix: &[Vec<f64>]) -> Result<(), ConfigError> {
    if matrix.len() != 5 {
        return Err(ConfigError::invalid(
            path,
            format!("expected 5 rows, found {}", matrix.len()),
        ));
    }
    for (i, row) in matrix.iter().enumerate() {
        if row.len() != 5 {
            return Err(ConfigError::invalid(
                format!("{path}[{i}]"),
                format!("expected 5 entries, found {}", row.len()),
            ));
        }
        if let Some(bad) = row.iter().find(|p| **p < 0.0) {
            return Err(ConfigError::invalid(
                format!("{path}[{i}]"),
                format!("negative probability {bad}"),
            ));
        }
        let sum: f64 = row.iter().sum();
        if (sum - 1.0).abs() > STOCHASTIC_TOLERANCE {
            return Err(ConfigError::invalid(
                format!("{path}[{i}]"),
                format!("row sums to {sum:.6}, expected 1"),
            ));
        }
    }
    Ok(())
}

impl RunConfig {
    pub fn from_toml_str(text: &str, origin: &str) -> Result<Self, ConfigError> {
        let config: RunConfig = toml::from_str(text).map_err(|e| ConfigError::Syntax {
            path: origin.to_string(),
            source: Box::new(e),
        })?;
        config.validate()?;
        Ok(config)
    }

    pub fn from_file(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|e| ConfigError::Io {
            path: path.display().to_string(),
            source: e,
        })?;
        Self::from_toml_str(&text, &path.display().to_string())
    }

    pub fn to_toml_string(&self) -> String {
        toml::to_string_pretty(self).expect("config serializes")
    }

    /// Ordered ids of all managed components: sensors in config order, then the hub.
    pub fn managed_component_ids(&self) -> Vec<String> {
        let mut ids: Vec<String> = self.sensors.iter().map(|s| s.id.clone()).collect();
        ids.push(self.hub.id.clone());
        ids
    }

    /// The parametric formula configured for an attribute.
    pub fn formula(&self, attribute: QosAttribute) -> crate::formula::ParametricFormula {
        let shape = match attribute {
            QosAttribute::Reliability => self.formulas.reliability,
            QosAttribute::Cost => self.formulas.cost,
        };
        crate::formula::ParametricFormula { attribute, shape }
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        let sim = &self.simulation;
        if sim.duration <= 0.0 {
            return Err(ConfigError::invalid("simulation.duration", "must be positive"));
        }
        if sim.tick_ms == 0 {
            return Err(ConfigError::invalid("simulation.tick_ms", "must be positive"));
        }
        if self.patient.frequency <= 0.0 {
            return Err(ConfigError::invalid("patient.frequency", "must be positive"));
        }
        if self.patient.vital_signs.is_empty() {
            return Err(ConfigError::invalid("patient.vital_signs", "at least one vital sign required"));
        }
        let mut sign_names = BTreeSet::new();
        for (i, sign) in self.patient.vital_signs.iter().enumerate() {
            let path = format!("patient.vital_signs[{i}]");
            if !sign_names.insert(sign.name.clone()) {
                return Err(ConfigError::invalid(
                    format!("{path}.name"),
                    format!("duplicate vital sign '{}'", sign.name),
                ));
            }
            if sign.change_frequency <= 0.0 {
                return Err(ConfigError::invalid(
                    format!("{path}.change_frequency"),
                    "must be positive",
                ));
            }
            if sign.change_offset < 0.0 {
                return Err(ConfigError::invalid(
                    format!("{path}.change_offset"),
                    "must be non-negative",
                ));
            }
            if let Some(matrix) = &sign.transition_matrix {
                check_matrix(&format!("{path}.transition_matrix"), matrix)?;
            }
            check_ranges(&format!("{path}.state_ranges"), &sign.state_ranges)?;
        }

        if self.sensors.is_empty() {
            return Err(ConfigError::invalid("sensors", "at least one sensor required"));
        }
        let mut ids = BTreeSet::new();
        for (i, sensor) in self.sensors.iter().enumerate() {
            let path = format!("sensors[{i}]");
            if !ids.insert(sensor.id.clone()) {
                return Err(ConfigError::invalid(
                    format!("{path}.id"),
                    format!("duplicate component id '{}'", sensor.id),
                ));
            }
            if !sign_names.contains(sensor.vital_sign()) {
                return Err(ConfigError::invalid(
                    format!("{path}.vital_sign"),
                    format!("unknown vital sign '{}'", sensor.vital_sign()),
                ));
            }
            let psum: f64 = sensor.risk_band_probabilities.iter().sum();
            if (psum - 1.0).abs() > STOCHASTIC_TOLERANCE
                || sensor.risk_band_probabilities.iter().any(|p| *p < 0.0)
            {
                return Err(ConfigError::invalid(
                    format!("{path}.risk_band_probabilities"),
                    format!("probabilities must be non-negative and sum to 1, got sum {psum}"),
                ));
            }
            check_ranges(&format!("{path}.risk_value_ranges"), &sensor.risk_value_ranges)?;
            if !(0.0..=1.0).contains(&sensor.accuracy) {
                return Err(ConfigError::invalid(
                    format!("{path}.accuracy"),
                    "must be within [0, 1]",
                ));
            }
            if sensor.energy_per_execution < 0.0 {
                return Err(ConfigError::invalid(
                    format!("{path}.energy_per_execution"),
                    "must be non-negative",
                ));
            }
            if sensor.failure_margin < 0.0 {
                return Err(ConfigError::invalid(
                    format!("{path}.failure_margin"),
                    "must be non-negative",
                ));
            }
            if sensor.battery_capacity <= 0.0 {
                return Err(ConfigError::invalid(
                    format!("{path}.battery_capacity"),
                    "must be positive",
                ));
            }
            if sensor.recharge_rate() <= 0.0 {
                return Err(ConfigError::invalid(
                    format!("{path}.recharge_rate"),
                    "must be positive",
                ));
            }
            if !(sensor.f_min > 0.0 && sensor.f_min < sensor.f_max) {
                return Err(ConfigError::invalid(
                    format!("{path}.f_min"),
                    "need 0 < f_min < f_max",
                ));
            }
            if !(sensor.f_min..=sensor.f_max).contains(&sensor.frequency) {
                return Err(ConfigError::invalid(
                    format!("{path}.frequency"),
                    format!(
                        "{} outside actuation bounds [{}, {}]",
                        sensor.frequency, sensor.f_min, sensor.f_max
                    ),
                ));
            }
        }

        if !ids.insert(self.hub.id.clone()) {
            return Err(ConfigError::invalid(
                "hub.id",
                format!("duplicate component id '{}'", self.hub.id),
            ));
        }
        if self.hub.queue_capacity == 0 {
            return Err(ConfigError::invalid("hub.queue_capacity", "must be at least 1"));
        }
        if !(self.hub.f_min > 0.0 && self.hub.f_min < self.hub.f_max) {
            return Err(ConfigError::invalid("hub.f_min", "need 0 < f_min < f_max"));
        }
        if !(self.hub.f_min..=self.hub.f_max).contains(&self.hub.frequency) {
            return Err(ConfigError::invalid(
                "hub.frequency",
                format!(
                    "{} outside actuation bounds [{}, {}]",
                    self.hub.frequency, self.hub.f_min, self.hub.f_max
                ),
            ));
        }

        if self.injector.enabled {
            if self.injector.frequency <= 0.0 {
                return Err(ConfigError::invalid("injector.frequency", "must be positive"));
            }
            for (i, target) in self.injector.sensors.iter().enumerate() {
                if !self.sensors.iter().any(|s| &s.id == target) {
                    return Err(ConfigError::invalid(
                        format!("injector.sensors[{i}]"),
                        format!("unknown sensor '{target}'"),
                    ));
                }
            }
            for (i, wave) in self.injector.waves.iter().enumerate() {
                let path = format!("injector.waves[{i}]");
                if !self.injector.sensors.contains(&wave.sensor) {
                    return Err(ConfigError::invalid(
                        format!("{path}.sensor"),
                        format!("'{}' is not in injector.sensors", wave.sensor),
                    ));
                }
                if wave.duration < 0.0 {
                    return Err(ConfigError::invalid(
                        format!("{path}.duration"),
                        "must be non-negative",
                    ));
                }
                if wave.begin < 0.0 {
                    return Err(ConfigError::invalid(
                        format!("{path}.begin"),
                        "must be non-negative",
                    ));
                }
                if wave.frequency <= 0.0 {
                    return Err(ConfigError::invalid(
                        format!("{path}.frequency"),
                        "must be positive",
                    ));
                }
            }
        }

        if self.flood.enabled {
            if self.flood.frequency <= 0.0 {
                return Err(ConfigError::invalid("flood.frequency", "must be positive"));
            }
            if self.flood.burst == 0 {
                return Err(ConfigError::invalid("flood.burst", "must be at least 1"));
            }
        }

        let manager = &self.manager;
        if manager.monitor_freq <= 0.0 {
            return Err(ConfigError::invalid("manager.monitor_freq", "must be positive"));
        }
        if manager.actuation_freq <= 0.0 {
            return Err(ConfigError::invalid("manager.actuation_freq", "must be positive"));
        }
        if manager.info_quant == 0 {
            return Err(ConfigError::invalid("manager.info_quant", "must be at least 1"));
        }
        if !(manager.gain > 0.0 && manager.gain <= manager.offset) {
            return Err(ConfigError::invalid(
                "manager.gain",
                "need 0 < gain <= offset",
            ));
        }
        if manager.stability_margin < 0.0 {
            return Err(ConfigError::invalid(
                "manager.stability_margin",
                "must be non-negative",
            ));
        }
        match manager.qos_attribute {
            QosAttribute::Reliability => {
                if !(manager.setpoint > 0.0 && manager.setpoint <= 1.0) {
                    return Err(ConfigError::invalid(
                        "manager.setpoint",
                        "reliability setpoint must be in (0, 1]",
                    ));
                }
            }
            QosAttribute::Cost => {
                if manager.setpoint <= 0.0 {
                    return Err(ConfigError::invalid(
                        "manager.setpoint",
                        "cost setpoint must be positive",
                    ));
                }
            }
        }
        if self.enactor.frequency <= 0.0 {
            return Err(ConfigError::invalid("enactor.frequency", "must be positive"));
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn base() -> RunConfig {
        crate::default_config()
    }

    fn expect_invalid(config: &RunConfig, path_fragment: &str) {
        match config.validate() {
            Err(ConfigError::Invalid { path, .. }) => {
                assert!(path.contains(path_fragment), "path '{path}' lacks '{path_fragment}'")
            }
            other => panic!("expected invalid {path_fragment}, got {other:?}"),
        }
    }

    #[test]
    fn overlapping_state_ranges_rejected() {
        let mut config = base();
        config.patient.vital_signs[0].state_ranges[1] = [50.0, 70.0];
        expect_invalid(&config, "patient.vital_signs[0].state_ranges");
    }

    #[test]
    fn band_probabilities_must_sum_to_one() {
        let mut config = base();
        config.sensors[2].risk_band_probabilities = [0.5, 0.2, 0.2];
        expect_invalid(&config, "sensors[2].risk_band_probabilities");
    }

    #[test]
    fn sensor_must_reference_a_known_vital_sign() {
        let mut config = base();
        config.sensors[0].vital_sign = Some("pulse_ox".into());
        expect_invalid(&config, "sensors[0].vital_sign");
    }

    #[test]
    fn duplicate_component_ids_rejected() {
        let mut config = base();
        let first = config.sensors[0].id.clone();
        config.sensors[1].id = first;
        expect_invalid(&config, "sensors[1].id");
        let mut config = base();
        config.hub.id = config.sensors[0].id.clone();
        expect_invalid(&config, "hub.id");
    }

    #[test]
    fn injector_targets_must_exist_and_back_the_waves() {
        let mut config = base();
        config.injector.sensors.push("ghost".into());
        expect_invalid(&config, "injector.sensors[2]");

        let mut config = base();
        config.injector.waves[0].sensor = config.sensors[5].id.clone();
        expect_invalid(&config, "injector.waves[0].sensor");
    }

    #[test]
    fn setpoint_domain_follows_the_engine() {
        let mut config = base();
        config.manager.setpoint = 1.2;
        expect_invalid(&config, "manager.setpoint");
        let mut config = base();
        config.manager.qos_attribute = QosAttribute::Cost;
        config.manager.setpoint = 0.0;
        expect_invalid(&config, "manager.setpoint");
        config.manager.setpoint = 4.0;
        config.validate().unwrap();
    }

    #[test]
    fn initial_frequency_must_respect_actuation_bounds() {
        let mut config = base();
        config.sensors[0].frequency = 30.0;
        expect_invalid(&config, "sensors[0].frequency");
    }

    #[test]
    fn gain_bounded_by_offset() {
        let mut config = base();
        config.manager.gain = 0.5;
        config.manager.offset = 0.2;
        expect_invalid(&config, "manager.gain");
    }

    #[test]
    fn minimal_one_sign_config_loads_with_defaults() {
        let text = r#"
            [patient]
            [[patient.vital_signs]]
            name = "pulse"
            change_frequency = 0.5
            state_ranges = [[0.0, 10.0], [10.0, 20.0], [20.0, 30.0], [30.0, 40.0], [40.0, 50.0]]

            [[sensors]]
            sensor_id = "pulse_sensor"
            vital_sign = "pulse"
            initial_frequency = 1.0
            risk_band_probabilities = [0.7, 0.2, 0.1]
            risk_value_ranges = [[0.0, 10.0], [10.0, 20.0], [20.0, 30.0], [30.0, 40.0], [40.0, 50.0]]

            [hub]
            frequency = 10.0
            capacity = 16

            [manager]
            setpoint = 0.9
            qos_attribute = "reliability"
        "#;
        let config = RunConfig::from_toml_str(text, "minimal").unwrap();
        assert_eq!(config.simulation.duration, 300.0);
        assert_eq!(config.simulation.tick_ms, 100);
        assert_eq!(config.sensors[0].id, "pulse_sensor");
        assert_eq!(config.sensors[0].frequency, 1.0);
        assert_eq!(config.sensors[0].accuracy, 1.0);
        assert_eq!(config.sensors[0].recharge_rate(), 1.0);
        assert_eq!(config.hub.queue_capacity, 16);
        assert_eq!(config.manager.stability_margin, 0.02);
        assert_eq!(config.enactor.kp, 200.0);
        // The omitted matrix is synthesized from the sensor's bands.
        assert!(config.patient.vital_signs[0].transition_matrix.is_none());
    }

    #[test]
    fn syntax_errors_name_the_origin() {
        let err = RunConfig::from_toml_str("not toml [", "broken.toml").unwrap_err();
        assert!(err.to_string().contains("broken.toml"));
    }
}
