//! Scenario presets: configuration overlays for the three canonical
//! adaptation scenarios.
//!
//! - S1: message flood on the central hub plus step noise on two sensors;
//!   reliability engine. Exercises hub service-rate and sensor sampling-rate
//!   adaptation under system and goal uncertainty.
//! - S2: inflated initial sampling rates; cost engine. The loop must bring
//!   energy consumption back to the cost setpoint.
//! - S3: the last two configured sensors start deactivated (unwanted for
//!   this patient profile); fewer components, quieter adaptation.

use crate::config::{RunConfig, WaveConfig, WaveKind};
use crate::message::QosAttribute;
use std::fmt;
use std::str::FromStr;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ScenarioPreset {
    S1,
    S2,
    S3,
}

impl fmt::Display for ScenarioPreset {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ScenarioPreset::S1 => f.write_str("S1"),
            ScenarioPreset::S2 => f.write_str("S2"),
            ScenarioPreset::S3 => f.write_str("S3"),
        }
    }
}

impl FromStr for ScenarioPreset {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_uppercase().as_str() {
            "S1" => Ok(ScenarioPreset::S1),
            "S2" => Ok(ScenarioPreset::S2),
            "S3" => Ok(ScenarioPreset::S3),
            other => Err(format!("unknown scenario '{other}' (expected S1, S2 or S3)")),
        }
    }
}

/// Noise magnitude and window used by the S1 preset.
pub const S1_NOISE_AMPLITUDE: f64 = 0.2;
pub const S1_NOISE_BEGIN: f64 = 60.0;
pub const S1_NOISE_DURATION: f64 = 120.0;

/// Cost setpoint and controller gain used by the S2 preset.
pub const S2_COST_SETPOINT: f64 = 4.0;
pub const S2_COST_KP: f64 = 5.0;
pub const S2_INFLATED_FREQUENCY: f64 = 12.0;
/// Finer planner step for the cost engine: with seven components a delta step
/// moves the additive global formula by seven times the step.
pub const S2_PLANNER_GAIN: f64 = 0.02;

/// Apply a preset overlay to a base configuration. The overlay is a pure
/// function: the same base and preset always produce the same config.
pub fn apply_scenario(mut config: RunConfig, preset: ScenarioPreset) -> RunConfig {
    match preset {
        ScenarioPreset::S1 => {
            config.manager.qos_attribute = QosAttribute::Reliability;
            config.flood.enabled = true;
            // Step noise on the first two configured sensors.
            let targets: Vec<String> = config.sensors.iter().take(2).map(|s| s.id.clone()).collect();
            config.injector.enabled = true;
            config.injector.sensors = targets.clone();
            config.injector.waves = targets
                .into_iter()
                .map(|sensor| WaveConfig {
                    sensor,
                    kind: WaveKind::Step,
                    offset: 0.0,
                    amplitude: S1_NOISE_AMPLITUDE,
                    frequency: 1.0,
                    duration: S1_NOISE_DURATION,
                    begin: S1_NOISE_BEGIN,
                })
                .collect();
        }
        ScenarioPreset::S2 => {
            config.manager.qos_attribute = QosAttribute::Cost;
            config.manager.setpoint = S2_COST_SETPOINT;
            config.manager.gain = S2_PLANNER_GAIN;
            config.enactor.kp = S2_COST_KP;
            config.flood.enabled = false;
            config.injector.enabled = false;
            for sensor in &mut config.sensors {
                sensor.frequency = S2_INFLATED_FREQUENCY.min(sensor.f_max);
            }
        }
        ScenarioPreset::S3 => {
            config.flood.enabled = false;
            config.injector.enabled = false;
            let n = config.sensors.len();
            for sensor in config.sensors.iter_mut().skip(n.saturating_sub(2)) {
                sensor.start_active = false;
            }
        }
    }
    config
}
