//! Deterministic body-sensor-network simulation with a control-theoretic
//! self-adaptation loop.
//!
//! The managed system is a simulated patient (one five-state Markov chain per
//! vital sign), six sampling sensors and a central hub that fuses per-sensor
//! risks into a patient status. A managing system closes a feedback loop over
//! it: it estimates reliability or energy cost from the run logs, plans
//! per-component setpoints against a parametric formula, and actuates
//! component frequencies through a proportional controller. An uncertainty
//! injector perturbs sensor readings with step/ramp/random noise waveforms.
//!
//! Runs are driven by a virtual tick clock and are fully deterministic for a
//! given configuration and seed. Five append-only CSV logs per run feed the
//! offline analyzer, which reconstructs the QoS series and reports
//! steady-state error, overshoot and settling time.

pub mod analyzer;
pub mod boundary;
pub mod config;
pub mod formula;
pub mod hub;
pub mod injector;
pub mod manager;
pub mod message;
pub mod patient;
pub mod repository;
pub mod rng;
pub mod runtime;
pub mod scenario;
pub mod sensor;
pub mod sim;
pub mod topics;

pub use config::{ConfigError, RunConfig};
pub use message::{LogCategory, Message, QosAttribute};
pub use scenario::{apply_scenario, ScenarioPreset};
pub use sim::{run, RunOptions, RunSummary};

/// The configuration shipped with the simulator.
pub fn default_config_toml() -> &'static str {
    include_str!("../configs/default.toml")
}

/// Parsed and validated copy of the shipped configuration.
pub fn default_config() -> RunConfig {
    RunConfig::from_toml_str(default_config_toml(), "builtin default")
        .expect("shipped default config is valid")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn shipped_default_config_loads_and_round_trips() {
        let config = default_config();
        assert_eq!(config.sensors.len(), 6);
        assert_eq!(config.patient.vital_signs.len(), 6);
        let text = config.to_toml_string();
        let reparsed = RunConfig::from_toml_str(&text, "round-trip").unwrap();
        assert_eq!(reparsed, config);
    }
}
