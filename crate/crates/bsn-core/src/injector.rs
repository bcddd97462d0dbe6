//! Uncertainty injection: per-sensor noise waveforms, plus the synthetic
//! traffic source used to flood the hub.
//!
//! The injector publishes the waveform value at its injection cadence for
//! every configured target — including the zero baseline outside the active
//! window, so a sensor's last received noise decays back to zero once the
//! disturbance ends. Sensors not listed in the injector's set never receive
//! noise at all.

use crate::config::{FloodSection, InjectorSection, WaveConfig, WaveKind};
use crate::message::{Message, RiskLabel};
use crate::rng::SimRng;
use crate::runtime::{Ctx, Node};
use crate::topics;

/// Waveform value at virtual time `t`. Outside `[begin, begin + duration]`
/// the baseline is 0; inside, the offset applies:
/// step -> offset + amplitude, ramp -> offset + amplitude*(t-begin)/duration
/// (a zero-duration ramp degenerates to a step), random -> offset + U(0, amplitude).
pub fn noise_at(t: f64, spec: &WaveConfig, rng: &mut SimRng) -> f64 {
    if t < spec.begin || t > spec.begin + spec.duration {
        return 0.0;
    }
    match spec.kind {
        WaveKind::Step => spec.offset + spec.amplitude,
        WaveKind::Ramp => {
            if spec.duration == 0.0 {
                spec.offset + spec.amplitude
            } else {
                spec.offset + spec.amplitude * (t - spec.begin) / spec.duration
            }
        }
        WaveKind::Random => spec.offset + rng.uniform(0.0, spec.amplitude),
    }
}

struct Wave {
    spec: WaveConfig,
    acc: f64,
}

pub struct InjectorNode {
    waves: Vec<Wave>,
    /// Seconds of waveform time that elapse per injector activation.
    seconds_per_activation: f64,
}

impl InjectorNode {
    pub fn new(cfg: &InjectorSection) -> Self {
        let waves = cfg
            .waves
            .iter()
            .filter(|w| cfg.sensors.contains(&w.sensor))
            .map(|w| Wave {
                spec: w.clone(),
                acc: 0.0,
            })
            .collect();
        Self {
            waves,
            seconds_per_activation: 1.0 / cfg.frequency,
        }
    }
}

impl Node for InjectorNode {
    fn on_activate(&mut self, _activity: usize, ctx: &mut Ctx) {
        let now = ctx.now();
        for wave in &mut self.waves {
            wave.acc += wave.spec.frequency * self.seconds_per_activation;
            let fires = (wave.acc + 1e-9).floor();
            wave.acc -= fires;
            for _ in 0..fires as u32 {
                let noise_factor = noise_at(now, &wave.spec, ctx.rng());
                let msg = Message::UncertaintyNoise {
                    sensor_id: wave.spec.sensor.clone(),
                    noise_factor,
                    timestamp: now,
                };
                ctx.publish(topics::UNCERTAINTY_NOISE, msg)
                    .expect("uncertainty topic registered");
            }
        }
    }
}

/// Synthetic message source flooding the hub with foreign sensor data,
/// simulating additional patients on the communication channel.
pub struct TrafficFloodNode {
    burst: usize,
}

impl TrafficFloodNode {
    pub fn new(cfg: &FloodSection) -> Self {
        Self { burst: cfg.burst }
    }
}

impl Node for TrafficFloodNode {
    fn on_activate(&mut self, _activity: usize, ctx: &mut Ctx) {
        let now = ctx.now();
        for i in 0..self.burst {
            let msg = Message::SensorData {
                sensor_id: format!("foreign_patient_{i}"),
                value: 0.0,
                risk_percent: 0.0,
                risk_label: RiskLabel::Low,
                timestamp: now,
            };
            ctx.publish(topics::SENSOR_DATA, msg)
                .expect("sensor_data topic registered");
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn step_spec() -> WaveConfig {
        WaveConfig {
            sensor: "oximeter".into(),
            kind: WaveKind::Step,
            offset: 0.0,
            amplitude: 0.5,
            frequency: 1.0,
            duration: 100.0,
            begin: 10.0,
        }
    }

    #[test]
    fn step_is_flat_zero_then_offset_plus_amplitude() {
        let mut rng = SimRng::new(1);
        assert_eq!(noise_at(5.0, &step_spec(), &mut rng), 0.0);
        assert_eq!(noise_at(15.0, &step_spec(), &mut rng), 0.5);
        assert_eq!(noise_at(110.0, &step_spec(), &mut rng), 0.5);
        assert_eq!(noise_at(110.1, &step_spec(), &mut rng), 0.0);
    }

    #[test]
    fn step_has_exactly_two_discontinuities() {
        let spec = step_spec();
        let mut rng = SimRng::new(2);
        let mut edges = 0;
        let mut prev = noise_at(0.0, &spec, &mut rng);
        let mut t = 0.01;
        while t < 150.0 {
            let v = noise_at(t, &spec, &mut rng);
            if (v - prev).abs() > 1e-12 {
                edges += 1;
            }
            prev = v;
            t += 0.01;
        }
        assert_eq!(edges, 2);
    }

    #[test]
    fn ramp_is_linear_in_window() {
        let spec = WaveConfig {
            kind: WaveKind::Ramp,
            begin: 0.0,
            duration: 10.0,
            amplitude: 1.0,
            offset: 0.0,
            ..step_spec()
        };
        let mut rng = SimRng::new(3);
        assert_eq!(noise_at(5.0, &spec, &mut rng), 0.5);
        assert_eq!(noise_at(0.0, &spec, &mut rng), 0.0);
        assert_eq!(noise_at(10.0, &spec, &mut rng), 1.0);
    }

    #[test]
    fn zero_duration_ramp_degenerates_to_step() {
        let spec = WaveConfig {
            kind: WaveKind::Ramp,
            begin: 5.0,
            duration: 0.0,
            amplitude: 0.7,
            offset: 0.1,
            ..step_spec()
        };
        let mut rng = SimRng::new(4);
        assert!((noise_at(5.0, &spec, &mut rng) - 0.8).abs() < 1e-12);
        assert_eq!(noise_at(4.99, &spec, &mut rng), 0.0);
    }

    #[test]
    fn random_mean_is_half_amplitude_plus_offset() {
        let spec = WaveConfig {
            kind: WaveKind::Random,
            begin: 0.0,
            duration: 1e9,
            amplitude: 0.2,
            offset: 0.0,
            ..step_spec()
        };
        let mut rng = SimRng::new(5);
        let n = 10_000;
        let mean: f64 = (0..n).map(|_| noise_at(1.0, &spec, &mut rng)).sum::<f64>() / n as f64;
        assert!((mean - 0.1).abs() < 0.005, "mean {mean}");
    }

    #[test]
    fn offset_applies_only_inside_window() {
        let spec = WaveConfig {
            kind: WaveKind::Step,
            offset: 0.3,
            amplitude: 0.2,
            begin: 10.0,
            duration: 5.0,
            ..step_spec()
        };
        let mut rng = SimRng::new(6);
        assert_eq!(noise_at(9.9, &spec, &mut rng), 0.0);
        assert_eq!(noise_at(12.0, &spec, &mut rng), 0.5);
        assert_eq!(noise_at(15.1, &spec, &mut rng), 0.0);
    }
}
