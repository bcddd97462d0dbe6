//! Sensor nodes: collect a vital sign, classify its risk, transfer the
//! reading to the central hub.
//!
//! A collection fails when the injected noise factor exceeds the sensor's
//! failure margin or an independent accuracy draw misses. Every execution
//! with sufficient battery emits exactly one `Status` (success or fail) plus
//! one `EnergyStatus`; a successful one additionally transfers `SensorData`.
//! Battery depletion deactivates the sensor until it recharges to full
//! capacity.

use crate::config::SensorSection;
use crate::message::{EventKind, Message, RiskLabel, StatusKind};
use crate::runtime::{Ctx, Node, SetFrequencyError};
use crate::topics;
use std::cell::RefCell;
use std::rc::Rc;

/// Risk percent sub-interval per band: low [0,20], moderate (20,65], high (65,100].
const LOW_BAND: (f64, f64) = (0.0, 20.0);
const MODERATE_BAND: (f64, f64) = (20.0, 65.0);
const HIGH_BAND: (f64, f64) = (65.0, 100.0);

/// Nudge applied at exclusive band boundaries so the percent stays consistent
/// with its label (a reading at the edge of a high band must classify high).
const BAND_EPSILON: f64 = 1e-7;

/// Map a raw value onto `(risk_percent, risk_label)` using the sensor's five
/// ordered value ranges: high, moderate, low, moderate, high. Within a band
/// the percent is interpolated linearly across the band's sub-interval,
/// oriented away from the healthy center; values outside every range clamp
/// to risk 100.
pub fn risk_of(ranges: &[[f64; 2]], value: f64) -> (f64, RiskLabel) {
    debug_assert_eq!(ranges.len(), 5);
    for (i, r) in ranges.iter().enumerate() {
        let (lo, hi) = (r[0], r[1]);
        let inside = if i == 4 {
            value >= lo && value <= hi
        } else {
            value >= lo && value < hi
        };
        if !inside {
            continue;
        }
        // Bands below the healthy center worsen as the value falls.
        let t = if i < 2 {
            (hi - value) / (hi - lo)
        } else {
            (value - lo) / (hi - lo)
        };
        let (band, label) = match i {
            2 => (LOW_BAND, RiskLabel::Low),
            1 | 3 => (MODERATE_BAND, RiskLabel::Moderate),
            _ => (HIGH_BAND, RiskLabel::High),
        };
        let mut percent = band.0 + (band.1 - band.0) * t;
        if label != RiskLabel::Low && percent <= band.0 {
            percent = band.0 + BAND_EPSILON;
        }
        return (percent.min(100.0), label);
    }
    (100.0, RiskLabel::High)
}

/// Battery of a managed component.
#[derive(Debug, Clone)]
pub struct Battery {
    pub capacity: f64,
    pub level: f64,
    /// Units per virtual second while recharging.
    pub recharge_rate: f64,
}

impl Battery {
    pub fn new(capacity: f64, recharge_rate: f64) -> Self {
        Self {
            capacity,
            level: capacity,
            recharge_rate,
        }
    }
}

/// Shared view of a sensor's mutable state, for summaries and tests.
#[derive(Debug, Default, Clone)]
pub struct SensorTelemetry {
    pub battery_level: f64,
    pub active: bool,
    pub noise_factor: f64,
    pub collected: u64,
    pub failed: u64,
    pub ignored_commands: u64,
}

pub struct SensorNode {
    cfg: SensorSection,
    battery: Battery,
    active: bool,
    /// Deactivated by depletion (recharging), as opposed to configured off.
    depleted: bool,
    noise_factor: f64,
    last_recharge_check: f64,
    telemetry: Rc<RefCell<SensorTelemetry>>,
}

impl SensorNode {
    pub fn new(cfg: SensorSection) -> (Self, Rc<RefCell<SensorTelemetry>>) {
        let telemetry = Rc::new(RefCell::new(SensorTelemetry {
            battery_level: cfg.battery_capacity,
            active: cfg.start_active,
            ..SensorTelemetry::default()
        }));
        let node = Self {
            battery: Battery::new(cfg.battery_capacity, cfg.recharge_rate()),
            active: cfg.start_active,
            depleted: false,
            noise_factor: 0.0,
            last_recharge_check: 0.0,
            telemetry: Rc::clone(&telemetry),
            cfg,
        };
        (node, telemetry)
    }

    fn sync_telemetry(&self) {
        let mut t = self.telemetry.borrow_mut();
        t.battery_level = self.battery.level;
        t.active = self.active;
        t.noise_factor = self.noise_factor;
    }

    fn publish_status(&self, ctx: &mut Ctx, status: StatusKind) {
        let msg = Message::Status {
            component_id: self.cfg.id.clone(),
            status,
            timestamp: ctx.now(),
        };
        ctx.publish(topics::STATUS, msg).expect("status topic registered");
    }

    fn publish_event(&self, ctx: &mut Ctx, event: EventKind) {
        let msg = Message::Event {
            component_id: self.cfg.id.clone(),
            event,
            timestamp: ctx.now(),
        };
        ctx.publish(topics::EVENT, msg).expect("event topic registered");
    }

    fn apply_adaptation(&mut self, frequency: f64, ctx: &mut Ctx) {
        if !self.active {
            self.telemetry.borrow_mut().ignored_commands += 1;
            return;
        }
        match ctx.set_frequency(&self.cfg.id, frequency) {
            Ok(_) | Err(SetFrequencyError::UnknownComponent(_)) => {}
            Err(SetFrequencyError::Saturated(e)) => {
                // The enactor normally pre-clamps; report back if it did not.
                let msg = Message::Exception {
                    component_id: self.cfg.id.clone(),
                    kind: e.kind,
                    attempted: e.requested,
                    timestamp: ctx.now(),
                };
                ctx.publish(topics::EXCEPTION, msg).expect("exception topic registered");
            }
        }
    }

    /// Recharge while deactivated; reactivate at full capacity.
    fn recharge(&mut self, ctx: &mut Ctx) {
        let now = ctx.now();
        let elapsed = now - self.last_recharge_check;
        self.last_recharge_check = now;
        self.battery.level = (self.battery.level + elapsed * self.battery.recharge_rate)
            .min(self.battery.capacity);
        if self.battery.level >= self.battery.capacity {
            self.active = true;
            self.depleted = false;
            self.publish_event(ctx, EventKind::Activate);
        }
    }

    fn collect_and_transfer(&mut self, ctx: &mut Ctx) {
        let raw = ctx
            .patient_value(self.cfg.vital_sign())
            .expect("vital sign validated at load");
        let noise = self.noise_factor;
        let value = raw * (1.0 + noise);
        // The accuracy draw happens on every execution so the stream does not
        // shift when noise comes and goes.
        let accuracy_miss = ctx.rng().next_f64() > self.cfg.accuracy;
        let noise_failure = noise.abs() > self.cfg.failure_margin;

        if noise_failure || accuracy_miss {
            self.telemetry.borrow_mut().failed += 1;
            self.publish_status(ctx, StatusKind::Fail);
        } else {
            let (risk_percent, risk_label) = risk_of(&self.cfg.risk_value_ranges, value);
            let data = Message::SensorData {
                sensor_id: self.cfg.id.clone(),
                value,
                risk_percent,
                risk_label,
                timestamp: ctx.now(),
            };
            ctx.publish(topics::SENSOR_DATA, data).expect("sensor_data topic registered");
            self.telemetry.borrow_mut().collected += 1;
            self.publish_status(ctx, StatusKind::Success);
        }

        self.battery.level -= self.cfg.energy_per_execution;
        let energy = Message::EnergyStatus {
            component_id: self.cfg.id.clone(),
            cost: self.cfg.energy_per_execution,
            timestamp: ctx.now(),
        };
        ctx.publish(topics::ENERGY_STATUS, energy).expect("energy topic registered");
        if self.cfg.instant_recharge {
            self.battery.level = self.battery.capacity;
        }
    }
}

impl Node for SensorNode {
    fn on_start(&mut self, ctx: &mut Ctx) {
        if self.active {
            self.publish_status(ctx, StatusKind::Init);
            self.publish_event(ctx, EventKind::Activate);
        }
        self.sync_telemetry();
    }

    fn on_message(&mut self, msg: &Message, ctx: &mut Ctx) {
        match msg {
            Message::UncertaintyNoise {
                sensor_id,
                noise_factor,
                ..
            } if *sensor_id == self.cfg.id => {
                self.noise_factor = *noise_factor;
            }
            Message::AdaptationCommand {
                component_id,
                frequency,
                ..
            } if *component_id == self.cfg.id => {
                self.apply_adaptation(*frequency, ctx);
            }
            _ => {}
        }
        self.sync_telemetry();
    }

    fn on_activate(&mut self, _activity: usize, ctx: &mut Ctx) {
        if !self.active {
            if self.depleted {
                self.recharge(ctx);
            }
            self.sync_telemetry();
            return;
        }
        if self.battery.level < self.cfg.energy_per_execution {
            self.active = false;
            self.depleted = true;
            self.last_recharge_check = ctx.now();
            self.publish_event(ctx, EventKind::Deactivate);
            self.sync_telemetry();
            return;
        }
        self.collect_and_transfer(ctx);
        self.sync_telemetry();
    }
}
