//! Central hub: bounded-queue consumer of sensor data that fuses the latest
//! per-sensor risks into an overall patient status.
//!
//! Arrivals beyond the queue capacity are dropped and charged to the hub as
//! `Status(fail)` — the sensor completed its transfer obligation. Each
//! activation serves at most one queued reading, so the hub's frequency is
//! its service rate and the actuation knob of scenario S1.

use crate::config::{FusionStrategy, HubSection};
use crate::message::{EventKind, Message, RiskLabel, StatusKind};
use crate::runtime::{Ctx, Node, SetFrequencyError};
use crate::sensor::Battery;
use crate::topics;
use std::cell::RefCell;
use std::collections::{BTreeMap, BTreeSet, VecDeque};
use std::rc::Rc;

/// Fused classification of the patient's overall situation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PatientStatus {
    pub fused_risk: f64,
    pub label: RiskLabel,
    pub timestamp: f64,
}

/// Queue and service counters; conservation: arrived = accepted + dropped,
/// processed <= accepted.
#[derive(Debug, Default, Clone, Copy, PartialEq, Eq)]
pub struct HubStats {
    pub arrived: u64,
    pub accepted: u64,
    pub dropped: u64,
    pub processed: u64,
}

/// Combine the latest per-sensor risks; `None` when no readings exist yet.
pub fn fuse(latest_risk: &BTreeMap<String, f64>, strategy: FusionStrategy) -> Option<(f64, RiskLabel)> {
    if latest_risk.is_empty() {
        return None;
    }
    let fused = match strategy {
        FusionStrategy::Mean => {
            latest_risk.values().sum::<f64>() / latest_risk.len() as f64
        }
        FusionStrategy::Max => latest_risk
            .values()
            .fold(f64::NEG_INFINITY, |acc, v| acc.max(*v)),
    };
    Some((fused, RiskLabel::from_percent(fused)))
}

struct QueuedReading {
    sensor_id: String,
    risk_percent: f64,
}

pub struct HubNode {
    cfg: HubSection,
    queue: VecDeque<QueuedReading>,
    latest_risk: BTreeMap<String, f64>,
    /// Sensors configured for this patient; foreign traffic is processed but
    /// never fused into the patient status.
    known_sensors: BTreeSet<String>,
    battery: Battery,
    active: bool,
    depleted: bool,
    last_recharge_check: f64,
    stats: Rc<RefCell<HubStats>>,
    last_status: Rc<RefCell<Option<PatientStatus>>>,
}

pub struct HubHandles {
    pub stats: Rc<RefCell<HubStats>>,
    pub last_status: Rc<RefCell<Option<PatientStatus>>>,
}

impl HubNode {
    pub fn new(cfg: HubSection, known_sensors: BTreeSet<String>) -> (Self, HubHandles) {
        let stats = Rc::new(RefCell::new(HubStats::default()));
        let last_status = Rc::new(RefCell::new(None));
        let node = Self {
            queue: VecDeque::with_capacity(cfg.queue_capacity),
            latest_risk: BTreeMap::new(),
            known_sensors,
            battery: Battery::new(cfg.battery_capacity, cfg.recharge_rate()),
            active: true,
            depleted: false,
            last_recharge_check: 0.0,
            stats: Rc::clone(&stats),
            last_status: Rc::clone(&last_status),
            cfg,
        };
        (node, HubHandles { stats, last_status })
    }

    fn publish_status(&self, ctx: &mut Ctx, status: StatusKind) {
        let msg = Message::Status {
            component_id: self.cfg.id.clone(),
            status,
            timestamp: ctx.now(),
        };
        ctx.publish(topics::STATUS, msg).expect("status topic registered");
    }

    fn enqueue(&mut self, sensor_id: &str, risk_percent: f64, ctx: &mut Ctx) {
        self.stats.borrow_mut().arrived += 1;
        if self.queue.len() >= self.cfg.queue_capacity {
            self.stats.borrow_mut().dropped += 1;
            self.publish_status(ctx, StatusKind::Fail);
        } else {
            self.queue.push_back(QueuedReading {
                sensor_id: sensor_id.to_string(),
                risk_percent,
            });
            self.stats.borrow_mut().accepted += 1;
        }
    }

    /// Serve one queued reading; idle (no records) when the queue is empty.
    fn process_one(&mut self, ctx: &mut Ctx) {
        let Some(reading) = self.queue.pop_front() else {
            return;
        };
        if self.known_sensors.contains(&reading.sensor_id) {
            self.latest_risk
                .insert(reading.sensor_id.clone(), reading.risk_percent);
        }
        if let Some((fused_risk, label)) = fuse(&self.latest_risk, self.cfg.fusion) {
            *self.last_status.borrow_mut() = Some(PatientStatus {
                fused_risk,
                label,
                timestamp: ctx.now(),
            });
        }
        self.stats.borrow_mut().processed += 1;
        self.publish_status(ctx, StatusKind::Success);

        self.battery.level -= self.cfg.energy_per_execution;
        let energy = Message::EnergyStatus {
            component_id: self.cfg.id.clone(),
            cost: self.cfg.energy_per_execution,
            timestamp: ctx.now(),
        };
        ctx.publish(topics::ENERGY_STATUS, energy).expect("energy topic registered");
        if self.cfg.instant_recharge {
            self.battery.level = self.cfg.battery_capacity;
        }
    }

    fn publish_event(&self, ctx: &mut Ctx, event: EventKind) {
        let msg = Message::Event {
            component_id: self.cfg.id.clone(),
            event,
            timestamp: ctx.now(),
        };
        ctx.publish(topics::EVENT, msg).expect("event topic registered");
    }
}

impl Node for HubNode {
    fn on_start(&mut self, ctx: &mut Ctx) {
        self.publish_status(ctx, StatusKind::Init);
        self.publish_event(ctx, EventKind::Activate);
    }

    fn on_message(&mut self, msg: &Message, ctx: &mut Ctx) {
        match msg {
            Message::SensorData {
                sensor_id,
                risk_percent,
                ..
            } => {
                let (id, risk) = (sensor_id.clone(), *risk_percent);
                self.enqueue(&id, risk, ctx);
            }
            Message::Event {
                component_id,
                event: EventKind::Deactivate,
                ..
            } => {
                self.latest_risk.remove(component_id);
            }
            Message::AdaptationCommand {
                component_id,
                frequency,
                ..
            } if *component_id == self.cfg.id && self.active => {
                match ctx.set_frequency(&self.cfg.id, *frequency) {
                    Ok(_) | Err(SetFrequencyError::UnknownComponent(_)) => {}
                    Err(SetFrequencyError::Saturated(e)) => {
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
            _ => {}
        }
    }

    fn on_activate(&mut self, _activity: usize, ctx: &mut Ctx) {
        if !self.active {
            if self.depleted {
                let now = ctx.now();
                let elapsed = now - self.last_recharge_check;
                self.last_recharge_check = now;
                self.battery.level = (self.battery.level
                    + elapsed * self.battery.recharge_rate)
                    .min(self.battery.capacity);
                if self.battery.level >= self.battery.capacity {
                    self.active = true;
                    self.depleted = false;
                    self.publish_event(ctx, EventKind::Activate);
                }
            }
            return;
        }
        if self.battery.level < self.cfg.energy_per_execution {
            self.active = false;
            self.depleted = true;
            self.last_recharge_check = ctx.now();
            self.publish_event(ctx, EventKind::Deactivate);
            return;
        }
        self.process_one(ctx);
    }
}
