//! Managing system: monitor, strategy manager and strategy enactor.
//!
//! The strategy manager runs two scheduled activities. Monitoring estimates
//! the global QoS value from repository windows and detects the need for
//! adaptation against the stability margin; actuation re-queries the
//! measurements, plans per-component local setpoints and publishes them as a
//! `Strategy` message toward the enactor. Saturation exceptions pin the
//! affected component's setpoint to its measured value until the measurement
//! moves again.

pub mod enactor;
pub mod estimate;
pub mod planner;

pub use enactor::{control, Controller, ControllerParams, EnactorNode, ProportionalController};
pub use estimate::{estimate_from_repository, estimate_local, needs_adaptation, LocalEstimate};
pub use planner::{delta_grid, plan_strategy, PlanError, PlanInput, PlanOutcome};

use crate::config::ManagerSection;
use crate::formula::ParametricFormula;
use crate::message::{EventKind, Message, QosAttribute};
use crate::runtime::{Ctx, Node};
use crate::topics;
use std::cell::RefCell;
use std::collections::{BTreeMap, BTreeSet};
use std::rc::Rc;

/// Strategy manager activity indices.
pub const MONITOR_ACTIVITY: usize = 0;
pub const ACTUATION_ACTIVITY: usize = 1;

/// Latest monitored state, shared with run summaries.
#[derive(Debug, Clone, PartialEq)]
pub struct MonitorSnapshot {
    pub timestamp: f64,
    pub global: f64,
    pub locals: BTreeMap<String, f64>,
    pub low_confidence: bool,
    pub adaptation_needed: bool,
}

/// How far a pinned measurement must move before the component is released
/// back into planning.
const UNPIN_TOLERANCE: f64 = 1e-9;

pub struct StrategyManagerNode {
    cfg: ManagerSection,
    formula: ParametricFormula,
    /// Active managed components (sensors and hub).
    active: BTreeSet<String>,
    /// All managed component ids ever configured, for event validation.
    known: BTreeSet<String>,
    /// Saturated components held at the measured value recorded at pin time.
    pinned: BTreeMap<String, f64>,
    adaptation_needed: bool,
    snapshot: Rc<RefCell<Option<MonitorSnapshot>>>,
    ignored_events: u64,
}

impl StrategyManagerNode {
    pub fn new(
        cfg: ManagerSection,
        formula: ParametricFormula,
        initially_active: BTreeSet<String>,
        known: BTreeSet<String>,
    ) -> (Self, Rc<RefCell<Option<MonitorSnapshot>>>) {
        let snapshot = Rc::new(RefCell::new(None));
        (
            Self {
                cfg,
                formula,
                active: initially_active,
                known,
                pinned: BTreeMap::new(),
                adaptation_needed: false,
                snapshot: Rc::clone(&snapshot),
                ignored_events: 0,
            },
            snapshot,
        )
    }

    pub fn attribute(&self) -> QosAttribute {
        self.cfg.qos_attribute
    }

    fn measure_all(&self, ctx: &Ctx) -> (BTreeMap<String, f64>, bool) {
        let mut locals = BTreeMap::new();
        let mut any_low_confidence = false;
        for component_id in &self.active {
            let frequency = ctx.frequency_of(component_id).unwrap_or(0.0);
            let estimate = estimate_from_repository(
                self.cfg.qos_attribute,
                &ctx.repository,
                component_id,
                self.cfg.info_quant,
                frequency,
            );
            any_low_confidence |= estimate.low_confidence;
            locals.insert(component_id.clone(), estimate.value);
        }
        (locals, any_low_confidence)
    }

    fn monitor(&mut self, ctx: &mut Ctx) {
        let (locals, low_confidence) = self.measure_all(ctx);
        let active: BTreeSet<String> = locals.keys().cloned().collect();
        let global = match self.formula.eval(&locals, &active) {
            Ok(g) => g,
            Err(_) => {
                self.adaptation_needed = false;
                return;
            }
        };
        self.adaptation_needed =
            needs_adaptation(global, self.cfg.setpoint, self.cfg.stability_margin);
        *self.snapshot.borrow_mut() = Some(MonitorSnapshot {
            timestamp: ctx.now(),
            global,
            locals,
            low_confidence,
            adaptation_needed: self.adaptation_needed,
        });
    }

    /// Plan and publish a strategy. Measurements are re-queried at actuation
    /// time rather than reusing the monitor snapshot.
    fn actuate(&mut self, ctx: &mut Ctx) {
        if !self.adaptation_needed {
            return;
        }
        let (measured, _) = self.measure_all(ctx);
        // Release pins whose measurement has moved since saturation.
        self.pinned
            .retain(|id, pinned_at| match measured.get(id) {
                Some(now) => (now - *pinned_at).abs() <= UNPIN_TOLERANCE,
                None => false,
            });
        let pinned: BTreeSet<String> = self.pinned.keys().cloned().collect();
        let input = PlanInput {
            formula: self.formula,
            global_setpoint: self.cfg.setpoint,
            stability_margin: self.cfg.stability_margin,
            offset: self.cfg.offset,
            gain: self.cfg.gain,
            measured: &measured,
            pinned: &pinned,
        };
        let Ok(plan) = plan_strategy(&input) else {
            return;
        };
        let msg = Message::Strategy {
            attribute: self.cfg.qos_attribute,
            setpoints: plan.local_setpoints,
            timestamp: ctx.now(),
        };
        ctx.publish(topics::STRATEGY, msg).expect("strategy topic registered");
    }

    fn handle_exception(&mut self, component_id: &str, ctx: &Ctx) {
        if !self.active.contains(component_id) {
            return;
        }
        let frequency = ctx.frequency_of(component_id).unwrap_or(0.0);
        let measured = estimate_from_repository(
            self.cfg.qos_attribute,
            &ctx.repository,
            component_id,
            self.cfg.info_quant,
            frequency,
        )
        .value;
        self.pinned.insert(component_id.to_string(), measured);
    }

    fn receive_event(&mut self, component_id: &str, event: EventKind) {
        if !self.known.contains(component_id) {
            self.ignored_events += 1;
            return;
        }
        match event {
            EventKind::Activate => {
                self.active.insert(component_id.to_string());
            }
            EventKind::Deactivate => {
                self.active.remove(component_id);
            }
        }
        self.pinned.remove(component_id);
    }
}

impl Node for StrategyManagerNode {
    fn on_message(&mut self, msg: &Message, ctx: &mut Ctx) {
        match msg {
            Message::Exception { component_id, .. } => self.handle_exception(component_id, ctx),
            Message::Event {
                component_id,
                event,
                ..
            } => self.receive_event(component_id, *event),
            _ => {}
        }
    }

    fn on_activate(&mut self, activity: usize, ctx: &mut Ctx) {
        match activity {
            MONITOR_ACTIVITY => self.monitor(ctx),
            ACTUATION_ACTIVITY => self.actuate(ctx),
            _ => {}
        }
    }
}
