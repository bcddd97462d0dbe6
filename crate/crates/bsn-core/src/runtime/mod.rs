//! Deterministic discrete-time runtime.
//!
//! One engine owns every node. Each tick runs three phases in a fixed order —
//! environment (patient, injectors, traffic sources), managed system (sensors,
//! hub), managing system (probe, manager, enactor) — then flushes the
//! repository. Within a phase, nodes run in registration order: the inbox is
//! drained first, then the node's scheduled activities fire according to
//! their fractional accumulators.
//!
//! Everything a handler may touch lives behind [`Ctx`]; publications from
//! inside a handler are appended to subscriber inboxes and dispatched when
//! the subscriber is next visited, never recursively.

pub mod bus;
pub mod clock;
pub mod schedule;

use crate::message::Message;
use crate::patient::{Patient, PatientError};
use crate::repository::{LogRecord, Payload, Repository, RepositoryError};
use crate::rng::SimRng;
use bus::{Bus, BusError, Subscription};
use clock::SimClock;
use schedule::{FreqBounds, NodeSchedule, SaturationError};
use std::cell::RefCell;
use std::collections::BTreeMap;
use std::rc::Rc;
use thiserror::Error;

/// Index of a node's primary scheduled activity (the actuation knob).
pub const MAIN_ACTIVITY: usize = 0;

#[derive(Debug, Error)]
pub enum RuntimeError {
    #[error(transparent)]
    Bus(#[from] BusError),
    #[error(transparent)]
    Repository(#[from] RepositoryError),
    #[error("unknown component '{0}'")]
    UnknownComponent(String),
    #[error("duplicate node id '{0}'")]
    DuplicateNode(String),
}

#[derive(Debug, Error)]
pub enum SetFrequencyError {
    #[error(transparent)]
    Saturated(#[from] SaturationError),
    #[error("unknown component '{0}'")]
    UnknownComponent(String),
}

/// Within-tick execution phases.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Phase {
    Environment,
    Managed,
    Managing,
}

impl Phase {
    fn index(self) -> usize {
        match self {
            Phase::Environment => 0,
            Phase::Managed => 1,
            Phase::Managing => 2,
        }
    }
}

/// Behavior attached to a registered node.
pub trait Node {
    /// Called once, before the first tick of the run.
    fn on_start(&mut self, _ctx: &mut Ctx) {}
    /// Called for each inbox message when the node is visited.
    fn on_message(&mut self, _msg: &Message, _ctx: &mut Ctx) {}
    /// Called when scheduled activity `activity` fires.
    fn on_activate(&mut self, _activity: usize, _ctx: &mut Ctx) {}
}

/// Runtime services visible to node handlers.
pub struct Ctx {
    clock: SimClock,
    bus: Bus,
    /// Per node, per activity.
    schedules: Vec<Vec<NodeSchedule>>,
    rngs: Vec<SimRng>,
    ids: Vec<String>,
    index: BTreeMap<String, usize>,
    pub repository: Repository,
    pub patient: Patient,
    root_seed: u64,
    current: usize,
    deferred_io_error: Option<RepositoryError>,
}

impl Ctx {
    pub fn now(&self) -> f64 {
        self.clock.now()
    }

    pub fn tick(&self) -> u64 {
        self.clock.tick()
    }

    pub fn tick_duration(&self) -> f64 {
        self.clock.tick_duration()
    }

    pub fn root_seed(&self) -> u64 {
        self.root_seed
    }

    /// RNG stream of the node currently being dispatched.
    pub fn rng(&mut self) -> &mut SimRng {
        &mut self.rngs[self.current]
    }

    /// Publish to a topic; returns the subscriber count at publish time.
    pub fn publish(&mut self, topic: &str, msg: Message) -> Result<usize, BusError> {
        self.bus.publish(topic, msg)
    }

    /// Append a log record stamped with the current virtual time. I/O errors
    /// are deferred and surface from `Engine::advance`.
    pub fn log(&mut self, component_id: &str, payload: Payload) {
        let record = LogRecord::new(self.now(), component_id, payload);
        if let Err(e) = self.repository.append(record) {
            if self.deferred_io_error.is_none() {
                self.deferred_io_error = Some(e);
            }
        }
    }

    pub fn patient_value(&self, sign_id: &str) -> Result<f64, PatientError> {
        self.patient.current_value(sign_id)
    }

    /// Advance every vital-sign chain that is due, using the current node's
    /// RNG stream.
    pub fn patient_step(&mut self) {
        let now = self.clock.now();
        self.patient.step_all(now, &mut self.rngs[self.current]);
    }

    fn node_index(&self, component_id: &str) -> Option<usize> {
        self.index.get(component_id).copied()
    }

    /// Stage a frequency change on a component's primary activity, applied at
    /// the next tick. Out-of-bound requests saturate: the clamped value is
    /// staged and the error carries what an enactor needs to raise an
    /// `Exception`.
    pub fn set_frequency(&mut self, component_id: &str, frequency: f64) -> Result<f64, SetFrequencyError> {
        let idx = self
            .node_index(component_id)
            .filter(|i| !self.schedules[*i].is_empty())
            .ok_or_else(|| SetFrequencyError::UnknownComponent(component_id.to_string()))?;
        Ok(self.schedules[idx][MAIN_ACTIVITY].request_frequency(frequency)?)
    }

    pub fn frequency_of(&self, component_id: &str) -> Option<f64> {
        let idx = self.node_index(component_id)?;
        self.schedules[idx].first().map(|s| s.frequency())
    }

    pub fn bounds_of(&self, component_id: &str) -> Option<FreqBounds> {
        let idx = self.node_index(component_id)?;
        self.schedules[idx].first().map(|s| s.bounds)
    }

    pub fn initial_frequency_of(&self, component_id: &str) -> Option<f64> {
        let idx = self.node_index(component_id)?;
        self.schedules[idx].first().map(|s| s.initial_frequency)
    }

    pub fn has_component(&self, component_id: &str) -> bool {
        self.index.contains_key(component_id)
    }
}

pub struct Engine {
    ctx: Ctx,
    nodes: Vec<Box<dyn Node>>,
    groups: [Vec<usize>; 3],
    started: bool,
}

impl Engine {
    pub fn new(root_seed: u64, tick_ms: u64, repository: Repository, patient: Patient) -> Self {
        Self {
            ctx: Ctx {
                clock: SimClock::new(tick_ms),
                bus: Bus::new(),
                schedules: Vec::new(),
                rngs: Vec::new(),
                ids: Vec::new(),
                index: BTreeMap::new(),
                repository,
                patient,
                root_seed,
                current: 0,
                deferred_io_error: None,
            },
            nodes: Vec::new(),
            groups: [Vec::new(), Vec::new(), Vec::new()],
            started: false,
        }
    }

    pub fn ctx(&self) -> &Ctx {
        &self.ctx
    }

    pub fn ctx_mut(&mut self) -> &mut Ctx {
        &mut self.ctx
    }

    pub fn register_topic(&mut self, name: &str) -> Result<(), RuntimeError> {
        Ok(self.ctx.bus.register_topic(name)?)
    }

    /// Register a node in a phase group. The node's RNG stream is derived
    /// from the root seed and its stable id.
    pub fn add_node(&mut self, phase: Phase, id: &str, node: Box<dyn Node>) -> Result<(), RuntimeError> {
        if self.ctx.index.contains_key(id) {
            return Err(RuntimeError::DuplicateNode(id.to_string()));
        }
        let idx = self.ctx.bus.add_node();
        debug_assert_eq!(idx, self.nodes.len());
        self.ctx.ids.push(id.to_string());
        self.ctx.index.insert(id.to_string(), idx);
        self.ctx.rngs.push(SimRng::derive(self.ctx.root_seed, id));
        self.ctx.schedules.push(Vec::new());
        self.nodes.push(node);
        self.groups[phase.index()].push(idx);
        Ok(())
    }

    /// Attach a scheduled activity to a node; returns the activity index.
    /// The first schedule is the component's actuation knob.
    pub fn add_schedule(
        &mut self,
        component_id: &str,
        frequency: f64,
        bounds: FreqBounds,
        phase_offset: u64,
    ) -> Result<usize, RuntimeError> {
        let idx = self
            .ctx
            .node_index(component_id)
            .ok_or_else(|| RuntimeError::UnknownComponent(component_id.to_string()))?;
        self.ctx.schedules[idx].push(NodeSchedule::new(component_id, frequency, bounds, phase_offset));
        Ok(self.ctx.schedules[idx].len() - 1)
    }

    pub fn subscribe(&mut self, topic: &str, node_id: &str) -> Result<Subscription, RuntimeError> {
        let idx = self
            .ctx
            .node_index(node_id)
            .ok_or_else(|| RuntimeError::UnknownComponent(node_id.to_string()))?;
        self.ctx.bus.subscribe(topic, idx)?;
        Ok(Subscription {
            topic: topic.to_string(),
            node_id: node_id.to_string(),
        })
    }

    /// Run `n_ticks` ticks; returns how many node activations executed.
    pub fn advance(&mut self, n_ticks: u64) -> Result<u64, RuntimeError> {
        if n_ticks == 0 {
            return Ok(0);
        }
        let Self {
            ctx,
            nodes,
            groups,
            started,
        } = self;

        if !*started {
            *started = true;
            for group in groups.iter() {
                for &i in group {
                    ctx.current = i;
                    nodes[i].on_start(ctx);
                }
            }
        }

        let mut executed = 0u64;
        for _ in 0..n_ticks {
            for schedules in ctx.schedules.iter_mut() {
                for schedule in schedules.iter_mut() {
                    schedule.apply_pending();
                }
            }
            for group in groups.iter() {
                for &i in group {
                    // Drain only what was queued before this visit; messages a
                    // handler publishes to itself wait for the next tick.
                    let pending = ctx.bus.inbox_len(i);
                    for _ in 0..pending {
                        let msg = ctx.bus.pop_inbox(i).expect("inbox length checked");
                        ctx.current = i;
                        nodes[i].on_message(&msg, ctx);
                    }
                    let tick = ctx.clock.tick();
                    let dt = ctx.clock.tick_duration();
                    for activity in 0..ctx.schedules[i].len() {
                        let fires = ctx.schedules[i][activity].accrue(tick, dt);
                        for _ in 0..fires {
                            ctx.current = i;
                            nodes[i].on_activate(activity, ctx);
                            executed += 1;
                        }
                    }
                }
            }
            ctx.repository.flush()?;
            if let Some(e) = ctx.deferred_io_error.take() {
                return Err(e.into());
            }
            ctx.clock.advance();
        }
        Ok(executed)
    }
}

/// Message sink for tests and summaries: records everything it receives.
#[derive(Default)]
pub struct Recorder {
    pub seen: Rc<RefCell<Vec<Message>>>,
}

impl Recorder {
    pub fn new() -> (Self, Rc<RefCell<Vec<Message>>>) {
        let seen: Rc<RefCell<Vec<Message>>> = Rc::default();
        (
            Self { seen: Rc::clone(&seen) },
            seen,
        )
    }
}

impl Node for Recorder {
    fn on_message(&mut self, msg: &Message, _ctx: &mut Ctx) {
        self.seen.borrow_mut().push(msg.clone());
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::message::StatusKind;

    fn empty_engine() -> Engine {
        let patient = Patient::from_config(
            &[crate::config::VitalSignConfig {
                name: "pulse".into(),
                change_frequency: 1.0,
                change_offset: 0.0,
                transition_matrix: Some(
                    (0..5)
                        .map(|i| (0..5).map(|j| if i == j { 1.0 } else { 0.0 }).collect())
                        .collect(),
                ),
                state_ranges: vec![[0.0, 1.0], [1.0, 2.0], [2.0, 3.0], [3.0, 4.0], [4.0, 5.0]],
            }],
            &BTreeMap::new(),
        )
        .unwrap();
        Engine::new(42, 100, Repository::in_memory(), patient)
    }

    /// Counts activations; optionally publishes a canned message on each one.
    struct Ticker {
        count: Rc<RefCell<u64>>,
        publish: Option<(String, Message)>,
    }

    impl Node for Ticker {
        fn on_activate(&mut self, _activity: usize, ctx: &mut Ctx) {
            *self.count.borrow_mut() += 1;
            if let Some((topic, msg)) = &self.publish {
                ctx.publish(topic, msg.clone()).unwrap();
            }
        }
    }

    fn status_msg(id: &str) -> Message {
        Message::Status {
            component_id: id.into(),
            status: StatusKind::Success,
            timestamp: 0.0,
        }
    }

    fn bounds() -> FreqBounds {
        FreqBounds::new(0.1, 20.0)
    }

    #[test]
    fn one_hz_node_activates_once_in_ten_ticks() {
        let mut engine = empty_engine();
        let count = Rc::new(RefCell::new(0));
        engine
            .add_node(Phase::Managed, "n", Box::new(Ticker { count: Rc::clone(&count), publish: None }))
            .unwrap();
        engine.add_schedule("n", 1.0, bounds(), 0).unwrap();
        let executed = engine.advance(10).unwrap();
        assert_eq!(executed, 1);
        assert_eq!(*count.borrow(), 1);
    }

    #[test]
    fn two_hz_node_activates_twice_per_virtual_second() {
        let mut engine = empty_engine();
        let count = Rc::new(RefCell::new(0));
        engine
            .add_node(Phase::Managed, "n", Box::new(Ticker { count: Rc::clone(&count), publish: None }))
            .unwrap();
        engine.add_schedule("n", 2.0, bounds(), 0).unwrap();
        engine.advance(10).unwrap();
        assert_eq!(*count.borrow(), 2);
    }

    #[test]
    fn advance_zero_is_a_noop() {
        let mut engine = empty_engine();
        assert_eq!(engine.advance(0).unwrap(), 0);
    }

    #[test]
    fn single_delivery_and_fanout() {
        let mut engine = empty_engine();
        engine.register_topic("status").unwrap();
        let (recorder_a, seen_a) = Recorder::new();
        let (recorder_b, seen_b) = Recorder::new();
        engine.add_node(Phase::Managing, "a", Box::new(recorder_a)).unwrap();
        engine.add_node(Phase::Managing, "b", Box::new(recorder_b)).unwrap();
        engine.subscribe("status", "a").unwrap();
        engine.subscribe("status", "b").unwrap();
        let delivered = engine.ctx_mut().publish("status", status_msg("x")).unwrap();
        assert_eq!(delivered, 2);
        engine.advance(1).unwrap();
        assert_eq!(seen_a.borrow().len(), 1);
        assert_eq!(seen_b.borrow().len(), 1);
    }

    #[test]
    fn topic_isolation_no_delivery() {
        let mut engine = empty_engine();
        engine.register_topic("status").unwrap();
        engine.register_topic("event").unwrap();
        let (recorder, seen) = Recorder::new();
        engine.add_node(Phase::Managing, "a", Box::new(recorder)).unwrap();
        engine.subscribe("status", "a").unwrap();
        engine.ctx_mut().publish("event", status_msg("x")).unwrap();
        engine.advance(1).unwrap();
        assert!(seen.borrow().is_empty());
    }

    #[test]
    fn same_tick_delivery_across_phases() {
        // An environment node publishes during tick t; a managed subscriber
        // must handle the message within the same tick.
        struct Sender;
        impl Node for Sender {
            fn on_activate(&mut self, _a: usize, ctx: &mut Ctx) {
                let msg = Message::Status {
                    component_id: "env".into(),
                    status: StatusKind::Success,
                    timestamp: ctx.now(),
                };
                ctx.publish("status", msg).unwrap();
            }
        }
        struct Receiver {
            delivery_ticks: Rc<RefCell<Vec<(f64, f64)>>>,
        }
        impl Node for Receiver {
            fn on_message(&mut self, msg: &Message, ctx: &mut Ctx) {
                if let Message::Status { timestamp, .. } = msg {
                    self.delivery_ticks.borrow_mut().push((*timestamp, ctx.now()));
                }
            }
        }
        let mut engine = empty_engine();
        engine.register_topic("status").unwrap();
        let deliveries = Rc::new(RefCell::new(Vec::new()));
        engine.add_node(Phase::Environment, "env", Box::new(Sender)).unwrap();
        engine
            .add_node(
                Phase::Managed,
                "managed",
                Box::new(Receiver { delivery_ticks: Rc::clone(&deliveries) }),
            )
            .unwrap();
        engine.add_schedule("env", 10.0, bounds(), 0).unwrap();
        engine.subscribe("status", "managed").unwrap();
        engine.advance(5).unwrap();
        let deliveries = deliveries.borrow();
        assert_eq!(deliveries.len(), 5);
        for (sent_at, handled_at) in deliveries.iter() {
            assert_eq!(sent_at, handled_at);
        }
    }

    #[test]
    fn self_publication_is_queued_not_recursive() {
        struct Echo {
            handled: Rc<RefCell<u32>>,
        }
        impl Node for Echo {
            fn on_message(&mut self, _msg: &Message, ctx: &mut Ctx) {
                *self.handled.borrow_mut() += 1;
                // Echo back to our own topic; must not recurse.
                ctx.publish("loop", status_msg("echo")).unwrap();
            }
        }
        let mut engine = empty_engine();
        engine.register_topic("loop").unwrap();
        let handled = Rc::new(RefCell::new(0));
        engine
            .add_node(Phase::Managed, "echo", Box::new(Echo { handled: Rc::clone(&handled) }))
            .unwrap();
        engine.subscribe("loop", "echo").unwrap();
        engine.ctx_mut().publish("loop", status_msg("seed")).unwrap();
        engine.advance(1).unwrap();
        assert_eq!(*handled.borrow(), 1);
        engine.advance(1).unwrap();
        assert_eq!(*handled.borrow(), 2);
        engine.advance(3).unwrap();
        assert_eq!(*handled.borrow(), 5);
    }

    #[test]
    fn set_frequency_returns_previous_and_applies_next_tick() {
        let mut engine = empty_engine();
        let count = Rc::new(RefCell::new(0));
        engine
            .add_node(Phase::Managed, "oximeter", Box::new(Ticker { count: Rc::clone(&count), publish: None }))
            .unwrap();
        engine.add_schedule("oximeter", 1.0, bounds(), 0).unwrap();
        let prev = engine.ctx_mut().set_frequency("oximeter", 2.0).unwrap();
        assert_eq!(prev, 1.0);
        engine.advance(10).unwrap();
        assert_eq!(*count.borrow(), 2, "new frequency governs the next second");
    }

    #[test]
    fn set_frequency_clamps_and_reports_saturation() {
        let mut engine = empty_engine();
        let count = Rc::new(RefCell::new(0));
        engine
            .add_node(Phase::Managed, "oximeter", Box::new(Ticker { count, publish: None }))
            .unwrap();
        engine.add_schedule("oximeter", 1.0, bounds(), 0).unwrap();
        match engine.ctx_mut().set_frequency("oximeter", 100.0) {
            Err(SetFrequencyError::Saturated(e)) => assert_eq!(e.clamped, 20.0),
            other => panic!("expected saturation, got {other:?}"),
        }
        engine.advance(1).unwrap();
        assert_eq!(engine.ctx().frequency_of("oximeter"), Some(20.0));
    }

    #[test]
    fn unknown_component_frequency_errors() {
        let mut engine = empty_engine();
        assert!(matches!(
            engine.ctx_mut().set_frequency("ghost", 1.0),
            Err(SetFrequencyError::UnknownComponent(_))
        ));
    }

    #[test]
    fn activation_totals_are_deterministic() {
        let run = || {
            let mut engine = empty_engine();
            let count = Rc::new(RefCell::new(0));
            engine
                .add_node(Phase::Managed, "n", Box::new(Ticker { count: Rc::clone(&count), publish: None }))
                .unwrap();
            engine.add_schedule("n", 3.7, bounds(), 0).unwrap();
            engine.advance(1000).unwrap();
            let total = *count.borrow();
            total
        };
        let a = run();
        assert_eq!(a, run());
        // 3.7 Hz over 100 s
        assert!((369..=371).contains(&a), "{a}");
    }
}
