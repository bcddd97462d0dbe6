//! Run orchestration: wire every node from a `RunConfig`, drive the engine
//! for the configured duration, and collect a summary.

use crate::boundary::{EffectorNode, ProbeNode};
use crate::config::{ConfigError, RunConfig};
use crate::hub::{HubHandles, HubNode, HubStats, PatientStatus};
use crate::injector::{InjectorNode, TrafficFloodNode};
use crate::manager::{
    ControllerParams, EnactorNode, MonitorSnapshot, StrategyManagerNode,
};
use crate::message::LogCategory;
use crate::patient::Patient;
use crate::repository::{Repository, RepositoryError};
use crate::runtime::schedule::FreqBounds;
use crate::runtime::{Engine, Node, Phase, RuntimeError};
use crate::sensor::{SensorNode, SensorTelemetry};
use crate::topics;
use std::cell::RefCell;
use std::collections::{BTreeMap, BTreeSet};
use std::path::{Path, PathBuf};
use std::rc::Rc;
use std::time::{SystemTime, UNIX_EPOCH};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum SimError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error(transparent)]
    Runtime(#[from] RuntimeError),
    #[error(transparent)]
    Repository(#[from] RepositoryError),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// Component ids reserved for infrastructure nodes.
pub mod node_ids {
    pub const PATIENT: &str = "patient";
    pub const INJECTOR: &str = "uncertainty_injector";
    pub const FLOOD: &str = "traffic_flood";
    pub const PROBE: &str = "probe";
    pub const EFFECTOR: &str = "effector";
    pub const STRATEGY_MANAGER: &str = "strategy_manager";
    pub const STRATEGY_ENACTOR: &str = "strategy_enactor";
}

/// Options orthogonal to the stored configuration.
#[derive(Debug, Clone, Default)]
pub struct RunOptions {
    /// Explicit run id; defaults to the start timestamp in milliseconds.
    pub run_id: Option<String>,
    /// Root of run output directories; defaults to `simulation.out_dir`.
    pub out_root: Option<PathBuf>,
    /// Skip writing logs and config to disk (tests, dry runs).
    pub in_memory: bool,
    /// Print one progress line roughly every 60 virtual seconds.
    pub progress: bool,
    /// Cosmetic wall-clock pacing: sleep one tick duration per tick. Results
    /// are identical with or without pacing.
    pub pace: bool,
}

/// Shared handles into the running nodes, for summaries and tests.
pub struct SimHandles {
    pub hub: HubHandles,
    pub sensors: BTreeMap<String, Rc<RefCell<SensorTelemetry>>>,
    pub monitor: Rc<RefCell<Option<MonitorSnapshot>>>,
}

#[derive(Debug, Clone)]
pub struct RunSummary {
    pub run_id: String,
    pub out_dir: Option<PathBuf>,
    pub duration: f64,
    pub seed: u64,
    pub activations: u64,
    pub record_counts: BTreeMap<String, usize>,
    pub hub_stats: HubStats,
    pub final_patient_status: Option<PatientStatus>,
    pub final_monitor: Option<MonitorSnapshot>,
    pub wall_clock_seconds: f64,
}

/// Build a fully wired engine from a validated configuration.
pub fn build_engine(config: &RunConfig, repository: Repository) -> Result<(Engine, SimHandles), SimError> {
    let band_probabilities: BTreeMap<String, [f64; 3]> = config
        .sensors
        .iter()
        .map(|s| (s.vital_sign().to_string(), s.risk_band_probabilities))
        .collect();
    let patient = Patient::from_config(&config.patient.vital_signs, &band_probabilities)?;

    let mut engine = Engine::new(config.simulation.seed, config.simulation.tick_ms, repository, patient);
    for topic in topics::ALL {
        engine.register_topic(topic)?;
    }

    // Environment phase: patient, then the uncertainty injector, then the
    // synthetic traffic source.
    engine.add_node(Phase::Environment, node_ids::PATIENT, Box::new(PatientNode))?;
    engine.add_schedule(
        node_ids::PATIENT,
        config.patient.frequency,
        FreqBounds::new(config.patient.frequency / 2.0, config.patient.frequency * 2.0),
        0,
    )?;
    if config.injector.enabled {
        engine.add_node(
            Phase::Environment,
            node_ids::INJECTOR,
            Box::new(InjectorNode::new(&config.injector)),
        )?;
        engine.add_schedule(
            node_ids::INJECTOR,
            config.injector.frequency,
            FreqBounds::new(config.injector.frequency / 2.0, config.injector.frequency * 2.0),
            0,
        )?;
    }
    if config.flood.enabled {
        engine.add_node(
            Phase::Environment,
            node_ids::FLOOD,
            Box::new(TrafficFloodNode::new(&config.flood)),
        )?;
        engine.add_schedule(
            node_ids::FLOOD,
            config.flood.frequency,
            FreqBounds::new(config.flood.frequency / 2.0, config.flood.frequency * 2.0),
            0,
        )?;
    }

    // Managed phase: effector first so commands reach components within the
    // tick they cross the boundary, then sensors in config order, then hub.
    engine.add_node(Phase::Managed, node_ids::EFFECTOR, Box::new(EffectorNode))?;
    engine.subscribe(topics::ADAPTATION_COMMAND, node_ids::EFFECTOR)?;

    let mut sensor_handles = BTreeMap::new();
    for sensor_cfg in &config.sensors {
        let (node, telemetry) = SensorNode::new(sensor_cfg.clone());
        engine.add_node(Phase::Managed, &sensor_cfg.id, Box::new(node))?;
        engine.add_schedule(
            &sensor_cfg.id,
            sensor_cfg.frequency,
            FreqBounds::new(sensor_cfg.f_min, sensor_cfg.f_max),
            0,
        )?;
        engine.subscribe(topics::UNCERTAINTY_NOISE, &sensor_cfg.id)?;
        engine.subscribe(topics::ACTUATION, &sensor_cfg.id)?;
        sensor_handles.insert(sensor_cfg.id.clone(), telemetry);
    }

    let known_sensors: BTreeSet<String> = config.sensors.iter().map(|s| s.id.clone()).collect();
    let (hub_node, hub_handles) = HubNode::new(config.hub.clone(), known_sensors.clone());
    engine.add_node(Phase::Managed, &config.hub.id, Box::new(hub_node))?;
    engine.add_schedule(
        &config.hub.id,
        config.hub.frequency,
        FreqBounds::new(config.hub.f_min, config.hub.f_max),
        0,
    )?;
    engine.subscribe(topics::SENSOR_DATA, &config.hub.id)?;
    engine.subscribe(topics::EVENT, &config.hub.id)?;
    engine.subscribe(topics::ACTUATION, &config.hub.id)?;

    // Managing phase: probe first so telemetry reaches the repository before
    // the manager reads its windows, then manager, then enactor.
    engine.add_node(Phase::Managing, node_ids::PROBE, Box::new(ProbeNode))?;
    for topic in [
        topics::STATUS,
        topics::EVENT,
        topics::ENERGY_STATUS,
        topics::UNCERTAINTY_NOISE,
    ] {
        engine.subscribe(topic, node_ids::PROBE)?;
    }

    let mut managed: BTreeSet<String> = known_sensors.clone();
    managed.insert(config.hub.id.clone());
    let initially_active: BTreeSet<String> = config
        .sensors
        .iter()
        .filter(|s| s.start_active)
        .map(|s| s.id.clone())
        .chain(std::iter::once(config.hub.id.clone()))
        .collect();
    let (manager_node, monitor_handle) = StrategyManagerNode::new(
        config.manager.clone(),
        config.formula(config.manager.qos_attribute),
        initially_active,
        managed,
    );
    engine.add_node(Phase::Managing, node_ids::STRATEGY_MANAGER, Box::new(manager_node))?;
    // Activity 0: monitor, activity 1: actuation.
    engine.add_schedule(
        node_ids::STRATEGY_MANAGER,
        config.manager.monitor_freq,
        FreqBounds::new(config.manager.monitor_freq / 2.0, config.manager.monitor_freq * 2.0),
        0,
    )?;
    engine.add_schedule(
        node_ids::STRATEGY_MANAGER,
        config.manager.actuation_freq,
        FreqBounds::new(config.manager.actuation_freq / 2.0, config.manager.actuation_freq * 2.0),
        0,
    )?;
    engine.subscribe(topics::EXCEPTION, node_ids::STRATEGY_MANAGER)?;
    engine.subscribe(topics::EVENT, node_ids::STRATEGY_MANAGER)?;

    let enactor = EnactorNode::with_default_controller(
        config.manager.qos_attribute,
        config.manager.stability_margin,
        config.manager.info_quant,
        ControllerParams {
            kp: config.enactor.kp,
            f_min: 0.1,
            f_max: 20.0,
        },
    );
    engine.add_node(Phase::Managing, node_ids::STRATEGY_ENACTOR, Box::new(enactor))?;
    engine.add_schedule(
        node_ids::STRATEGY_ENACTOR,
        config.enactor.frequency,
        FreqBounds::new(config.enactor.frequency / 2.0, config.enactor.frequency * 2.0),
        0,
    )?;
    engine.subscribe(topics::STRATEGY, node_ids::STRATEGY_ENACTOR)?;
    engine.subscribe(topics::EVENT, node_ids::STRATEGY_ENACTOR)?;

    Ok((
        engine,
        SimHandles {
            hub: hub_handles,
            sensors: sensor_handles,
            monitor: monitor_handle,
        },
    ))
}

struct PatientNode;

impl Node for PatientNode {
    fn on_activate(&mut self, _activity: usize, ctx: &mut crate::runtime::Ctx) {
        ctx.patient_step();
    }
}

fn timestamp_run_id() -> String {
    let millis = SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map(|d| d.as_millis())
        .unwrap_or(0);
    millis.to_string()
}

/// Pick a run id and directory that does not collide with a previous run.
fn unique_run_dir(out_root: &Path, requested: Option<String>) -> (String, PathBuf) {
    match requested {
        Some(id) => {
            let dir = out_root.join(&id);
            (id, dir)
        }
        None => {
            let base = timestamp_run_id();
            let mut id = base.clone();
            let mut n = 1;
            while out_root.join(&id).exists() {
                n += 1;
                id = format!("{base}-{n}");
            }
            let dir = out_root.join(&id);
            (id, dir)
        }
    }
}

/// Execute a full simulation run.
pub fn run(config: &RunConfig, options: &RunOptions) -> Result<RunSummary, SimError> {
    config.validate()?;
    let started = std::time::Instant::now();

    let out_root = options
        .out_root
        .clone()
        .unwrap_or_else(|| PathBuf::from(&config.simulation.out_dir));
    let (run_id, out_dir) = unique_run_dir(&out_root, options.run_id.clone());

    let repository = if options.in_memory {
        Repository::in_memory()
    } else {
        Repository::with_dir(&out_dir, &run_id)?
    };
    if !options.in_memory {
        std::fs::write(out_dir.join("config.toml"), config.to_toml_string())?;
    }

    let (mut engine, handles) = build_engine(config, repository)?;
    let duration = config.simulation.duration;
    let tick_ms = config.simulation.tick_ms;
    let total_ticks = (duration * 1000.0 / tick_ms as f64 + 0.5).floor() as u64;

    let mut activations = 0u64;
    let progress_chunk = (60_000 / tick_ms).max(1);
    let mut remaining = total_ticks;
    while remaining > 0 {
        let step = remaining.min(progress_chunk);
        if options.pace {
            for _ in 0..step {
                activations += engine.advance(1)?;
                std::thread::sleep(std::time::Duration::from_millis(tick_ms));
            }
        } else {
            activations += engine.advance(step)?;
        }
        remaining -= step;
        if options.progress {
            let qos = handles
                .monitor
                .borrow()
                .as_ref()
                .map(|s| format!("{:.4}", s.global))
                .unwrap_or_else(|| "-".into());
            let dropped = handles.hub.stats.borrow().dropped;
            println!("t={:.1}s qos={} hub_queue_drops={}", engine.ctx().now(), qos, dropped);
        }
    }
    engine.ctx_mut().repository.flush()?;

    let record_counts: BTreeMap<String, usize> = LogCategory::ALL
        .iter()
        .map(|c| (c.file_stem().to_string(), engine.ctx().repository.count(*c)))
        .collect();

    let hub_stats = *handles.hub.stats.borrow();
    let final_patient_status = *handles.hub.last_status.borrow();
    let final_monitor = handles.monitor.borrow().clone();
    Ok(RunSummary {
        run_id,
        out_dir: (!options.in_memory).then_some(out_dir),
        duration,
        seed: config.simulation.seed,
        activations,
        record_counts,
        hub_stats,
        final_patient_status,
        final_monitor,
        wall_clock_seconds: started.elapsed().as_secs_f64(),
    })
}
