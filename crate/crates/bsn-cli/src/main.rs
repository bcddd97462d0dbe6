//! Command-line entry point: run simulations and analyze their logs.

use anyhow::{bail, Context, Result};
use bsn_core::analyzer::{self, MetricsReport, RunData};
use bsn_core::sim::{self, RunOptions};
use bsn_core::{apply_scenario, default_config_toml, QosAttribute, RunConfig, ScenarioPreset};
use clap::{Parser, Subcommand};
use std::path::PathBuf;

#[derive(Parser)]
#[command(name = "bsn", about = "Body sensor network self-adaptation simulator", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a simulation and write its five CSV logs under out/<run_id>/.
    Run {
        /// Configuration file; the built-in default is used when omitted.
        #[arg(long)]
        config: Option<PathBuf>,
        /// Run duration in virtual seconds (default from config: 300).
        #[arg(long)]
        duration: Option<f64>,
        /// Root RNG seed.
        #[arg(long)]
        seed: Option<u64>,
        /// Scenario preset overlay.
        #[arg(long)]
        scenario: Option<ScenarioArg>,
        /// Explicit run id (defaults to the start timestamp).
        #[arg(long)]
        run_id: Option<String>,
        /// Output root directory (defaults to config out_dir).
        #[arg(long)]
        out_dir: Option<PathBuf>,
        /// Suppress per-minute progress lines.
        #[arg(long)]
        quiet: bool,
        /// Pace the run against the wall clock (one tick per tick duration).
        /// Purely cosmetic: results are identical with or without pacing.
        #[arg(long)]
        pace: bool,
    },
    /// Analyze a finished run: QoS curve, SSE, overshoot, settling time.
    Analyze {
        #[arg(long)]
        run_id: String,
        /// QoS attribute to reconstruct.
        #[arg(long)]
        attribute: AttributeArg,
        /// Setpoint; read from the run's stored config when omitted.
        #[arg(long)]
        setpoint: Option<f64>,
        /// Include per-component curves in the series and plot.
        #[arg(long)]
        per_component: bool,
        /// Settling band as a fraction of the steady state.
        #[arg(long, default_value_t = 0.02)]
        band: f64,
        /// Tail fraction used for the steady-state estimate.
        #[arg(long, default_value_t = 0.1)]
        tail: f64,
        /// Output root directory the run lives under.
        #[arg(long, default_value = "out")]
        out_dir: PathBuf,
    },
    /// Print the built-in default configuration.
    DefaultConfig,
}

#[derive(Clone, Copy)]
struct ScenarioArg(ScenarioPreset);

impl std::str::FromStr for ScenarioArg {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        s.parse().map(ScenarioArg)
    }
}

#[derive(Clone, Copy, PartialEq)]
struct AttributeArg(QosAttribute);

impl std::str::FromStr for AttributeArg {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "reliability" => Ok(AttributeArg(QosAttribute::Reliability)),
            "cost" => Ok(AttributeArg(QosAttribute::Cost)),
            other => Err(format!("unknown attribute '{other}' (reliability|cost)")),
        }
    }
}

fn main() -> Result<()> {
    match Cli::parse().command {
        Command::Run {
            config,
            duration,
            seed,
            scenario,
            run_id,
            out_dir,
            quiet,
            pace,
        } => run_command(config, duration, seed, scenario, run_id, out_dir, quiet, pace),
        Command::Analyze {
            run_id,
            attribute,
            setpoint,
            per_component,
            band,
            tail,
            out_dir,
        } => analyze_command(run_id, attribute.0, setpoint, per_component, band, tail, out_dir),
        Command::DefaultConfig => {
            print!("{}", default_config_toml());
            Ok(())
        }
    }
}

#[allow(clippy::too_many_arguments)]
fn run_command(
    config_path: Option<PathBuf>,
    duration: Option<f64>,
    seed: Option<u64>,
    scenario: Option<ScenarioArg>,
    run_id: Option<String>,
    out_dir: Option<PathBuf>,
    quiet: bool,
    pace: bool,
) -> Result<()> {
    let mut config = match &config_path {
        Some(path) => RunConfig::from_file(path)
            .with_context(|| format!("loading config {}", path.display()))?,
        None => RunConfig::from_toml_str(default_config_toml(), "builtin default")?,
    };
    if let Some(ScenarioArg(preset)) = scenario {
        config = apply_scenario(config, preset);
    }
    if let Some(d) = duration {
        config.simulation.duration = d;
    }
    if let Some(s) = seed {
        config.simulation.seed = s;
    }
    config.validate()?;

    let options = RunOptions {
        run_id,
        out_root: out_dir,
        in_memory: false,
        progress: !quiet,
        pace,
    };
    let summary = sim::run(&config, &options)?;

    println!("run_id: {}", summary.run_id);
    if let Some(dir) = &summary.out_dir {
        println!("output: {}", dir.display());
    }
    println!(
        "duration: {} virtual s ({} activations, {:.2} wall s)",
        summary.duration, summary.activations, summary.wall_clock_seconds
    );
    for (category, count) in &summary.record_counts {
        println!("records.{category}: {count}");
    }
    let hub = summary.hub_stats;
    println!(
        "hub: arrived={} accepted={} dropped={} processed={}",
        hub.arrived, hub.accepted, hub.dropped, hub.processed
    );
    if let Some(status) = summary.final_patient_status {
        println!(
            "patient_status: {:.2}% ({})",
            status.fused_risk, status.label
        );
    }
    if let Some(monitor) = summary.final_monitor {
        println!(
            "final_{}: {:.4} (setpoint {})",
            config.manager.qos_attribute, monitor.global, config.manager.setpoint
        );
    }
    Ok(())
}

fn analyze_command(
    run_id: String,
    attribute: QosAttribute,
    setpoint: Option<f64>,
    per_component: bool,
    band: f64,
    tail: f64,
    out_root: PathBuf,
) -> Result<()> {
    let run_dir = out_root.join(&run_id);
    if !run_dir.exists() {
        bail!("no run directory {}", run_dir.display());
    }
    let data = RunData::load(&run_dir, &run_id)?;
    if attribute != data.config.manager.qos_attribute {
        eprintln!(
            "warning: run was driven by the {} engine; analyzing {} as requested",
            data.config.manager.qos_attribute, attribute
        );
    }
    let setpoint = setpoint.unwrap_or(data.config.manager.setpoint);
    let window = data.config.manager.info_quant;
    let series = analyzer::reconstruct_series(&data, attribute, window, per_component);
    if series.is_empty() {
        eprintln!("warning: reconstructed series is empty; nothing to report");
        return Ok(());
    }
    let report = MetricsReport::compute(&series, setpoint, tail, band)?;
    let files = analyzer::emit(&report, &series, &run_dir, &run_id)?;

    print!("{}", report.to_text());
    println!("report: {}", files.report.display());
    println!("series: {}", files.series_csv.display());
    println!("plot: {}", files.plot_svg.display());
    Ok(())
}
