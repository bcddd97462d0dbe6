//! Post-run evaluation: rebuild the QoS time series from the run logs and
//! compute setpoint-tracking metrics (steady-state error, overshoot,
//! settling time).
//!
//! The series is reconstructed at the monitor cadence with the same
//! sliding-window estimation the managing system used online: per-component
//! windows of the last `info_quant` records, combined through the global
//! parametric formula over the components active at that instant.

mod plot;

pub use plot::write_svg_plot;

use crate::config::RunConfig;
use crate::manager::estimate::estimate_local;
use crate::message::{EventKind, LogCategory, QosAttribute};
use crate::repository::{self, LogRecord, Payload};
use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum AnalyzerError {
    #[error("missing log file {0}")]
    MissingLog(PathBuf),
    #[error("missing stored run config {0}")]
    MissingConfig(PathBuf),
    #[error(transparent)]
    Repository(#[from] crate::repository::RepositoryError),
    #[error(transparent)]
    Config(#[from] crate::config::ConfigError),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error("series is empty")]
    EmptySeries,
    #[error("cannot parse report line '{0}'")]
    BadReportLine(String),
}

/// Everything a run left on disk.
pub struct RunData {
    pub run_id: String,
    pub config: RunConfig,
    pub logs: BTreeMap<LogCategory, Vec<LogRecord>>,
}

impl RunData {
    pub fn load(run_dir: &Path, run_id: &str) -> Result<Self, AnalyzerError> {
        let config_path = run_dir.join("config.toml");
        if !config_path.exists() {
            return Err(AnalyzerError::MissingConfig(config_path));
        }
        let config = RunConfig::from_file(&config_path)?;
        let mut logs = BTreeMap::new();
        for category in LogCategory::ALL {
            let path = repository::log_path(run_dir, category, run_id);
            if !path.exists() {
                return Err(AnalyzerError::MissingLog(path));
            }
            logs.insert(category, repository::parse_log_file(&path, category)?);
        }
        Ok(Self {
            run_id: run_id.to_string(),
            config,
            logs,
        })
    }
}

/// Reconstructed QoS attribute curve.
#[derive(Debug, Clone, PartialEq)]
pub struct QoSSeries {
    pub attribute: QosAttribute,
    pub timestamps: Vec<f64>,
    pub values: Vec<f64>,
    /// Optional per-component sub-series, index-aligned with `timestamps`.
    pub per_component: BTreeMap<String, Vec<f64>>,
}

impl QoSSeries {
    pub fn len(&self) -> usize {
        self.timestamps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.timestamps.is_empty()
    }
}

/// Per-component activity intervals replayed from the event log.
struct ActivityTrack {
    event_times: Vec<(f64, EventKind)>,
}

impl ActivityTrack {
    fn active_at(&self, t: f64) -> bool {
        let mut active = false;
        for (ts, event) in &self.event_times {
            if *ts > t {
                break;
            }
            active = *event == EventKind::Activate;
        }
        active
    }
}

/// Reconstruct the global QoS series from logs, sampling at the monitor
/// cadence with windows of `window` records per component.
pub fn reconstruct_series(
    data: &RunData,
    attribute: QosAttribute,
    window: usize,
    per_component: bool,
) -> QoSSeries {
    let config = &data.config;
    let formula = config.formula(attribute);
    let components = config.managed_component_ids();

    let mut activity: BTreeMap<&str, ActivityTrack> = components
        .iter()
        .map(|id| {
            (
                id.as_str(),
                ActivityTrack {
                    event_times: Vec::new(),
                },
            )
        })
        .collect();
    for record in &data.logs[&LogCategory::Event] {
        if let Payload::Event(event) = &record.payload {
            if let Some(track) = activity.get_mut(record.component_id.as_str()) {
                track.event_times.push((record.timestamp, *event));
            }
        }
    }

    // Per-component chronological record lists for window slicing.
    let source_category = match attribute {
        QosAttribute::Reliability => LogCategory::Status,
        QosAttribute::Cost => LogCategory::EnergyStatus,
    };
    let mut per_comp_records: BTreeMap<&str, Vec<&LogRecord>> =
        components.iter().map(|id| (id.as_str(), Vec::new())).collect();
    for record in &data.logs[&source_category] {
        if let Some(list) = per_comp_records.get_mut(record.component_id.as_str()) {
            list.push(record);
        }
    }

    // Frequency replay for the cost estimator: initial config frequency plus
    // the adaptation command history.
    let mut freq_track: BTreeMap<&str, Vec<(f64, f64)>> = BTreeMap::new();
    if attribute == QosAttribute::Cost {
        for sensor in &config.sensors {
            freq_track.insert(sensor.id.as_str(), vec![(0.0, sensor.frequency)]);
        }
        freq_track.insert(config.hub.id.as_str(), vec![(0.0, config.hub.frequency)]);
        for record in &data.logs[&LogCategory::Adaptation] {
            if let Payload::Frequency(f) = &record.payload {
                if let Some(track) = freq_track.get_mut(record.component_id.as_str()) {
                    track.push((record.timestamp, *f));
                }
            }
        }
    }
    let frequency_at = |component: &str, t: f64| -> f64 {
        freq_track
            .get(component)
            .map(|track| {
                let mut current = track[0].1;
                for (ts, f) in track {
                    if *ts > t {
                        break;
                    }
                    current = *f;
                }
                current
            })
            .unwrap_or(0.0)
    };

    let monitor_freq = config.manager.monitor_freq;
    let duration = config.simulation.duration;
    let samples = (duration * monitor_freq + 1e-9).floor() as usize;

    let mut cursors: BTreeMap<&str, usize> = components.iter().map(|id| (id.as_str(), 0)).collect();
    let mut timestamps = Vec::with_capacity(samples);
    let mut values = Vec::with_capacity(samples);
    let mut component_series: BTreeMap<String, Vec<f64>> = BTreeMap::new();

    for k in 1..=samples {
        let t = k as f64 / monitor_freq;
        let mut locals = BTreeMap::new();
        let mut active = BTreeSet::new();
        for id in &components {
            let track = &activity[id.as_str()];
            if !track.active_at(t) {
                continue;
            }
            let records = &per_comp_records[id.as_str()];
            let cursor = cursors.get_mut(id.as_str()).expect("cursor exists");
            while *cursor < records.len() && records[*cursor].timestamp <= t {
                *cursor += 1;
            }
            let start = cursor.saturating_sub(window);
            let slice: Vec<LogRecord> = records[start..*cursor].iter().map(|r| (*r).clone()).collect();
            let estimate = estimate_local(attribute, &slice, frequency_at(id, t));
            locals.insert(id.clone(), estimate.value);
            active.insert(id.clone());
        }
        if active.is_empty() {
            continue;
        }
        let Ok(global) = formula.eval(&locals, &active) else {
            continue;
        };
        timestamps.push(t);
        values.push(global);
        if per_component {
            for id in &components {
                component_series
                    .entry(id.clone())
                    .or_default()
                    .push(locals.get(id).copied().unwrap_or(f64::NAN));
            }
        }
    }

    QoSSeries {
        attribute,
        timestamps,
        values,
        per_component: component_series,
    }
}

/// Steady state as the mean of the final `tail_fraction` of samples.
pub fn steady_state(series: &QoSSeries, tail_fraction: f64) -> Result<f64, AnalyzerError> {
    if series.is_empty() {
        return Err(AnalyzerError::EmptySeries);
    }
    let n = series.len();
    let count = ((n as f64 * tail_fraction).ceil() as usize).clamp(1, n);
    let tail = &series.values[n - count..];
    Ok(tail.iter().sum::<f64>() / count as f64)
}

/// Steady-state error: `100 * |setpoint - steady| / setpoint`.
pub fn sse(steady: f64, setpoint: f64) -> f64 {
    debug_assert!(setpoint > 0.0);
    100.0 * (setpoint - steady).abs() / setpoint
}

/// Relative excess of the series maximum over the steady state, in percent.
/// Not applicable when the steady state is zero.
pub fn overshoot(series: &QoSSeries, steady: f64) -> Option<f64> {
    if series.is_empty() || steady == 0.0 {
        return None;
    }
    let max = series.values.iter().fold(f64::NEG_INFINITY, |a, v| a.max(*v));
    Some(100.0 * ((max - steady) / steady).max(0.0))
}

/// Earliest time after which every sample stays within
/// `steady * (1 ± band_fraction)`; `None` when the series never settles.
pub fn settling_time(series: &QoSSeries, steady: f64, band_fraction: f64) -> Option<f64> {
    if series.is_empty() {
        return None;
    }
    let lo = steady * (1.0 - band_fraction);
    let hi = steady * (1.0 + band_fraction);
    let mut settle_idx = None;
    for i in (0..series.len()).rev() {
        let v = series.values[i];
        if v < lo || v > hi {
            break;
        }
        settle_idx = Some(i);
    }
    settle_idx.map(|i| series.timestamps[i])
}

#[derive(Debug, Clone, PartialEq)]
pub struct MetricsReport {
    pub attribute: QosAttribute,
    pub setpoint: f64,
    pub steady_state: f64,
    pub sse_percent: f64,
    /// None when not applicable (steady state of zero).
    pub overshoot_percent: Option<f64>,
    /// None when the series did not settle before the run ended.
    pub settling_time_seconds: Option<f64>,
    pub duration_seconds: f64,
    pub samples: usize,
}

impl MetricsReport {
    pub fn compute(
        series: &QoSSeries,
        setpoint: f64,
        tail_fraction: f64,
        band_fraction: f64,
    ) -> Result<Self, AnalyzerError> {
        let steady = steady_state(series, tail_fraction)?;
        Ok(Self {
            attribute: series.attribute,
            setpoint,
            steady_state: steady,
            sse_percent: sse(steady, setpoint),
            overshoot_percent: overshoot(series, steady),
            settling_time_seconds: settling_time(series, steady, band_fraction),
            duration_seconds: series.timestamps.last().copied().unwrap_or(0.0),
            samples: series.len(),
        })
    }

    pub fn to_text(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "attribute: {}", self.attribute);
        let _ = writeln!(out, "setpoint: {}", self.setpoint);
        let _ = writeln!(out, "steady_state: {}", self.steady_state);
        let _ = writeln!(out, "sse_percent: {}", self.sse_percent);
        match self.overshoot_percent {
            Some(o) => {
                let _ = writeln!(out, "overshoot_percent: {o}");
            }
            None => {
                let _ = writeln!(out, "overshoot_percent: not_applicable");
            }
        }
        match self.settling_time_seconds {
            Some(t) => {
                let _ = writeln!(out, "settling_time_seconds: {t}");
            }
            None => {
                let _ = writeln!(out, "settling_time_seconds: did_not_settle");
            }
        }
        let _ = writeln!(out, "duration_seconds: {}", self.duration_seconds);
        let _ = writeln!(out, "samples: {}", self.samples);
        out
    }

    pub fn parse(text: &str) -> Result<Self, AnalyzerError> {
        let mut fields: BTreeMap<&str, &str> = BTreeMap::new();
        for line in text.lines() {
            if line.trim().is_empty() {
                continue;
            }
            let (key, value) = line
                .split_once(": ")
                .ok_or_else(|| AnalyzerError::BadReportLine(line.to_string()))?;
            fields.insert(key, value);
        }
        let get = |key: &str| -> Result<&str, AnalyzerError> {
            fields
                .get(key)
                .copied()
                .ok_or_else(|| AnalyzerError::BadReportLine(format!("missing {key}")))
        };
        let num = |key: &str| -> Result<f64, AnalyzerError> {
            get(key)?
                .parse()
                .map_err(|_| AnalyzerError::BadReportLine(format!("bad number for {key}")))
        };
        let attribute = match get("attribute")? {
            "reliability" => QosAttribute::Reliability,
            "cost" => QosAttribute::Cost,
            other => return Err(AnalyzerError::BadReportLine(format!("bad attribute {other}"))),
        };
        let overshoot_percent = match get("overshoot_percent")? {
            "not_applicable" => None,
            v => Some(v.parse().map_err(|_| AnalyzerError::BadReportLine(v.into()))?),
        };
        let settling_time_seconds = match get("settling_time_seconds")? {
            "did_not_settle" => None,
            v => Some(v.parse().map_err(|_| AnalyzerError::BadReportLine(v.into()))?),
        };
        Ok(Self {
            attribute,
            setpoint: num("setpoint")?,
            steady_state: num("steady_state")?,
            sse_percent: num("sse_percent")?,
            overshoot_percent,
            settling_time_seconds,
            duration_seconds: num("duration_seconds")?,
            samples: num("samples")? as usize,
        })
    }
}

/// Files written by `emit`.
#[derive(Debug, Clone, PartialEq)]
pub struct EmittedFiles {
    pub report: PathBuf,
    pub series_csv: PathBuf,
    pub plot_svg: PathBuf,
}

/// Write the metrics report, the series CSV and the SVG plot into `out_dir`.
pub fn emit(
    report: &MetricsReport,
    series: &QoSSeries,
    out_dir: &Path,
    run_id: &str,
) -> Result<EmittedFiles, AnalyzerError> {
    std::fs::create_dir_all(out_dir)?;
    let report_path = out_dir.join(format!("report_{run_id}.txt"));
    std::fs::write(&report_path, report.to_text())?;

    let series_path = out_dir.join(format!("series_{run_id}.csv"));
    let mut csv = String::from("timestamp,value");
    for component in series.per_component.keys() {
        let _ = write!(csv, ",{component}");
    }
    csv.push('\n');
    for i in 0..series.len() {
        let _ = write!(csv, "{:.3},{}", series.timestamps[i], series.values[i]);
        for values in series.per_component.values() {
            let _ = write!(csv, ",{}", values[i]);
        }
        csv.push('\n');
    }
    std::fs::write(&series_path, csv)?;

    let plot_path = out_dir.join(format!("plot_{run_id}.svg"));
    std::fs::write(&plot_path, plot::render_svg(series, report.setpoint))?;

    Ok(EmittedFiles {
        report: report_path,
        series_csv: series_path,
        plot_svg: plot_path,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn series_of(values: &[f64]) -> QoSSeries {
        QoSSeries {
            attribute: QosAttribute::Reliability,
            timestamps: (1..=values.len()).map(|i| i as f64).collect(),
            values: values.to_vec(),
            per_component: BTreeMap::new(),
        }
    }

    #[test]
    fn steady_state_of_constant_series() {
        let s = series_of(&[0.82; 50]);
        assert_eq!(steady_state(&s, 0.1).unwrap(), 0.82);
    }

    #[test]
    fn steady_state_uses_tail_only() {
        let mut values = vec![0.2; 90];
        values.extend([0.82; 10]);
        let s = series_of(&values);
        assert!((steady_state(&s, 0.1).unwrap() - 0.82).abs() < 1e-12);
    }

    #[test]
    fn sse_formula_arithmetic() {
        assert_eq!(sse(0.90, 0.90), 0.0);
        let v = sse(0.82, 0.90);
        assert!((v - 100.0 * 0.08 / 0.9).abs() < 1e-9, "{v}");
        assert!((v - 8.888888888888888).abs() < 1e-9);
        assert!((sse(0.99, 0.90) - 10.0).abs() < 1e-9);
    }

    #[test]
    fn overshoot_reproduces_relative_max() {
        let mut values = vec![0.8; 99];
        values[10] = 0.8 * 1.1225;
        let s = series_of(&values);
        let steady = steady_state(&s, 0.1).unwrap();
        let o = overshoot(&s, steady).unwrap();
        assert!((o - 12.25).abs() < 1e-9, "{o}");
    }

    #[test]
    fn overshoot_zero_for_monotone_and_constant_series() {
        let s = series_of(&[0.5; 20]);
        assert_eq!(overshoot(&s, 0.5).unwrap(), 0.0);
        let rising: Vec<f64> = (0..20).map(|i| 0.5 + i as f64 * 0.01).collect();
        let s = series_of(&rising);
        let steady = steady_state(&s, 0.1).unwrap();
        // max occurs at the tail plateau, so the excess over the tail mean is tiny
        assert!(overshoot(&s, steady).unwrap() < 2.0);
    }

    #[test]
    fn settling_time_constant_series_is_first_timestamp() {
        let s = series_of(&[0.9; 10]);
        assert_eq!(settling_time(&s, 0.9, 0.02), Some(1.0));
    }

    #[test]
    fn settling_time_none_when_leaving_band_at_end() {
        let mut values = vec![0.9; 10];
        values[9] = 0.5;
        let s = series_of(&values);
        assert_eq!(settling_time(&s, 0.86, 0.02), None);
    }

    #[test]
    fn settling_monotone_in_band_fraction() {
        let values: Vec<f64> = (0..100)
            .map(|i| 0.9 * (1.0 - (-(i as f64) / 10.0).exp()))
            .collect();
        let s = series_of(&values);
        let steady = steady_state(&s, 0.1).unwrap();
        let mut last = f64::INFINITY;
        for band in [0.01, 0.02, 0.05, 0.1, 0.2] {
            let t = settling_time(&s, steady, band).unwrap();
            assert!(t <= last, "band {band}: {t} > {last}");
            last = t;
        }
    }

    #[test]
    fn report_round_trips_through_text() {
        let report = MetricsReport {
            attribute: QosAttribute::Reliability,
            setpoint: 0.9,
            steady_state: 0.886,
            sse_percent: 1.55,
            overshoot_percent: Some(12.25),
            settling_time_seconds: None,
            duration_seconds: 540.0,
            samples: 540,
        };
        let parsed = MetricsReport::parse(&report.to_text()).unwrap();
        assert_eq!(parsed, report);
    }

    #[test]
    fn empty_series_is_reported() {
        let s = series_of(&[]);
        assert!(matches!(
            steady_state(&s, 0.1),
            Err(AnalyzerError::EmptySeries)
        ));
        assert_eq!(overshoot(&s, 1.0), None);
        assert_eq!(settling_time(&s, 1.0, 0.02), None);
    }
}
