//! Knowledge repository: the five append-only run logs and the data-access
//! window queries that feed the managing system.
//!
//! Each category is persisted as one CSV file per run, named
//! `<category>_<run_id>.csv` with a header row and the columns
//! `timestamp,component_id,<payload>`. Records stay in memory for window
//! queries; file buffers are flushed at tick boundaries.

use crate::message::{DataAccessRequestInfo, EventKind, LogCategory, StatusKind};
use std::collections::BTreeMap;
use std::fmt;
use std::fs::File;
use std::io::{self, BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum RepositoryError {
    #[error("payload {got} does not belong to the {expected:?} log")]
    PayloadMismatch { expected: LogCategory, got: String },
    #[error("timestamp {timestamp} precedes the last {category:?} record at {last}")]
    TimestampRegression {
        category: LogCategory,
        timestamp: f64,
        last: f64,
    },
    #[error("{file}:{line}: {reason}")]
    Parse {
        file: String,
        line: usize,
        reason: String,
    },
    #[error(transparent)]
    Io(#[from] io::Error),
}

/// Category-specific payload of a log record.
#[derive(Debug, Clone, PartialEq)]
pub enum Payload {
    /// Adaptation: commanded frequency in Hz.
    Frequency(f64),
    Status(StatusKind),
    Event(EventKind),
    /// Uncertainty: injected noise factor.
    Noise(f64),
    /// EnergyStatus: units consumed since the last logged measurement.
    Cost(f64),
}

impl Payload {
    pub fn category(&self) -> LogCategory {
        match self {
            Payload::Frequency(_) => LogCategory::Adaptation,
            Payload::Status(_) => LogCategory::Status,
            Payload::Event(_) => LogCategory::Event,
            Payload::Noise(_) => LogCategory::Uncertainty,
            Payload::Cost(_) => LogCategory::EnergyStatus,
        }
    }

    fn field(&self) -> String {
        match self {
            Payload::Frequency(f) => f.to_string(),
            Payload::Status(s) => s.as_str().to_string(),
            Payload::Event(e) => e.as_str().to_string(),
            Payload::Noise(n) => n.to_string(),
            Payload::Cost(c) => c.to_string(),
        }
    }

    fn parse(category: LogCategory, s: &str) -> Option<Payload> {
        match category {
            LogCategory::Adaptation => s.parse().ok().map(Payload::Frequency),
            LogCategory::Status => StatusKind::parse(s).map(Payload::Status),
            LogCategory::Event => EventKind::parse(s).map(Payload::Event),
            LogCategory::Uncertainty => s.parse().ok().map(Payload::Noise),
            LogCategory::EnergyStatus => s.parse().ok().map(Payload::Cost),
        }
    }
}

impl fmt::Display for Payload {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.field())
    }
}

/// One typed entry in a run log.
#[derive(Debug, Clone, PartialEq)]
pub struct LogRecord {
    pub category: LogCategory,
    /// Virtual seconds.
    pub timestamp: f64,
    pub component_id: String,
    pub payload: Payload,
}

impl LogRecord {
    pub fn new(timestamp: f64, component_id: &str, payload: Payload) -> Self {
        Self {
            category: payload.category(),
            timestamp,
            component_id: component_id.to_string(),
            payload,
        }
    }

    fn csv_line(&self) -> String {
        format!(
            "{:.3},{},{}",
            self.timestamp,
            self.component_id,
            self.payload.field()
        )
    }
}

fn csv_header(category: LogCategory) -> String {
    format!("timestamp,component_id,{}", category.payload_column())
}

/// File name of one category log for a run.
pub fn log_file_name(category: LogCategory, run_id: &str) -> String {
    format!("{}_{}.csv", category.file_stem(), run_id)
}

struct LogFile {
    writer: BufWriter<File>,
}

pub struct Repository {
    records: BTreeMap<LogCategory, Vec<LogRecord>>,
    /// (component, category) -> indices into `records[category]`, oldest first.
    index: BTreeMap<(String, LogCategory), Vec<usize>>,
    files: Option<BTreeMap<LogCategory, LogFile>>,
}

impl Repository {
    /// In-memory repository (no files written). Used by unit tests and dry runs.
    pub fn in_memory() -> Self {
        Self {
            records: LogCategory::ALL.iter().map(|c| (*c, Vec::new())).collect(),
            index: BTreeMap::new(),
            files: None,
        }
    }

    /// Repository persisting one CSV per category under `dir`.
    pub fn with_dir(dir: &Path, run_id: &str) -> Result<Self, RepositoryError> {
        std::fs::create_dir_all(dir)?;
        let mut files = BTreeMap::new();
        for category in LogCategory::ALL {
            let path = dir.join(log_file_name(category, run_id));
            let mut writer = BufWriter::new(File::create(&path)?);
            writeln!(writer, "{}", csv_header(category))?;
            files.insert(category, LogFile { writer });
        }
        let mut repo = Self::in_memory();
        repo.files = Some(files);
        Ok(repo)
    }

    /// Append a record; it becomes durable in memory immediately and reaches
    /// the category file on the next `flush`.
    pub fn append(&mut self, record: LogRecord) -> Result<(), RepositoryError> {
        if record.payload.category() != record.category {
            return Err(RepositoryError::PayloadMismatch {
                expected: record.category,
                got: record.payload.field(),
            });
        }
        let records = self.records.get_mut(&record.category).expect("all categories present");
        if let Some(last) = records.last() {
            if record.timestamp < last.timestamp {
                return Err(RepositoryError::TimestampRegression {
                    category: record.category,
                    timestamp: record.timestamp,
                    last: last.timestamp,
                });
            }
        }
        if let Some(files) = self.files.as_mut() {
            let file = files.get_mut(&record.category).expect("all categories present");
            writeln!(file.writer, "{}", record.csv_line())?;
        }
        let idx = records.len();
        records.push(record);
        let record = &records[idx];
        self.index
            .entry((record.component_id.clone(), record.category))
            .or_default()
            .push(idx);
        Ok(())
    }

    /// Up to `n` most recent records for a component/category, newest first.
    pub fn query_window(&self, component_id: &str, category: LogCategory, n: usize) -> Vec<LogRecord> {
        let Some(indices) = self.index.get(&(component_id.to_string(), category)) else {
            return Vec::new();
        };
        let records = &self.records[&category];
        indices
            .iter()
            .rev()
            .take(n)
            .map(|&i| records[i].clone())
            .collect()
    }

    /// Service entry point mirroring the DataAccessRequest message exchange.
    pub fn data_access(&self, request: &DataAccessRequestInfo) -> Vec<LogRecord> {
        self.query_window(&request.component_id, request.category, request.window)
    }

    /// Success/fail counts over the last `n` status records of a component.
    /// `init` and `running` records occupy window slots but count for neither.
    pub fn status_window_counts(&self, component_id: &str, n: usize) -> (usize, usize) {
        let Some(indices) = self.index.get(&(component_id.to_string(), LogCategory::Status)) else {
            return (0, 0);
        };
        let records = &self.records[&LogCategory::Status];
        let mut successes = 0;
        let mut fails = 0;
        for &i in indices.iter().rev().take(n) {
            match records[i].payload {
                Payload::Status(StatusKind::Success) => successes += 1,
                Payload::Status(StatusKind::Fail) => fails += 1,
                _ => {}
            }
        }
        (successes, fails)
    }

    /// Mean cost over the last `n` energy records of a component.
    pub fn energy_window_mean(&self, component_id: &str, n: usize) -> Option<f64> {
        let indices = self
            .index
            .get(&(component_id.to_string(), LogCategory::EnergyStatus))?;
        let records = &self.records[&LogCategory::EnergyStatus];
        let mut sum = 0.0;
        let mut count = 0usize;
        for &i in indices.iter().rev().take(n) {
            if let Payload::Cost(c) = records[i].payload {
                sum += c;
                count += 1;
            }
        }
        (count > 0).then(|| sum / count as f64)
    }

    pub fn records(&self, category: LogCategory) -> &[LogRecord] {
        &self.records[&category]
    }

    pub fn count(&self, category: LogCategory) -> usize {
        self.records[&category].len()
    }

    /// Flush buffered lines to the category files. Called at tick boundaries.
    pub fn flush(&mut self) -> Result<(), RepositoryError> {
        if let Some(files) = self.files.as_mut() {
            for file in files.values_mut() {
                file.writer.flush()?;
            }
        }
        Ok(())
    }
}

/// Parse one category log file produced by a run.
pub fn parse_log_file(path: &Path, category: LogCategory) -> Result<Vec<LogRecord>, RepositoryError> {
    let file = File::open(path).map_err(|e| RepositoryError::Parse {
        file: path.display().to_string(),
        line: 0,
        reason: format!("cannot open: {e}"),
    })?;
    let name = path.display().to_string();
    let mut records = Vec::new();
    for (lineno, line) in BufReader::new(file).lines().enumerate() {
        let line = line?;
        if lineno == 0 {
            let expected = csv_header(category);
            if line != expected {
                return Err(RepositoryError::Parse {
                    file: name,
                    line: 1,
                    reason: format!("bad header '{line}', expected '{expected}'"),
                });
            }
            continue;
        }
        if line.is_empty() {
            continue;
        }
        let parse_err = |reason: String| RepositoryError::Parse {
            file: name.clone(),
            line: lineno + 1,
            reason,
        };
        let mut fields = line.splitn(3, ',');
        let ts: f64 = fields
            .next()
            .and_then(|s| s.parse().ok())
            .ok_or_else(|| parse_err("bad timestamp".into()))?;
        let component = fields
            .next()
            .ok_or_else(|| parse_err("missing component_id".into()))?;
        let payload_field = fields
            .next()
            .ok_or_else(|| parse_err("missing payload".into()))?;
        let payload = Payload::parse(category, payload_field)
            .ok_or_else(|| parse_err(format!("bad {} payload '{payload_field}'", category.file_stem())))?;
        records.push(LogRecord::new(ts, component, payload));
    }
    Ok(records)
}

/// Path of one category log inside a run directory.
pub fn log_path(run_dir: &Path, category: LogCategory, run_id: &str) -> PathBuf {
    run_dir.join(log_file_name(category, run_id))
}
