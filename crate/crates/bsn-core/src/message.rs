//! Wire protocol exchanged over the simulation bus.

use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use std::fmt;

/// Component status as reported in `Status` messages and the status log.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum StatusKind {
    Init,
    Running,
    Success,
    Fail,
}

impl StatusKind {
    pub fn as_str(self) -> &'static str {
        match self {
            StatusKind::Init => "init",
            StatusKind::Running => "running",
            StatusKind::Success => "success",
            StatusKind::Fail => "fail",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "init" => Some(StatusKind::Init),
            "running" => Some(StatusKind::Running),
            "success" => Some(StatusKind::Success),
            "fail" => Some(StatusKind::Fail),
            _ => None,
        }
    }
}

impl fmt::Display for StatusKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Lifecycle events of managed components.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EventKind {
    Activate,
    Deactivate,
}

impl EventKind {
    pub fn as_str(self) -> &'static str {
        match self {
            EventKind::Activate => "activate",
            EventKind::Deactivate => "deactivate",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "activate" => Some(EventKind::Activate),
            "deactivate" => Some(EventKind::Deactivate),
            _ => None,
        }
    }
}

impl fmt::Display for EventKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Risk classification band.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RiskLabel {
    Low,
    Moderate,
    High,
}

impl RiskLabel {
    pub fn as_str(self) -> &'static str {
        match self {
            RiskLabel::Low => "low",
            RiskLabel::Moderate => "moderate",
            RiskLabel::High => "high",
        }
    }

    /// Label for a risk percentage: low [0,20], moderate (20,65], high (65,100].
    pub fn from_percent(risk: f64) -> Self {
        if risk <= 20.0 {
            RiskLabel::Low
        } else if risk <= 65.0 {
            RiskLabel::Moderate
        } else {
            RiskLabel::High
        }
    }
}

impl fmt::Display for RiskLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Direction of an actuation clamp.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SaturationKind {
    SaturatedHigh,
    SaturatedLow,
}

/// QoS attribute driven by the managing system. Exactly one engine runs per execution.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum QosAttribute {
    Reliability,
    Cost,
}

impl QosAttribute {
    pub fn as_str(self) -> &'static str {
        match self {
            QosAttribute::Reliability => "reliability",
            QosAttribute::Cost => "cost",
        }
    }
}

impl fmt::Display for QosAttribute {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Log categories persisted by the knowledge repository.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum LogCategory {
    Adaptation,
    Status,
    Event,
    Uncertainty,
    EnergyStatus,
}

impl LogCategory {
    pub const ALL: [LogCategory; 5] = [
        LogCategory::Adaptation,
        LogCategory::Status,
        LogCategory::Event,
        LogCategory::Uncertainty,
        LogCategory::EnergyStatus,
    ];

    /// Lowercase name used in log file names.
    pub fn file_stem(self) -> &'static str {
        match self {
            LogCategory::Adaptation => "adaptation",
            LogCategory::Status => "status",
            LogCategory::Event => "event",
            LogCategory::Uncertainty => "uncertainty",
            LogCategory::EnergyStatus => "energystatus",
        }
    }

    /// Name of the category-specific payload column in the CSV header.
    pub fn payload_column(self) -> &'static str {
        match self {
            LogCategory::Adaptation => "frequency",
            LogCategory::Status => "status",
            LogCategory::Event => "event",
            LogCategory::Uncertainty => "noise_factor",
            LogCategory::EnergyStatus => "cost",
        }
    }
}

/// Window query sent by the strategy manager to the data-access component.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DataAccessRequestInfo {
    pub requester: String,
    pub category: LogCategory,
    pub component_id: String,
    /// Window size in records; must be at least 1.
    pub window: usize,
}

/// Tagged union of everything that travels over the bus.
#[derive(Debug, Clone, PartialEq)]
pub enum Message {
    SensorData {
        sensor_id: String,
        value: f64,
        risk_percent: f64,
        risk_label: RiskLabel,
        timestamp: f64,
    },
    Status {
        component_id: String,
        status: StatusKind,
        timestamp: f64,
    },
    Event {
        component_id: String,
        event: EventKind,
        timestamp: f64,
    },
    AdaptationCommand {
        component_id: String,
        frequency: f64,
        timestamp: f64,
    },
    Strategy {
        attribute: QosAttribute,
        /// Local setpoint per managed component (active sensors + hub).
        setpoints: BTreeMap<String, f64>,
        timestamp: f64,
    },
    Exception {
        component_id: String,
        kind: SaturationKind,
        attempted: f64,
        timestamp: f64,
    },
    DataAccessRequest(DataAccessRequestInfo),
    UncertaintyNoise {
        sensor_id: String,
        noise_factor: f64,
        timestamp: f64,
    },
    EnergyStatus {
        component_id: String,
        cost: f64,
        timestamp: f64,
    },
}
