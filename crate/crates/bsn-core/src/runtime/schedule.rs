//! Node execution schedules.
//!
//! A scheduled activity with frequency `f` executes `floor`-accumulated
//! `f * tick_duration` times per tick; the fractional accumulator carries the
//! remainder, so over `T` virtual seconds the activation count is always
//! `floor(f*T)` or `ceil(f*T)`.

use crate::message::SaturationKind;
use thiserror::Error;

/// Accumulator tolerance: ten ticks of 0.1s at 1 Hz must yield exactly one
/// activation despite 0.1 not being representable in binary.
const ACC_EPSILON: f64 = 1e-9;

/// Actuation bounds for a frequency knob.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FreqBounds {
    pub min: f64,
    pub max: f64,
}

impl FreqBounds {
    pub fn new(min: f64, max: f64) -> Self {
        assert!(min > 0.0 && min < max, "need 0 < f_min < f_max");
        Self { min, max }
    }

    pub fn clamp(&self, f: f64) -> f64 {
        f.clamp(self.min, self.max)
    }

    pub fn contains(&self, f: f64) -> bool {
        (self.min..=self.max).contains(&f)
    }
}

/// Raised when an actuation request falls outside the knob's bounds. The
/// schedule is still set to the clamped value; the error carries what the
/// enactor needs to raise an `Exception` message.
#[derive(Debug, Clone, Error, PartialEq)]
#[error("frequency {requested} for '{component_id}' outside [{min}, {max}], clamped to {clamped}")]
pub struct SaturationError {
    pub component_id: String,
    pub requested: f64,
    pub clamped: f64,
    pub min: f64,
    pub max: f64,
    pub kind: SaturationKind,
}

/// Fractional-accumulator rate counter.
#[derive(Debug, Clone)]
pub struct RateAccumulator {
    frequency: f64,
    acc: f64,
}

impl RateAccumulator {
    pub fn new(frequency: f64) -> Self {
        assert!(frequency > 0.0, "frequency must be positive");
        Self { frequency, acc: 0.0 }
    }

    pub fn frequency(&self) -> f64 {
        self.frequency
    }

    /// Replace the frequency, preserving the fractional accumulator.
    pub fn set_frequency(&mut self, frequency: f64) {
        assert!(frequency > 0.0);
        self.frequency = frequency;
    }

    /// Advance by one tick of `dt` seconds; returns how many times the
    /// activity fires this tick.
    pub fn accrue(&mut self, dt: f64) -> u32 {
        self.acc += self.frequency * dt;
        let fires = (self.acc + ACC_EPSILON).floor();
        self.acc -= fires;
        fires as u32
    }
}

/// Execution schedule of one node activity.
#[derive(Debug, Clone)]
pub struct NodeSchedule {
    pub component_id: String,
    accumulator: RateAccumulator,
    /// Ticks to wait before the accumulator starts running.
    pub phase_offset: u64,
    pub bounds: FreqBounds,
    /// Frequency change staged by `set_frequency`, applied at the next tick boundary.
    pending: Option<f64>,
    pub initial_frequency: f64,
}

impl NodeSchedule {
    pub fn new(component_id: &str, frequency: f64, bounds: FreqBounds, phase_offset: u64) -> Self {
        Self {
            component_id: component_id.to_string(),
            accumulator: RateAccumulator::new(frequency),
            phase_offset,
            bounds,
            pending: None,
            initial_frequency: frequency,
        }
    }

    pub fn frequency(&self) -> f64 {
        self.accumulator.frequency()
    }

    /// Stage a frequency change for the next tick. Out-of-bounds requests are
    /// clamped and reported via `SaturationError`.
    pub fn request_frequency(&mut self, frequency: f64) -> Result<f64, SaturationError> {
        let previous = self.frequency();
        if self.bounds.contains(frequency) {
            self.pending = Some(frequency);
            Ok(previous)
        } else {
            let clamped = self.bounds.clamp(frequency);
            self.pending = Some(clamped);
            Err(SaturationError {
                component_id: self.component_id.clone(),
                requested: frequency,
                clamped,
                min: self.bounds.min,
                max: self.bounds.max,
                kind: if frequency > self.bounds.max {
                    SaturationKind::SaturatedHigh
                } else {
                    SaturationKind::SaturatedLow
                },
            })
        }
    }

    /// Apply a staged change; called by the engine at tick boundaries.
    pub(crate) fn apply_pending(&mut self) {
        if let Some(f) = self.pending.take() {
            self.accumulator.set_frequency(f);
        }
    }

    pub(crate) fn accrue(&mut self, tick: u64, dt: f64) -> u32 {
        if tick < self.phase_offset {
            0
        } else {
            self.accumulator.accrue(dt)
        }
    }
}
