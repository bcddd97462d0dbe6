//! Patient model: one five-state discrete-time Markov chain per vital sign.
//!
//! Each chain holds a value drawn uniformly from the current state's range;
//! the value is resampled only when the chain moves, and the chain may move
//! only once `1/change_frequency + change_offset` seconds have elapsed since
//! the previous change. Reads are pure request/response: they never advance
//! the chain.

use crate::config::{check_matrix, ConfigError, VitalSignConfig};
use crate::rng::SimRng;
use std::collections::BTreeMap;
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum PatientError {
    #[error("unknown vital sign '{0}'")]
    UnknownSign(String),
}

/// States are ordered low to high as: high-risk-low, moderate-risk-low,
/// low-risk, moderate-risk-high, high-risk-high.
pub const STATE_COUNT: usize = 5;
const HEALTHY_STATE: usize = 2;

/// Gate tolerance so a change due exactly at a tick boundary fires there.
const TIME_EPSILON: f64 = 1e-9;

#[derive(Debug, Clone)]
pub struct VitalSignModel {
    pub sign_id: String,
    transition_matrix: [[f64; STATE_COUNT]; STATE_COUNT],
    state_ranges: [(f64, f64); STATE_COUNT],
    change_frequency: f64,
    change_offset: f64,
    current_state: usize,
    current_value: f64,
    last_change_time: f64,
}

impl VitalSignModel {
    fn from_config(
        cfg: &VitalSignConfig,
        matrix: [[f64; STATE_COUNT]; STATE_COUNT],
    ) -> Self {
        let mut state_ranges = [(0.0, 0.0); STATE_COUNT];
        for (i, r) in cfg.state_ranges.iter().enumerate() {
            state_ranges[i] = (r[0], r[1]);
        }
        let (lo, hi) = state_ranges[HEALTHY_STATE];
        Self {
            sign_id: cfg.name.clone(),
            transition_matrix: matrix,
            state_ranges,
            change_frequency: cfg.change_frequency,
            change_offset: cfg.change_offset,
            current_state: HEALTHY_STATE,
            current_value: (lo + hi) / 2.0,
            last_change_time: 0.0,
        }
    }

    pub fn current_state(&self) -> usize {
        self.current_state
    }

    pub fn current_value(&self) -> f64 {
        self.current_value
    }

    pub fn state_range(&self, state: usize) -> (f64, f64) {
        self.state_ranges[state]
    }

    /// Seconds that must elapse between consecutive state changes.
    pub fn change_period(&self) -> f64 {
        1.0 / self.change_frequency + self.change_offset
    }

    /// Unconditional one-step transition: sample the next state from the
    /// current row and resample the value in the new state's range.
    pub fn step(&mut self, rng: &mut SimRng) -> usize {
        let row = &self.transition_matrix[self.current_state];
        let next = rng.pick_weighted(row);
        self.current_state = next;
        let (lo, hi) = self.state_ranges[next];
        self.current_value = rng.uniform(lo, hi);
        next
    }

    /// Transition only if the change period has elapsed since the last change.
    /// Returns the new state index when a change happened.
    pub fn maybe_transition(&mut self, now: f64, rng: &mut SimRng) -> Option<usize> {
        debug_assert!(now + TIME_EPSILON >= self.last_change_time);
        if now - self.last_change_time + TIME_EPSILON < self.change_period() {
            return None;
        }
        self.last_change_time = now;
        Some(self.step(rng))
    }

    /// Pin the chain to a state for tests; the value moves to the range midpoint.
    pub fn force_state(&mut self, state: usize) {
        assert!(state < STATE_COUNT);
        self.current_state = state;
        let (lo, hi) = self.state_ranges[state];
        self.current_value = (lo + hi) / 2.0;
    }
}

/// Synthesize a stationary transition matrix from band occupancy
/// probabilities (p_low, p_mod, p_high): every row equals the target
/// stationary distribution, splitting the moderate and high bands evenly
/// between their two states.
pub fn matrix_from_band_probabilities(p: [f64; 3]) -> [[f64; STATE_COUNT]; STATE_COUNT] {
    let [p_low, p_mod, p_high] = p;
    let pi = [p_high / 2.0, p_mod / 2.0, p_low, p_mod / 2.0, p_high / 2.0];
    [pi; STATE_COUNT]
}

#[derive(Debug, Clone)]
pub struct Patient {
    signs: Vec<VitalSignModel>,
    by_id: BTreeMap<String, usize>,
}

impl Patient {
    /// Validate and load the patient section. `band_probabilities` supplies a
    /// fallback per sign (from the paired sensor's configuration) when the
    /// transition matrix is omitted.
    pub fn from_config(
        signs: &[VitalSignConfig],
        band_probabilities: &BTreeMap<String, [f64; 3]>,
    ) -> Result<Self, ConfigError> {
        let mut models = Vec::with_capacity(signs.len());
        let mut by_id = BTreeMap::new();
        for (i, cfg) in signs.iter().enumerate() {
            let path = format!("patient.vital_signs[{i}]");
            let matrix = match &cfg.transition_matrix {
                Some(rows) => {
                    check_matrix(&format!("{path}.transition_matrix"), rows)?;
                    let mut m = [[0.0; STATE_COUNT]; STATE_COUNT];
                    for (r, row) in rows.iter().enumerate() {
                        for (c, p) in row.iter().enumerate() {
                            m[r][c] = *p;
                        }
                    }
                    m
                }
                None => {
                    let bands = band_probabilities.get(&cfg.name).ok_or_else(|| {
                        ConfigError::invalid(
                            format!("{path}.transition_matrix"),
                            "missing, and no sensor risk_band_probabilities to synthesize from",
                        )
                    })?;
                    matrix_from_band_probabilities(*bands)
                }
            };
            by_id.insert(cfg.name.clone(), i);
            models.push(VitalSignModel::from_config(cfg, matrix));
        }
        Ok(Self { signs: models, by_id })
    }

    fn index_of(&self, sign_id: &str) -> Result<usize, PatientError> {
        self.by_id
            .get(sign_id)
            .copied()
            .ok_or_else(|| PatientError::UnknownSign(sign_id.to_string()))
    }

    /// Pure read of the current value; never advances the chain.
    pub fn current_value(&self, sign_id: &str) -> Result<f64, PatientError> {
        Ok(self.signs[self.index_of(sign_id)?].current_value())
    }

    pub fn maybe_transition(
        &mut self,
        sign_id: &str,
        now: f64,
        rng: &mut SimRng,
    ) -> Result<Option<usize>, PatientError> {
        let idx = self.index_of(sign_id)?;
        Ok(self.signs[idx].maybe_transition(now, rng))
    }

    /// Check every chain for a due transition, in configuration order.
    pub fn step_all(&mut self, now: f64, rng: &mut SimRng) {
        for sign in &mut self.signs {
            sign.maybe_transition(now, rng);
        }
    }

    pub fn sign(&self, sign_id: &str) -> Result<&VitalSignModel, PatientError> {
        Ok(&self.signs[self.index_of(sign_id)?])
    }

    pub fn sign_mut(&mut self, sign_id: &str) -> Result<&mut VitalSignModel, PatientError> {
        let idx = self.index_of(sign_id)?;
        Ok(&mut self.signs[idx])
    }

    pub fn sign_ids(&self) -> impl Iterator<Item = &str> {
        self.signs.iter().map(|s| s.sign_id.as_str())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sign_config(matrix: Option<Vec<Vec<f64>>>) -> VitalSignConfig {
        VitalSignConfig {
            name: "temperature".into(),
            change_frequency: 0.5,
            change_offset: 1.0,
            transition_matrix: matrix,
            state_ranges: vec![
                [30.0, 35.0],
                [35.0, 36.0],
                [36.0, 38.0],
                [38.0, 40.0],
                [40.0, 44.0],
            ],
        }
    }

    fn identity() -> Vec<Vec<f64>> {
        (0..5)
            .map(|i| (0..5).map(|j| if i == j { 1.0 } else { 0.0 }).collect())
            .collect()
    }

    fn patient(matrix: Option<Vec<Vec<f64>>>) -> Patient {
        Patient::from_config(&[sign_config(matrix)], &BTreeMap::new()).unwrap()
    }

    #[test]
    fn identity_matrix_never_changes_state() {
        let mut p = patient(Some(identity()));
        let mut rng = SimRng::new(1);
        for step in 0..100 {
            p.maybe_transition("temperature", step as f64 * 10.0, &mut rng)
                .unwrap();
            assert_eq!(p.sign("temperature").unwrap().current_state(), 2);
        }
    }

    #[test]
    fn deterministic_row_always_lands_on_index_two() {
        let rows: Vec<Vec<f64>> = (0..5).map(|_| vec![0.0, 0.0, 1.0, 0.0, 0.0]).collect();
        let mut p = patient(Some(rows));
        let mut rng = SimRng::new(2);
        let sign = p.sign_mut("temperature").unwrap();
        for start in 0..5 {
            sign.force_state(start);
            assert_eq!(sign.step(&mut rng), 2);
        }
    }

    #[test]
    fn uniform_rows_visit_all_states_evenly() {
        let rows: Vec<Vec<f64>> = (0..5).map(|_| vec![0.2; 5]).collect();
        let mut p = patient(Some(rows));
        let mut rng = SimRng::new(3);
        let sign = p.sign_mut("temperature").unwrap();
        let mut counts = [0u32; 5];
        for _ in 0..10_000 {
            counts[sign.step(&mut rng)] += 1;
        }
        for c in counts {
            assert!((c as i64 - 2000).abs() <= 150, "counts {counts:?}");
        }
    }

    #[test]
    fn value_stays_in_current_state_range() {
        let rows: Vec<Vec<f64>> = (0..5).map(|_| vec![0.2; 5]).collect();
        let mut p = patient(Some(rows));
        let mut rng = SimRng::new(4);
        let sign = p.sign_mut("temperature").unwrap();
        for _ in 0..1000 {
            let state = sign.step(&mut rng);
            let (lo, hi) = sign.state_range(state);
            let v = sign.current_value();
            assert!(v >= lo && v < hi, "value {v} outside [{lo}, {hi})");
        }
    }

    #[test]
    fn reads_are_pure() {
        let p = patient(Some(identity()));
        let a = p.current_value("temperature").unwrap();
        let b = p.current_value("temperature").unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn unknown_sign_is_an_error() {
        let p = patient(Some(identity()));
        assert_eq!(
            p.current_value("bogus").unwrap_err(),
            PatientError::UnknownSign("bogus".into())
        );
    }

    #[test]
    fn transition_waits_for_period_plus_offset() {
        // period 2 s + offset 1 s = 3 s between changes
        let mut p = patient(Some(identity()));
        let mut rng = SimRng::new(5);
        assert_eq!(p.maybe_transition("temperature", 0.0, &mut rng).unwrap(), None);
        assert_eq!(p.maybe_transition("temperature", 2.9, &mut rng).unwrap(), None);
        assert!(p.maybe_transition("temperature", 3.0, &mut rng).unwrap().is_some());
        // Clock restarts at the change.
        assert_eq!(p.maybe_transition("temperature", 5.9, &mut rng).unwrap(), None);
        assert!(p.maybe_transition("temperature", 6.0, &mut rng).unwrap().is_some());
    }

    #[test]
    fn change_spacing_invariant_holds_under_dense_polling() {
        let rows: Vec<Vec<f64>> = (0..5).map(|_| vec![0.2; 5]).collect();
        let mut p = patient(Some(rows));
        let mut rng = SimRng::new(6);
        let mut change_times = Vec::new();
        for tick in 0..10_000u64 {
            let now = tick as f64 * 0.1;
            if p.maybe_transition("temperature", now, &mut rng).unwrap().is_some() {
                change_times.push(now);
            }
        }
        assert!(change_times.len() > 100);
        for pair in change_times.windows(2) {
            assert!(pair[1] - pair[0] >= 3.0 - 1e-9);
        }
    }

    #[test]
    fn synthesized_matrix_is_stationary_at_band_probabilities() {
        let m = matrix_from_band_probabilities([0.7, 0.2, 0.1]);
        for row in m {
            assert!((row.iter().sum::<f64>() - 1.0).abs() < 1e-12);
            assert_eq!(row[2], 0.7);
            assert_eq!(row[1], 0.1);
            assert_eq!(row[3], 0.1);
            assert_eq!(row[0], 0.05);
            assert_eq!(row[4], 0.05);
        }
    }

    #[test]
    fn non_stochastic_row_rejected_with_path() {
        let mut rows = identity();
        rows[1] = vec![0.3, 0.3, 0.3, 0.0, 0.0];
        let err = Patient::from_config(&[sign_config(Some(rows))], &BTreeMap::new()).unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains("patient.vital_signs[0].transition_matrix[1]"), "{msg}");
        assert!(msg.contains("0.900000"), "{msg}");
    }

    #[test]
    fn seeded_replay_reproduces_values() {
        let rows: Vec<Vec<f64>> = (0..5).map(|_| vec![0.2; 5]).collect();
        let run = |seed: u64| -> Vec<f64> {
            let mut p = patient(Some(rows.clone()));
            let mut rng = SimRng::new(seed);
            (0..500)
                .map(|tick| {
                    p.step_all(tick as f64 * 0.1, &mut rng);
                    p.current_value("temperature").unwrap()
                })
                .collect()
        };
        assert_eq!(run(42), run(42));
        assert_ne!(run(42), run(43));
    }
}
