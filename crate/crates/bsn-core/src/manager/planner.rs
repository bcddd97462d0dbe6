//! Strategy planning: derive per-component local setpoints from the global
//! setpoint by sweeping one shared delta over the parametric formula.
//!
//! Exhaustive per-component search is exponential in the component count, so
//! the planner perturbs every non-pinned component by the same delta
//! `d in {-offset, -offset+gain, ..., +offset}` and evaluates the global
//! formula. It selects the smallest |d| whose global value lands within the
//! stability margin of the setpoint, otherwise the d minimizing the distance
//! (flagged best-effort). Ties prefer the smaller signed d.

use crate::formula::{FormulaError, ParametricFormula};
use crate::message::QosAttribute;
use std::collections::{BTreeMap, BTreeSet};
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum PlanError {
    #[error("nothing to manage: active component set is empty")]
    NothingToManage,
    #[error(transparent)]
    Formula(#[from] FormulaError),
}

#[derive(Debug, Clone)]
pub struct PlanInput<'a> {
    pub formula: ParametricFormula,
    pub global_setpoint: f64,
    pub stability_margin: f64,
    /// Search half-width.
    pub offset: f64,
    /// Search step.
    pub gain: f64,
    /// Measured local values for every active component (hub included).
    pub measured: &'a BTreeMap<String, f64>,
    /// Components held at their measured value after a saturation exception.
    pub pinned: &'a BTreeSet<String>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PlanOutcome {
    pub delta: f64,
    pub local_setpoints: BTreeMap<String, f64>,
    pub achieved_global: f64,
    /// No candidate reached the margin; boundary delta returned.
    pub best_effort: bool,
}

fn clamp_local(attribute: QosAttribute, value: f64) -> f64 {
    match attribute {
        QosAttribute::Reliability => value.clamp(0.0, 1.0),
        QosAttribute::Cost => value.max(0.0),
    }
}

/// The delta grid `-offset + k*gain` for `k = 0..=floor(2*offset/gain)`.
pub fn delta_grid(offset: f64, gain: f64) -> Vec<f64> {
    let steps = (2.0 * offset / gain + 1e-9).floor() as i64;
    (0..=steps).map(|k| -offset + k as f64 * gain).collect()
}

pub fn plan_strategy(input: &PlanInput) -> Result<PlanOutcome, PlanError> {
    if input.measured.is_empty() {
        return Err(PlanError::NothingToManage);
    }
    let active: BTreeSet<String> = input.measured.keys().cloned().collect();
    let attribute = input.formula.attribute;
    let tolerance = input.global_setpoint * input.stability_margin;

    struct Candidate {
        delta: f64,
        locals: BTreeMap<String, f64>,
        global: f64,
        distance: f64,
        within: bool,
    }

    let mut best: Option<Candidate> = None;
    for delta in delta_grid(input.offset, input.gain) {
        let locals: BTreeMap<String, f64> = input
            .measured
            .iter()
            .map(|(id, measured)| {
                let target = if input.pinned.contains(id) {
                    *measured
                } else {
                    clamp_local(attribute, measured + delta)
                };
                (id.clone(), target)
            })
            .collect();
        let global = input.formula.eval(&locals, &active)?;
        let distance = (global - input.global_setpoint).abs();
        let candidate = Candidate {
            delta,
            locals,
            global,
            distance,
            within: distance <= tolerance,
        };
        let better = match &best {
            None => true,
            Some(current) => {
                if candidate.within != current.within {
                    candidate.within
                } else if candidate.within {
                    (candidate.delta.abs(), candidate.delta) < (current.delta.abs(), current.delta)
                } else {
                    (candidate.distance, candidate.delta.abs(), candidate.delta)
                        < (current.distance, current.delta.abs(), current.delta)
                }
            }
        };
        if better {
            best = Some(candidate);
        }
    }

    let best = best.expect("grid is never empty");
    Ok(PlanOutcome {
        delta: best.delta,
        local_setpoints: best.locals,
        achieved_global: best.global,
        best_effort: !best.within,
    })
}
