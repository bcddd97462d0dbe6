//! Parametric QoS formulas composing per-component values into a global one.
//!
//! Reliability defaults to an AND-composition (product of component terms);
//! cost defaults to additive energy. The shape is a config hook so either can
//! be swapped for the other composition without touching callers.

use crate::message::QosAttribute;
use serde::{Deserialize, Serialize};
use std::collections::{BTreeMap, BTreeSet};
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum FormulaError {
    #[error("no value for component '{0}'")]
    MissingComponent(String),
    #[error("value {value} for '{component}' outside the {attribute} domain")]
    OutOfDomain {
        component: String,
        value: f64,
        attribute: QosAttribute,
    },
    #[error("empty component set")]
    EmptySet,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FormulaShape {
    ProductOfTerms,
    SumOfTerms,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ParametricFormula {
    pub attribute: QosAttribute,
    pub shape: FormulaShape,
}

impl ParametricFormula {
    pub fn default_for(attribute: QosAttribute) -> Self {
        let shape = match attribute {
            QosAttribute::Reliability => FormulaShape::ProductOfTerms,
            QosAttribute::Cost => FormulaShape::SumOfTerms,
        };
        Self { attribute, shape }
    }

    /// Evaluate over the components named in `active`, reading each value
    /// from `assign`. Every active component must be covered.
    pub fn eval(
        &self,
        assign: &BTreeMap<String, f64>,
        active: &BTreeSet<String>,
    ) -> Result<f64, FormulaError> {
        if active.is_empty() {
            return Err(FormulaError::EmptySet);
        }
        let mut product = 1.0;
        let mut sum = 0.0;
        for component in active {
            let value = *assign
                .get(component)
                .ok_or_else(|| FormulaError::MissingComponent(component.clone()))?;
            let in_domain = match self.attribute {
                QosAttribute::Reliability => (0.0..=1.0).contains(&value),
                QosAttribute::Cost => value >= 0.0,
            };
            if !in_domain {
                return Err(FormulaError::OutOfDomain {
                    component: component.clone(),
                    value,
                    attribute: self.attribute,
                });
            }
            product *= value;
            sum += value;
        }
        Ok(match self.shape {
            FormulaShape::ProductOfTerms => product,
            FormulaShape::SumOfTerms => sum,
        })
    }
}

/// Global reliability with the default AND-composition.
pub fn eval_global_reliability(
    assign: &BTreeMap<String, f64>,
    active: &BTreeSet<String>,
) -> Result<f64, FormulaError> {
    ParametricFormula::default_for(QosAttribute::Reliability).eval(assign, active)
}

/// Global cost with the default additive composition.
pub fn eval_global_cost(
    assign: &BTreeMap<String, f64>,
    active: &BTreeSet<String>,
) -> Result<f64, FormulaError> {
    ParametricFormula::default_for(QosAttribute::Cost).eval(assign, active)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn setup(values: &[(&str, f64)]) -> (BTreeMap<String, f64>, BTreeSet<String>) {
        let assign: BTreeMap<String, f64> =
            values.iter().map(|(k, v)| (k.to_string(), *v)).collect();
        let active = assign.keys().cloned().collect();
        (assign, active)
    }

    #[test]
    fn reliability_identity_at_one() {
        let (assign, active) = setup(&[("hub", 1.0), ("a", 1.0), ("b", 1.0)]);
        assert_eq!(eval_global_reliability(&assign, &active).unwrap(), 1.0);
    }

    #[test]
    fn reliability_annihilated_by_zero() {
        let (assign, active) = setup(&[("hub", 1.0), ("a", 0.0), ("b", 0.9)]);
        assert_eq!(eval_global_reliability(&assign, &active).unwrap(), 0.0);
    }

    #[test]
    fn reliability_product_of_components() {
        let mut values = vec![("hub", 0.95)];
        let sensors = ["s1", "s2", "s3", "s4", "s5", "s6"];
        for s in sensors {
            values.push((s, 0.9));
        }
        let (assign, active) = setup(&values);
        let got = eval_global_reliability(&assign, &active).unwrap();
        let expected = 0.95 * 0.9f64.powi(6);
        assert!((got - expected).abs() < 1e-12, "{got} vs {expected}");
        assert!((got - 0.50486).abs() < 1e-4);
    }

    #[test]
    fn cost_sums() {
        let (assign, active) = setup(&[("hub", 0.2), ("s1", 0.3)]);
        assert_eq!(eval_global_cost(&assign, &active).unwrap(), 0.5);
        let (assign, active) = setup(&[("hub", 0.0), ("s1", 0.0)]);
        assert_eq!(eval_global_cost(&assign, &active).unwrap(), 0.0);
    }

    #[test]
    fn deactivating_a_costly_sensor_lowers_cost() {
        let (assign, active) = setup(&[("hub", 0.2), ("s1", 0.3), ("s2", 0.4)]);
        let full = eval_global_cost(&assign, &active).unwrap();
        let mut fewer = active.clone();
        fewer.remove("s2");
        let reduced = eval_global_cost(&assign, &fewer).unwrap();
        assert!(reduced < full);
    }

    #[test]
    fn missing_component_is_an_error() {
        let (assign, mut active) = setup(&[("hub", 0.9)]);
        active.insert("ghost".into());
        assert_eq!(
            eval_global_reliability(&assign, &active).unwrap_err(),
            FormulaError::MissingComponent("ghost".into())
        );
    }

    #[test]
    fn out_of_domain_reliability_rejected() {
        let (assign, active) = setup(&[("hub", 1.2)]);
        assert!(matches!(
            eval_global_reliability(&assign, &active),
            Err(FormulaError::OutOfDomain { .. })
        ));
    }

    #[test]
    fn empty_set_is_an_error() {
        let assign = BTreeMap::new();
        let active = BTreeSet::new();
        assert_eq!(
            eval_global_reliability(&assign, &active).unwrap_err(),
            FormulaError::EmptySet
        );
    }
}
