//! Strategy enactor: the pluggable controller that turns local setpoints into
//! frequency commands.
//!
//! The default controller is proportional, `u(t) = Kp * e(t)`. Error signs
//! follow the engine: reliability uses `setpoint - measured` and adds the
//! control output to the frequency; cost uses `measured - setpoint` and
//! subtracts it, so a positive error (over budget) always reduces frequency.
//! Commands clamp to the component's actuation bounds; a clamped command
//! additionally raises an `Exception` toward the strategy manager.

use crate::manager::estimate::estimate_from_repository;
use crate::message::{EventKind, Message, QosAttribute, SaturationKind};
use crate::repository::Payload;
use crate::runtime::{Ctx, Node};
use crate::topics;
use std::collections::BTreeMap;

/// Parameters of the proportional control law.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ControllerParams {
    pub kp: f64,
    /// Fallback actuation bounds, used when a component has no schedule bounds.
    pub f_min: f64,
    pub f_max: f64,
}

/// Proportional control law. Exactly `Kp * e`.
pub fn control(error: f64, params: &ControllerParams) -> f64 {
    params.kp * error
}

/// Controller plug-in seam: lifecycle setup, one strategy application per
/// QoS engine, and event reception. Implementations return the desired
/// (pre-clamp) frequency for a component.
pub trait Controller {
    fn set_up(&mut self, params: ControllerParams, attribute: QosAttribute);
    fn apply_reliability_strategy(&mut self, component_id: &str, error: f64, current_freq: f64) -> f64;
    fn apply_cost_strategy(&mut self, component_id: &str, error: f64, current_freq: f64) -> f64;
    fn receive_event(&mut self, component_id: &str, event: EventKind);
}

/// The default stateless proportional controller.
#[derive(Debug, Default)]
pub struct ProportionalController {
    params: Option<ControllerParams>,
}

impl ProportionalController {
    fn params(&self) -> &ControllerParams {
        self.params.as_ref().expect("set_up called before use")
    }
}

impl Controller for ProportionalController {
    fn set_up(&mut self, params: ControllerParams, _attribute: QosAttribute) {
        self.params = Some(params);
    }

    fn apply_reliability_strategy(&mut self, _component_id: &str, error: f64, current_freq: f64) -> f64 {
        current_freq + control(error, self.params())
    }

    fn apply_cost_strategy(&mut self, _component_id: &str, error: f64, current_freq: f64) -> f64 {
        current_freq - control(error, self.params())
    }

    fn receive_event(&mut self, _component_id: &str, _event: EventKind) {}
}

pub struct EnactorNode {
    attribute: QosAttribute,
    stability_margin: f64,
    info_quant: usize,
    params: ControllerParams,
    controller: Box<dyn Controller>,
    /// Latest strategy's local setpoints.
    setpoints: Option<BTreeMap<String, f64>>,
}

impl EnactorNode {
    pub fn new(
        attribute: QosAttribute,
        stability_margin: f64,
        info_quant: usize,
        params: ControllerParams,
        mut controller: Box<dyn Controller>,
    ) -> Self {
        controller.set_up(params, attribute);
        Self {
            attribute,
            stability_margin,
            info_quant,
            params,
            controller,
            setpoints: None,
        }
    }

    pub fn with_default_controller(
        attribute: QosAttribute,
        stability_margin: f64,
        info_quant: usize,
        params: ControllerParams,
    ) -> Self {
        Self::new(
            attribute,
            stability_margin,
            info_quant,
            params,
            Box::new(ProportionalController::default()),
        )
    }

    /// Apply the stored strategy: compare each local setpoint against the
    /// freshly measured value and command a frequency change when the error
    /// leaves the dead-band.
    fn enact(&mut self, ctx: &mut Ctx) {
        let Some(setpoints) = self.setpoints.clone() else {
            return;
        };
        for (component_id, local_setpoint) in &setpoints {
            let Some(current_freq) = ctx.frequency_of(component_id) else {
                continue;
            };
            let measured = estimate_from_repository(
                self.attribute,
                &ctx.repository,
                component_id,
                self.info_quant,
                current_freq,
            )
            .value;

            let error = match self.attribute {
                QosAttribute::Reliability => local_setpoint - measured,
                QosAttribute::Cost => measured - local_setpoint,
            };
            if error.abs() <= local_setpoint.abs() * self.stability_margin {
                continue;
            }
            let desired = match self.attribute {
                QosAttribute::Reliability => {
                    self.controller
                        .apply_reliability_strategy(component_id, error, current_freq)
                }
                QosAttribute::Cost => {
                    self.controller
                        .apply_cost_strategy(component_id, error, current_freq)
                }
            };
            let bounds = ctx.bounds_of(component_id);
            let (f_min, f_max) = bounds
                .map(|b| (b.min, b.max))
                .unwrap_or((self.params.f_min, self.params.f_max));
            let commanded = desired.clamp(f_min, f_max);

            let now = ctx.now();
            ctx.publish(
                topics::ADAPTATION_COMMAND,
                Message::AdaptationCommand {
                    component_id: component_id.clone(),
                    frequency: commanded,
                    timestamp: now,
                },
            )
            .expect("adaptation_command topic registered");
            ctx.log(component_id, Payload::Frequency(commanded));

            if desired != commanded {
                let kind = if desired > f_max {
                    SaturationKind::SaturatedHigh
                } else {
                    SaturationKind::SaturatedLow
                };
                ctx.publish(
                    topics::EXCEPTION,
                    Message::Exception {
                        component_id: component_id.clone(),
                        kind,
                        attempted: desired,
                        timestamp: now,
                    },
                )
                .expect("exception topic registered");
            }
        }
    }
}

impl Node for EnactorNode {
    fn on_message(&mut self, msg: &Message, ctx: &mut Ctx) {
        match msg {
            Message::Strategy {
                attribute,
                setpoints,
                ..
            } if *attribute == self.attribute => {
                self.setpoints = Some(setpoints.clone());
            }
            Message::Event {
                component_id,
                event,
                ..
            } => {
                self.controller.receive_event(component_id, *event);
                if *event == EventKind::Activate {
                    // Reactivated components restart from their default
                    // parameters.
                    if let Some(initial) = ctx.initial_frequency_of(component_id) {
                        if ctx.frequency_of(component_id) != Some(initial) {
                            let now = ctx.now();
                            ctx.publish(
                                topics::ADAPTATION_COMMAND,
                                Message::AdaptationCommand {
                                    component_id: component_id.clone(),
                                    frequency: initial,
                                    timestamp: now,
                                },
                            )
                            .expect("adaptation_command topic registered");
                            ctx.log(component_id, Payload::Frequency(initial));
                        }
                    }
                    if let Some(setpoints) = &mut self.setpoints {
                        setpoints.remove(component_id);
                    }
                }
            }
            _ => {}
        }
    }

    fn on_activate(&mut self, _activity: usize, ctx: &mut Ctx) {
        self.enact(ctx);
    }
}
