//! Managed-system boundary: the probe exports telemetry into the knowledge
//! repository, the effector redirects adaptation commands to their targets.

use crate::message::Message;
use crate::repository::Payload;
use crate::runtime::{Ctx, Node};
use crate::topics;

/// Forwards status, event, energy and uncertainty traffic into the run logs.
pub struct ProbeNode;

impl Node for ProbeNode {
    fn on_message(&mut self, msg: &Message, ctx: &mut Ctx) {
        match msg {
            Message::Status {
                component_id,
                status,
                ..
            } => ctx.log(component_id, Payload::Status(*status)),
            Message::Event {
                component_id,
                event,
                ..
            } => ctx.log(component_id, Payload::Event(*event)),
            Message::EnergyStatus {
                component_id, cost, ..
            } => ctx.log(component_id, Payload::Cost(*cost)),
            Message::UncertaintyNoise {
                sensor_id,
                noise_factor,
                ..
            } => ctx.log(sensor_id, Payload::Noise(*noise_factor)),
            _ => {}
        }
    }
}

/// Receives `AdaptationCommand` messages from the enactor and republishes
/// them on the actuation topic the managed components listen to.
pub struct EffectorNode;

impl Node for EffectorNode {
    fn on_message(&mut self, msg: &Message, ctx: &mut Ctx) {
        if let Message::AdaptationCommand { .. } = msg {
            ctx.publish(topics::ACTUATION, msg.clone())
                .expect("actuation topic registered");
        }
    }
}
