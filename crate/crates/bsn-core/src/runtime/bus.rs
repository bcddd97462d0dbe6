//! Topic-based publish/subscribe bus with per-subscriber FIFO inboxes.
//!
//! The bus itself never loses messages: publishing appends to every
//! subscriber's inbox and reports the subscriber count. Handler dispatch is
//! the engine's job, so publications from inside a handler are queued rather
//! than recursively dispatched.

use crate::message::Message;
use std::collections::{BTreeMap, VecDeque};
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum BusError {
    #[error("unknown topic '{0}'")]
    UnknownTopic(String),
    #[error("topic '{0}' already registered")]
    DuplicateTopic(String),
}

/// Handle returned by `subscribe`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Subscription {
    pub topic: String,
    pub node_id: String,
}

#[derive(Debug, Default)]
pub struct Bus {
    /// topic -> subscriber node indices, in subscription order.
    topics: BTreeMap<String, Vec<usize>>,
    /// node index -> FIFO inbox.
    inboxes: Vec<VecDeque<Message>>,
}

impl Bus {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn register_topic(&mut self, name: &str) -> Result<(), BusError> {
        if self.topics.contains_key(name) {
            return Err(BusError::DuplicateTopic(name.to_string()));
        }
        self.topics.insert(name.to_string(), Vec::new());
        Ok(())
    }

    pub fn has_topic(&self, name: &str) -> bool {
        self.topics.contains_key(name)
    }

    pub(crate) fn add_node(&mut self) -> usize {
        self.inboxes.push(VecDeque::new());
        self.inboxes.len() - 1
    }

    pub(crate) fn subscribe(&mut self, topic: &str, node: usize) -> Result<(), BusError> {
        let subs = self
            .topics
            .get_mut(topic)
            .ok_or_else(|| BusError::UnknownTopic(topic.to_string()))?;
        if !subs.contains(&node) {
            subs.push(node);
        }
        Ok(())
    }

    /// Append `msg` to every subscriber inbox; returns the subscriber count.
    pub fn publish(&mut self, topic: &str, msg: Message) -> Result<usize, BusError> {
        let subs = self
            .topics
            .get(topic)
            .ok_or_else(|| BusError::UnknownTopic(topic.to_string()))?;
        for &node in subs {
            self.inboxes[node].push_back(msg.clone());
        }
        Ok(subs.len())
    }

    pub(crate) fn inbox_len(&self, node: usize) -> usize {
        self.inboxes[node].len()
    }

    pub(crate) fn pop_inbox(&mut self, node: usize) -> Option<Message> {
        self.inboxes[node].pop_front()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::message::StatusKind;

    fn status_msg() -> Message {
        Message::Status {
            component_id: "oximeter".into(),
            status: StatusKind::Success,
            timestamp: 0.0,
        }
    }

    #[test]
    fn publish_with_no_subscribers_drops() {
        let mut bus = Bus::new();
        bus.register_topic("status").unwrap();
        assert_eq!(bus.publish("status", status_msg()).unwrap(), 0);
    }

    #[test]
    fn publish_counts_subscribers_and_fans_out() {
        let mut bus = Bus::new();
        bus.register_topic("status").unwrap();
        let a = bus.add_node();
        let b = bus.add_node();
        let c = bus.add_node();
        bus.subscribe("status", a).unwrap();
        bus.subscribe("status", b).unwrap();
        bus.subscribe("status", c).unwrap();
        assert_eq!(bus.publish("status", status_msg()).unwrap(), 3);
        for n in [a, b, c] {
            assert_eq!(bus.inbox_len(n), 1);
        }
    }

    #[test]
    fn topic_isolation() {
        let mut bus = Bus::new();
        bus.register_topic("status").unwrap();
        bus.register_topic("event").unwrap();
        let a = bus.add_node();
        bus.subscribe("status", a).unwrap();
        bus.publish("event", status_msg()).unwrap();
        assert_eq!(bus.inbox_len(a), 0);
    }

    #[test]
    fn fifo_per_subscriber() {
        let mut bus = Bus::new();
        bus.register_topic("status").unwrap();
        let a = bus.add_node();
        bus.subscribe("status", a).unwrap();
        for i in 0..5 {
            bus.publish(
                "status",
                Message::Status {
                    component_id: format!("c{i}"),
                    status: StatusKind::Success,
                    timestamp: i as f64,
                },
            )
            .unwrap();
        }
        for i in 0..5 {
            match bus.pop_inbox(a).unwrap() {
                Message::Status { component_id, .. } => assert_eq!(component_id, format!("c{i}")),
                other => panic!("unexpected {other:?}"),
            }
        }
    }

    #[test]
    fn unknown_topic_is_an_error() {
        let mut bus = Bus::new();
        assert_eq!(
            bus.publish("nope", status_msg()).unwrap_err(),
            BusError::UnknownTopic("nope".into())
        );
    }
}
