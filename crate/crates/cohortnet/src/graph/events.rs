use std::collections::HashMap;

use super::grid::Day;
use super::ids::NodeId;

/// One undirected friendship event. Endpoints are stored with `u < v`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct EdgeEvent {
    pub u: NodeId,
    pub v: NodeId,
    pub t: Day,
}

impl EdgeEvent {
    /// Canonicalizes endpoint order; returns None for a self-loop.
    pub fn new(a: NodeId, b: NodeId, t: Day) -> Option<Self> {
        match a.cmp(&b) {
            std::cmp::Ordering::Less => Some(EdgeEvent { u: a, v: b, t }),
            std::cmp::Ordering::Greater => Some(EdgeEvent { u: b, v: a, t }),
            std::cmp::Ordering::Equal => None,
        }
    }
}

/// Append-ordered event stream after ingest: sorted by `(t, u, v)`, one event
/// per node pair (the earliest observation wins).
#[derive(Debug, Default, Clone)]
pub struct TemporalEdgeList {
    events: Vec<EdgeEvent>,
}

impl TemporalEdgeList {
    /// Sorts, then collapses duplicate pairs to their earliest timestamp.
    pub fn from_events(mut events: Vec<EdgeEvent>) -> Self {
        events.sort_unstable_by_key(|e| (e.t, e.u, e.v));
        let mut seen: HashMap<(NodeId, NodeId), ()> =
            HashMap::with_capacity(events.len());
        events.retain(|e| seen.insert((e.u, e.v), ()).is_none());
        TemporalEdgeList { events }
    }

    pub fn events(&self) -> &[EdgeEvent] {
        &self.events
    }

    pub fn len(&self) -> usize {
        self.events.len()
    }

    pub fn is_empty(&self) -> bool {
        self.events.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = &EdgeEvent> {
        self.events.iter()
    }
}
