//! Event structures: device activations, the neighbour relation between
//! them, and the causal order it generates.

use std::collections::{BTreeMap, BTreeSet};

use thiserror::Error;

use crate::value::{DeviceId, LocalValue, Value};

/// Index of an event in its [`EventStructure`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct EventId(pub u32);

impl std::fmt::Display for EventId {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "e{}", self.0)
    }
}

/// One activation of a device.
#[derive(Debug, Clone, PartialEq)]
pub struct Event {
    pub ordinal: EventId,
    pub device: DeviceId,
    /// Local time of the activation.
    pub time: f64,
    /// Sensor readings the round saw.
    pub sensors: BTreeMap<String, LocalValue>,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum EventError {
    #[error("unknown event {0}")]
    Unknown(EventId),
    #[error("the neighbour relation has a cycle through {0}")]
    Cycle(EventId),
}

/// Events, the neighbour relation between them and the value computed at
/// each (absent for rounds that failed).
#[derive(Debug, Clone, Default, PartialEq)]
pub struct EventStructure {
    pub events: Vec<Event>,
    /// `(from, to)`: `from`'s message was the newest from its device that
    /// `to` used.
    pub edges: Vec<(EventId, EventId)>,
    pub values: Vec<Option<Value>>,
    preds: Vec<Vec<EventId>>,
    succs: Vec<Vec<EventId>>,
}

impl EventStructure {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn len(&self) -> usize {
        self.events.len()
    }

    pub fn is_empty(&self) -> bool {
        self.events.is_empty()
    }

    /// Append an event together with its incoming neighbour edges.
    pub fn push(
        &mut self,
        device: DeviceId,
        time: f64,
        sensors: BTreeMap<String, LocalValue>,
        value: Option<Value>,
        preds: Vec<EventId>,
    ) -> EventId {
        let id = EventId(self.events.len() as u32);
        self.events.push(Event {
            ordinal: id,
            device,
            time,
            sensors,
        });
        self.values.push(value);
        self.succs.push(Vec::new());
        for p in &preds {
            self.edges.push((*p, id));
            if let Some(s) = self.succs.get_mut(p.0 as usize) {
                s.push(id);
            }
        }
        self.preds.push(preds);
        id
    }

    pub fn event(&self, e: EventId) -> Result<&Event, EventError> {
        self.events.get(e.0 as usize).ok_or(EventError::Unknown(e))
    }

    pub fn value(&self, e: EventId) -> Option<&Value> {
        self.values.get(e.0 as usize).and_then(|v| v.as_ref())
    }

    pub fn predecessors(&self, e: EventId) -> &[EventId] {
        &self.preds[e.0 as usize]
    }

    pub fn successors(&self, e: EventId) -> &[EventId] {
        &self.succs[e.0 as usize]
    }

    pub fn ids(&self) -> impl Iterator<Item = EventId> {
        (0..self.events.len() as u32).map(EventId)
    }

    /// Events of one device in order.
    pub fn device_events(&self, d: DeviceId) -> Vec<EventId> {
        self.events
            .iter()
            .filter(|e| e.device == d)
            .map(|e| e.ordinal)
            .collect()
    }

    /// The value at the last successful event of each device.
    pub fn final_values(&self) -> BTreeMap<DeviceId, Value> {
        let mut out = BTreeMap::new();
        for (e, v) in self.events.iter().zip(&self.values) {
            if let Some(v) = v {
                out.insert(e.device, v.clone());
            }
        }
        out
    }

    /// A topological order of the events, or the event on a cycle.
    pub fn topological_order(&self) -> Result<Vec<EventId>, EventError> {
        let n = self.events.len();
        let mut indegree: Vec<usize> = self.preds.iter().map(|p| p.len()).collect();
        let mut ready: BTreeSet<EventId> = self.ids().filter(|e| indegree[e.0 as usize] == 0).collect();
        let mut order = Vec::with_capacity(n);
        while let Some(e) = ready.pop_first() {
            order.push(e);
            for s in &self.succs[e.0 as usize] {
                let d = &mut indegree[s.0 as usize];
                *d -= 1;
                if *d == 0 {
                    ready.insert(*s);
                }
            }
        }
        if order.len() == n {
            Ok(order)
        } else {
            let stuck = self.ids().find(|e| indegree[e.0 as usize] > 0).unwrap();
            Err(EventError::Cycle(stuck))
        }
    }

    fn closure(&self, e: EventId, forward: bool) -> Result<BTreeSet<EventId>, EventError> {
        self.event(e)?;
        let mut seen = BTreeSet::new();
        let mut stack = vec![e];
        while let Some(x) = stack.pop() {
            let next = if forward {
                self.successors(x)
            } else {
                self.predecessors(x)
            };
            for n in next {
                if seen.insert(*n) {
                    stack.push(*n);
                }
            }
        }
        seen.remove(&e);
        Ok(seen)
    }

    /// Events strictly before `e` in the causal order.
    pub fn causal_past(&self, e: EventId) -> Result<BTreeSet<EventId>, EventError> {
        self.closure(e, false)
    }

    /// Events strictly after `e` in the causal order.
    pub fn causal_future(&self, e: EventId) -> Result<BTreeSet<EventId>, EventError> {
        self.closure(e, true)
    }

    /// Events neither before nor after `e` (and not `e` itself).
    pub fn concurrent(&self, e: EventId) -> Result<BTreeSet<EventId>, EventError> {
        let past = self.causal_past(e)?;
        let future = self.causal_future(e)?;
        Ok(self
            .ids()
            .filter(|x| *x != e && !past.contains(x) && !future.contains(x))
            .collect())
    }

    /// Whether `a` causally precedes or equals `b`.
    pub fn precedes_eq(&self, a: EventId, b: EventId) -> Result<bool, EventError> {
        Ok(a == b || self.causal_past(b)?.contains(&a))
    }
}
