//! Simulation traces and their two output formats.
//!
//! Line records are tab-separated: `seq kind device time payload`, with
//! `-` for a missing device and the time printed to six decimals. Kinds are
//! `fire` (payload: event id and root value), `fail` (event id and the
//! diagnostic), `env` (the action) and `delivery` (sender and its event id).
//! Neighbour edges come only from received messages; a device's own previous
//! round is never an edge. With the event dump enabled, `event`, `edge` and
//! `export` lines follow the trace.

use std::fmt::Write as _;

use super::events::{EventId, EventStructure};
use crate::value::{encode_tree, encode_value, DeviceId, ValueTree};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RecordKind {
    Fire,
    Fail,
    Env,
    Delivery,
}

impl RecordKind {
    pub fn as_str(self) -> &'static str {
        match self {
            RecordKind::Fire => "fire",
            RecordKind::Fail => "fail",
            RecordKind::Env => "env",
            RecordKind::Delivery => "delivery",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TraceRecord {
    pub seq: u64,
    pub kind: RecordKind,
    pub device: Option<DeviceId>,
    pub time: f64,
    pub event: Option<EventId>,
    pub payload: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum TraceFormat {
    /// Human-readable lines.
    #[default]
    Text,
    /// Tab-separated line records.
    Records,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct Trace {
    pub records: Vec<TraceRecord>,
}

impl Trace {
    pub(crate) fn push(
        &mut self,
        kind: RecordKind,
        device: Option<DeviceId>,
        time: f64,
        event: Option<EventId>,
        payload: String,
    ) {
        let seq = self.records.len() as u64;
        self.records.push(TraceRecord {
            seq,
            kind,
            device,
            time,
            event,
            payload,
        });
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn of_kind(&self, kind: RecordKind) -> impl Iterator<Item = &TraceRecord> {
        self.records.iter().filter(move |r| r.kind == kind)
    }

    pub fn render(&self, format: TraceFormat) -> String {
        let mut out = String::new();
        for r in &self.records {
            let device = r.device.map(|d| d.0.to_string()).unwrap_or_else(|| "-".into());
            match format {
                TraceFormat::Records => {
                    let _ = writeln!(
                        out,
                        "{}\t{}\t{}\t{:.6}\t{}",
                        r.seq,
                        r.kind.as_str(),
                        device,
                        r.time,
                        r.payload
                    );
                }
                TraceFormat::Text => {
                    let _ = writeln!(
                        out,
                        "[{:>5}] t={:<12.6} {:<8} device {:<4} {}",
                        r.seq,
                        r.time,
                        r.kind.as_str(),
                        device,
                        r.payload
                    );
                }
            }
        }
        out
    }
}

/// `event`, `edge` and optional `export` lines for an event structure.
pub fn render_events(
    es: &EventStructure,
    exports: &[Option<std::sync::Arc<ValueTree>>],
    format: TraceFormat,
) -> String {
    let mut out = String::new();
    for e in &es.events {
        let value = es.value(e.ordinal).map(encode_value).unwrap_or_else(|| "failed".into());
        match format {
            TraceFormat::Records => {
                let _ = writeln!(out, "event\t{}\t{}\t{:.6}\t{}", e.ordinal, e.device.0, e.time, value);
            }
            TraceFormat::Text => {
                let _ = writeln!(
                    out,
                    "event {} at device {} t={:.6}: {}",
                    e.ordinal, e.device.0, e.time, value
                );
            }
        }
    }
    for (a, b) in &es.edges {
        match format {
            TraceFormat::Records => {
                let _ = writeln!(out, "edge\t{}\t{}", a, b);
            }
            TraceFormat::Text => {
                let _ = writeln!(out, "edge {} ~> {}", a, b);
            }
        }
    }
    for (i, tree) in exports.iter().enumerate() {
        if let Some(tree) = tree {
            match format {
                TraceFormat::Records => {
                    let _ = writeln!(out, "export\te{}\t{}", i, encode_tree(tree));
                }
                TraceFormat::Text => {
                    let _ = writeln!(out, "export of e{}: {}", i, encode_tree(tree));
                }
            }
        }
    }
    out
}
