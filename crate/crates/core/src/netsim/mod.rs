//! Discrete-event simulation of an asynchronous network running one
//! program, recording the resulting event structure.

mod events;
mod scenario;
mod topology;
mod trace;
mod world;

pub use events::{Event, EventError, EventId, EventStructure};
pub use scenario::{
    parse_literal, DelaySpec, DeviceScheduleSpec, EnvAction, EnvKind, LinkSpec, Literal, LocationMode, LocationSpec,
    PolicySpec, ScenarioConfig, ScenarioError, ScheduleSpec, SensorChange, SensorSpec, TopologySpec,
};
pub use topology::{random_connected_positions, Graph, Topology};
pub use trace::{render_events, RecordKind, Trace, TraceFormat, TraceRecord};
pub use world::{
    run, DeviceSnapshot, DeviceState, MailboxEntry, SimError, SimulationResult, StepOutcome, WakePolicy, World,
};
