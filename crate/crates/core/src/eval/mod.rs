//! One round of evaluation at one device.

mod compile;
mod engine;

use std::collections::BTreeMap;
use std::sync::Arc;

use thiserror::Error;

use crate::builtins::BuiltinError;
use crate::lang::{NbrScope, Program};
use crate::value::{vt_lookup, DeviceId, LocalValue, NbrValue, Path, Value, ValueTree};

pub use engine::Evaluator;

pub type LocationId = u32;
pub type Point = (f64, f64);

/// The newest export received from one neighbour.
#[derive(Debug, Clone, PartialEq)]
pub struct Received {
    pub tree: Arc<ValueTree>,
    pub received_at: f64,
}

/// Everything a device perceives when it fires.
#[derive(Debug, Clone)]
pub struct RoundContext {
    pub self_id: DeviceId,
    pub time: f64,
    pub sensors: BTreeMap<String, LocalValue>,
    pub neighbour_exports: BTreeMap<DeviceId, Received>,
    /// The device's own state tree from its previous round.
    pub previous: Option<Arc<ValueTree>>,
    pub location_of: BTreeMap<DeviceId, LocationId>,
    pub position_of: BTreeMap<DeviceId, Point>,
    pub constants: BTreeMap<String, LocalValue>,
}

impl RoundContext {
    /// A context with no sensors, neighbours or history; the device sits at
    /// the origin in location 0.
    pub fn new(self_id: DeviceId) -> Self {
        RoundContext {
            self_id,
            time: 0.0,
            sensors: BTreeMap::new(),
            neighbour_exports: BTreeMap::new(),
            previous: None,
            location_of: BTreeMap::from([(self_id, 0)]),
            position_of: BTreeMap::from([(self_id, (0.0, 0.0))]),
            constants: BTreeMap::new(),
        }
    }

    pub fn with_sensor(mut self, name: &str, value: LocalValue) -> Self {
        self.sensors.insert(name.to_string(), value);
        self
    }

    pub fn with_neighbour(mut self, id: DeviceId, tree: ValueTree) -> Self {
        self.neighbour_exports.insert(
            id,
            Received {
                tree: Arc::new(tree),
                received_at: self.time,
            },
        );
        self
    }

    pub fn with_previous(mut self, tree: Arc<ValueTree>) -> Self {
        self.previous = Some(tree);
        self
    }
}

/// Which value tree a device broadcasts after a round.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ExportView {
    /// Every `rep` site shows the value it computed in this round, and
    /// every `nbr` site is re-evaluated against those values. A neighbour
    /// reading `nbr{x}` of a `rep` variable therefore sees the sender's
    /// latest result.
    #[default]
    EndOfRound,
    /// Broadcast the tree as evaluated, where `nbr` sites inside a `rep`
    /// body hold values computed from the previous round's state.
    MidRound,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct EvalOptions {
    pub export_view: ExportView,
    pub max_call_depth: usize,
}

impl Default for EvalOptions {
    fn default() -> Self {
        EvalOptions {
            export_view: ExportView::EndOfRound,
            max_call_depth: 64,
        }
    }
}

/// The result of a round.
#[derive(Debug, Clone, PartialEq)]
pub struct Export {
    /// The round's value. It equals the root of `state` except when the
    /// program's main expression is an `nbr` site, whose tree node holds the
    /// local value shared with neighbours.
    pub value: Value,
    /// The evaluation tree, kept as the device's state for the next round.
    /// Its root is the round's value.
    pub state: Arc<ValueTree>,
    /// The tree sent to neighbours.
    pub broadcast: Arc<ValueTree>,
}

impl Export {
    pub fn root(&self) -> &Value {
        &self.value
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum EvalErrorKind {
    #[error("unknown sensor '{0}'")]
    UnknownSensor(String),
    #[error("unbound name '{0}'")]
    Unbound(String),
    #[error("{0}")]
    Invalid(String),
    #[error("if condition must be a local Boolean, found {0}")]
    Condition(String),
    #[error("nbr body must evaluate to a local value")]
    NbrField,
    #[error("{0} expects a neighbouring value, found {1}")]
    NotAField(&'static str, String),
    #[error("call depth limit of {0} exceeded")]
    Depth(usize),
    #[error(transparent)]
    Builtin(#[from] BuiltinError),
}

/// A runtime error, located by the path of the failing node.
#[derive(Debug, Clone, PartialEq, Error)]
#[error("at {path}: {kind}")]
pub struct EvalError {
    pub path: Path,
    pub kind: EvalErrorKind,
}

/// What an `nbr` site saw during a round.
#[derive(Debug, Clone, PartialEq)]
pub struct NbrObservation {
    pub path: Path,
    pub scope: NbrScope,
    pub own: LocalValue,
    pub field: NbrValue,
}

/// What a `rep` site saw during a round.
#[derive(Debug, Clone, PartialEq)]
pub struct RepObservation {
    pub path: Path,
    pub previous: Option<Value>,
    pub value: Value,
}

/// Per-site observations recorded by [`Evaluator::eval_round_instrumented`].
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Instrumentation {
    pub nbr: Vec<NbrObservation>,
    pub rep: Vec<RepObservation>,
}

/// Compile and evaluate in one step with default options.
pub fn eval_round(program: &Program, ctx: &RoundContext) -> Result<Export, EvalError> {
    Evaluator::new(program, EvalOptions::default()).eval_round(ctx)
}

/// The neighbouring value an `nbr` site at `path` produces: `own` for the
/// device itself plus every neighbour whose export has a local value at
/// `path` and passes the scope filter.
pub fn gather_nbr(ctx: &RoundContext, path: &Path, scope: NbrScope, own: LocalValue) -> NbrValue {
    let mut field = NbrValue::singleton(ctx.self_id, own);
    for (id, received) in &ctx.neighbour_exports {
        if *id == ctx.self_id || !scope_admits(ctx, scope, *id) {
            continue;
        }
        if let Some(Value::Local(v)) = vt_lookup(&received.tree, path) {
            field.entries.insert(*id, v.clone());
        }
    }
    field
}

/// The value a `rep` site at `path` had in the device's previous round.
pub fn rep_prev(ctx: &RoundContext, path: &Path) -> Option<Value> {
    ctx.previous.as_ref().and_then(|t| vt_lookup(t, path).cloned())
}

pub(crate) fn scope_admits(ctx: &RoundContext, scope: NbrScope, other: DeviceId) -> bool {
    match scope {
        NbrScope::All => true,
        NbrScope::Local => {
            let mine = ctx.location_of.get(&ctx.self_id);
            mine.is_some() && ctx.location_of.get(&other) == mine
        }
        NbrScope::Remote => ctx.location_of.get(&other) != ctx.location_of.get(&ctx.self_id),
    }
}
