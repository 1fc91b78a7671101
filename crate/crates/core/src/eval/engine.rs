use std::sync::Arc;

use super::compile::{compile, Compiled, Node};
use super::{
    scope_admits, EvalError, EvalErrorKind, EvalOptions, Export, ExportView, Instrumentation, NbrObservation,
    RepObservation, RoundContext,
};
use crate::builtins::{apply_local, hood_fold, Builtin, BuiltinError, LocalOp};
use crate::lang::{NbrScope, Program};
use crate::value::{Branch, DeviceId, LocalValue, NbrValue, Path, PathStep, Tag, Value, ValueTree};

/// A compiled program, reusable across devices and rounds.
#[derive(Debug, Clone)]
pub struct Evaluator {
    compiled: Arc<Compiled>,
    options: EvalOptions,
}

impl Evaluator {
    /// Compile `program`, desugaring it first if needed.
    pub fn new(program: &Program, options: EvalOptions) -> Self {
        Evaluator {
            compiled: Arc::new(compile(program)),
            options,
        }
    }

    pub fn options(&self) -> EvalOptions {
        self.options
    }

    pub fn eval_round(&self, ctx: &RoundContext) -> Result<Export, EvalError> {
        self.round(ctx, None)
    }

    /// Like [`eval_round`](Self::eval_round), also recording what every
    /// `nbr` and `rep` site observed.
    pub fn eval_round_instrumented(&self, ctx: &RoundContext) -> Result<(Export, Instrumentation), EvalError> {
        let mut instr = Instrumentation::default();
        let export = self.round(ctx, Some(&mut instr))?;
        Ok((export, instr))
    }

    fn round(&self, ctx: &RoundContext, instr: Option<&mut Instrumentation>) -> Result<Export, EvalError> {
        let (value, state) = self.pass(ctx, None, instr)?;
        let state = Arc::new(state);
        let broadcast = match self.options.export_view {
            ExportView::MidRound => state.clone(),
            ExportView::EndOfRound => Arc::new(self.pass(ctx, Some(&state), None)?.1),
        };
        Ok(Export {
            value,
            state,
            broadcast,
        })
    }

    fn pass(
        &self,
        ctx: &RoundContext,
        fixed: Option<&ValueTree>,
        instr: Option<&mut Instrumentation>,
    ) -> Result<(Value, ValueTree), EvalError> {
        let root = Cursor {
            prev: ctx.previous.as_deref(),
            fixed,
            nbrs: ctx
                .neighbour_exports
                .iter()
                .filter(|(id, _)| **id != ctx.self_id)
                .map(|(id, r)| (*id, &*r.tree))
                .collect(),
        };
        let mut engine = Engine {
            compiled: &self.compiled,
            ctx,
            path: Path::root(),
            depth: 0,
            max_depth: self.options.max_call_depth,
            instr,
        };
        let mut frame = vec![Value::Local(LocalValue::Null); self.compiled.main_slots];
        engine.eval(&self.compiled.main, &mut frame, &root)
    }
}

/// Aligned positions in the device's previous state, in the state computed
/// earlier this round (second pass only), and in each neighbour's export.
struct Cursor<'a> {
    prev: Option<&'a ValueTree>,
    fixed: Option<&'a ValueTree>,
    nbrs: Vec<(DeviceId, &'a ValueTree)>,
}

impl<'a> Cursor<'a> {
    fn map(&self, f: impl Fn(&'a ValueTree) -> Option<&'a ValueTree>) -> Cursor<'a> {
        Cursor {
            prev: self.prev.and_then(&f),
            fixed: self.fixed.and_then(&f),
            nbrs: self.nbrs.iter().filter_map(|(id, t)| f(t).map(|c| (*id, c))).collect(),
        }
    }

    fn step(&self, step: &PathStep) -> Cursor<'a> {
        self.map(|t| t.step(step))
    }
}

struct Engine<'a, 'i> {
    compiled: &'a Compiled,
    ctx: &'a RoundContext,
    path: Path,
    depth: usize,
    max_depth: usize,
    instr: Option<&'i mut Instrumentation>,
}

type Eval = Result<(Value, ValueTree), EvalError>;

impl<'a> Engine<'a, '_> {
    fn fail(&self, kind: EvalErrorKind) -> EvalError {
        EvalError {
            path: self.path.clone(),
            kind,
        }
    }

    fn under(&mut self, step: PathStep, node: &Node, frame: &mut [Value], cur: &Cursor<'a>) -> Eval {
        let next = cur.step(&step);
        self.path.push(step);
        let r = self.eval(node, frame, &next);
        self.path.pop();
        r
    }

    fn operands(
        &mut self,
        nodes: &[Node],
        frame: &mut [Value],
        cur: &Cursor<'a>,
    ) -> Result<(Vec<Value>, Vec<ValueTree>), EvalError> {
        let mut values = Vec::with_capacity(nodes.len());
        let mut trees = Vec::with_capacity(nodes.len());
        for (i, n) in nodes.iter().enumerate() {
            let (v, t) = self.under(PathStep::Child(i as u32), n, frame, cur)?;
            values.push(v);
            trees.push(t);
        }
        Ok((values, trees))
    }

    fn eval(&mut self, node: &Node, frame: &mut [Value], cur: &Cursor<'a>) -> Eval {
        match node {
            Node::Const(v) => leaf(Value::Local(v.clone())),
            Node::Slot(i) => leaf(frame[*i].clone()),
            Node::Global(name) => match self.ctx.constants.get(name).or_else(|| self.ctx.sensors.get(name)) {
                Some(v) => leaf(Value::Local(v.clone())),
                None => Err(self.fail(EvalErrorKind::Unbound(name.clone()))),
            },
            Node::Sensor(name) => match self.ctx.sensors.get(name) {
                Some(v) => leaf(Value::Local(v.clone())),
                None => Err(self.fail(EvalErrorKind::UnknownSensor(name.clone()))),
            },
            Node::Invalid(message, args) => {
                self.operands(args, frame, cur)?;
                Err(self.fail(EvalErrorKind::Invalid(message.clone())))
            }
            Node::Builtin(b, args) => {
                let (values, trees) = self.operands(args, frame, cur)?;
                let v = self.apply(*b, values).map_err(|k| self.fail(k))?;
                Ok((v.clone(), ValueTree::node(v, Tag::None, trees)))
            }
            Node::Construct(name, args) => {
                let (values, trees) = self.operands(args, frame, cur)?;
                let v = lift(self.ctx.self_id, &values, false, |xs| {
                    Ok(LocalValue::Constructor(name.to_string(), xs.to_vec()))
                })
                .map_err(|e| self.fail(e.into()))?;
                Ok((v.clone(), ValueTree::node(v, Tag::None, trees)))
            }
            Node::Call { func, site, args } => {
                let (values, mut trees) = self.operands(args, frame, cur)?;
                if self.depth >= self.max_depth {
                    return Err(self.fail(EvalErrorKind::Depth(self.max_depth)));
                }
                let f = &self.compiled.functions[*func];
                debug_assert_eq!(f.arity, values.len());
                let mut inner = values;
                inner.resize(f.slots, Value::Local(LocalValue::Null));
                let step = PathStep::Frame {
                    function: f.name.to_string(),
                    site: *site,
                };
                self.depth += 1;
                let r = self.under(step, &f.body, &mut inner, cur);
                self.depth -= 1;
                let (v, body) = r?;
                trees.push(body);
                Ok((v.clone(), ValueTree::node(v, Tag::Frame(f.name.clone()), trees)))
            }
            Node::If(c, t, e) => {
                let (cv, ct) = self.under(PathStep::Child(0), c, frame, cur)?;
                let branch = match &cv {
                    Value::Local(LocalValue::Bool(true)) => Branch::Then,
                    Value::Local(LocalValue::Bool(false)) => Branch::Else,
                    other => {
                        self.path.push(PathStep::Child(0));
                        let err = self.fail(EvalErrorKind::Condition(other.to_string()));
                        return Err(err);
                    }
                };
                let taken = if branch == Branch::Then { t } else { e };
                let (v, bt) = self.under(PathStep::Branch(branch), taken, frame, cur)?;
                Ok((v.clone(), ValueTree::node(v, Tag::Branch(branch), vec![ct, bt])))
            }
            Node::Nbr(scope, body) => {
                let (bv, bt) = self.under(PathStep::Child(0), body, frame, cur)?;
                let Value::Local(own) = bv else {
                    return Err(self.fail(EvalErrorKind::NbrField));
                };
                let field = self.gather(*scope, own.clone(), cur);
                if let Some(instr) = self.instr.as_deref_mut() {
                    instr.nbr.push(NbrObservation {
                        path: self.path.clone(),
                        scope: *scope,
                        own: own.clone(),
                        field: field.clone(),
                    });
                }
                Ok((
                    Value::Field(field),
                    ValueTree::node(Value::Local(own), Tag::None, vec![bt]),
                ))
            }
            Node::Rep { init, slot, body } => {
                let (iv, it) = self.under(PathStep::Child(0), init, frame, cur)?;
                let previous = cur.prev.map(|t| t.value.clone());
                if let Some(fixed) = cur.fixed {
                    // Second pass: expose the value this round already computed.
                    frame[*slot] = fixed.value.clone();
                    let (_, bt) = self.under(PathStep::Child(1), body, frame, cur)?;
                    let v = fixed.value.clone();
                    return Ok((v.clone(), ValueTree::node(v, Tag::None, vec![it, bt])));
                }
                frame[*slot] = previous.clone().unwrap_or(iv);
                let (v, bt) = self.under(PathStep::Child(1), body, frame, cur)?;
                if let Some(instr) = self.instr.as_deref_mut() {
                    instr.rep.push(RepObservation {
                        path: self.path.clone(),
                        previous,
                        value: v.clone(),
                    });
                }
                Ok((v.clone(), ValueTree::node(v, Tag::None, vec![it, bt])))
            }
        }
    }

    fn gather(&self, scope: NbrScope, own: LocalValue, cur: &Cursor<'a>) -> NbrValue {
        let mut field = NbrValue::singleton(self.ctx.self_id, own);
        for (id, t) in &cur.nbrs {
            if !scope_admits(self.ctx, scope, *id) {
                continue;
            }
            if let Value::Local(v) = &t.value {
                field.entries.insert(*id, v.clone());
            }
        }
        field
    }

    fn apply(&self, b: Builtin, args: Vec<Value>) -> Result<Value, EvalErrorKind> {
        match b {
            Builtin::Local(op) => Ok(lift(self.ctx.self_id, &args, op == LocalOp::Angle, |xs| {
                apply_local(op, xs)
            })?),
            Builtin::Fold(kind, policy) => match &args[0] {
                Value::Field(f) => Ok(Value::Local(hood_fold(kind, policy, f)?)),
                Value::Local(v) => Err(EvalErrorKind::NotAField("hood fold", v.to_string())),
            },
            Builtin::MyId => Ok(Value::Local(LocalValue::Device(self.ctx.self_id))),
            Builtin::NbrVector => {
                let me = self.ctx.self_id;
                let origin = self.ctx.position_of.get(&me).copied().unwrap_or((0.0, 0.0));
                let mut field = NbrValue::singleton(me, LocalValue::vec2(0.0, 0.0));
                for id in self.ctx.neighbour_exports.keys() {
                    if *id == me {
                        continue;
                    }
                    if let Some((x, y)) = self.ctx.position_of.get(id) {
                        field.entries.insert(*id, LocalValue::vec2(x - origin.0, y - origin.1));
                    }
                }
                Ok(Value::Field(field))
            }
        }
    }
}

fn leaf(v: Value) -> Eval {
    Ok((v.clone(), ValueTree::leaf(v)))
}

/// Apply `f` to local arguments, or pointwise when any argument is a
/// neighbouring value. Fields restrict the domain to the intersection of
/// their entries. With `lenient`, an entry whose application fails becomes
/// NaN instead of failing the whole operation.
fn lift(
    self_id: DeviceId,
    args: &[Value],
    lenient: bool,
    f: impl Fn(&[LocalValue]) -> Result<LocalValue, BuiltinError>,
) -> Result<Value, BuiltinError> {
    let fields: Vec<&NbrValue> = args
        .iter()
        .filter_map(|a| match a {
            Value::Field(f) => Some(f),
            Value::Local(_) => None,
        })
        .collect();
    if fields.is_empty() {
        let locals: Vec<LocalValue> = args.iter().map(|a| a.as_local().unwrap().clone()).collect();
        return Ok(Value::Local(f(&locals)?));
    }
    let mut out = NbrValue::singleton(self_id, LocalValue::Null);
    out.entries.clear();
    let mut scratch = Vec::with_capacity(args.len());
    'ids: for id in fields[0].entries.keys() {
        scratch.clear();
        for a in args {
            match a {
                Value::Local(v) => scratch.push(v.clone()),
                Value::Field(g) => match g.entries.get(id) {
                    Some(v) => scratch.push(v.clone()),
                    None => continue 'ids,
                },
            }
        }
        let v = match f(&scratch) {
            Ok(v) => v,
            Err(_) if lenient => LocalValue::Num(f64::NAN),
            Err(e) => return Err(e),
        };
        out.entries.insert(*id, v);
    }
    Ok(Value::Field(out))
}
