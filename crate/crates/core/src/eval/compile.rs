//! Lowering of a core program into a slot-resolved tree the engine walks.

use std::collections::HashMap;
use std::sync::Arc;

use crate::builtins::Builtin;
use crate::lang::{desugar, is_constructor_name, Expr, ExprKind, NbrScope, Program};
use crate::value::LocalValue;

#[derive(Debug, Clone)]
pub(crate) enum Node {
    Const(LocalValue),
    Slot(usize),
    /// A free name: resolved against the round's constants table.
    Global(String),
    Sensor(String),
    Builtin(Builtin, Vec<Node>),
    Construct(Arc<str>, Vec<Node>),
    Call {
        func: usize,
        site: u32,
        args: Vec<Node>,
    },
    If(Box<Node>, Box<Node>, Box<Node>),
    Nbr(NbrScope, Box<Node>),
    Rep {
        init: Box<Node>,
        slot: usize,
        body: Box<Node>,
    },
    /// A construct that cannot run; raises `message` when reached. Its
    /// operands are still evaluated first so error paths stay accurate.
    Invalid(String, Vec<Node>),
}

#[derive(Debug, Clone)]
pub(crate) struct CompiledFn {
    pub name: Arc<str>,
    pub arity: usize,
    pub slots: usize,
    pub body: Node,
}

#[derive(Debug, Clone)]
pub(crate) struct Compiled {
    pub functions: Vec<CompiledFn>,
    pub main: Node,
    pub main_slots: usize,
}

pub(crate) fn compile(program: &Program) -> Compiled {
    let core;
    let program = if program.is_core() {
        program
    } else {
        core = desugar(program);
        &core
    };
    let index: HashMap<&str, usize> = program
        .functions
        .iter()
        .enumerate()
        .map(|(i, f)| (f.name.as_str(), i))
        .collect();
    let mut c = Compiler {
        index: &index,
        arities: program.functions.iter().map(|f| f.params.len()).collect(),
        site: 0,
    };
    let mut functions = Vec::with_capacity(program.functions.len());
    for f in &program.functions {
        let mut scope = Scope::new(&f.params);
        let body = c.expr(&f.body, &mut scope);
        functions.push(CompiledFn {
            name: Arc::from(f.name.as_str()),
            arity: f.params.len(),
            slots: scope.max,
            body,
        });
    }
    let mut scope = Scope::new(&[]);
    let main = c.expr(&program.main, &mut scope);
    Compiled {
        functions,
        main,
        main_slots: scope.max,
    }
}

struct Scope {
    names: Vec<String>,
    max: usize,
}

impl Scope {
    fn new(params: &[String]) -> Self {
        Scope {
            names: params.to_vec(),
            max: params.len(),
        }
    }

    fn lookup(&self, name: &str) -> Option<usize> {
        self.names.iter().rposition(|n| n == name)
    }

    fn push(&mut self, name: &str) -> usize {
        self.names.push(name.to_string());
        self.max = self.max.max(self.names.len());
        self.names.len() - 1
    }

    fn pop(&mut self) {
        self.names.pop();
    }
}

struct Compiler<'p> {
    index: &'p HashMap<&'p str, usize>,
    arities: Vec<usize>,
    site: u32,
}

impl Compiler<'_> {
    fn exprs(&mut self, es: &[Expr], scope: &mut Scope) -> Vec<Node> {
        es.iter().map(|e| self.expr(e, scope)).collect()
    }

    fn expr(&mut self, e: &Expr, scope: &mut Scope) -> Node {
        match &e.kind {
            ExprKind::Lit(v) => Node::Const(v.clone()),
            ExprKind::Var(x) => match scope.lookup(x) {
                Some(slot) => Node::Slot(slot),
                None => Node::Global(x.clone()),
            },
            ExprKind::Call(name, args) => {
                let nodes = self.exprs(args, scope);
                if let Some(&func) = self.index.get(name.as_str()) {
                    let site = self.site;
                    self.site += 1;
                    if self.arities[func] != nodes.len() {
                        return Node::Invalid(
                            format!(
                                "'{}' takes {} argument(s), {} given",
                                name,
                                self.arities[func],
                                nodes.len()
                            ),
                            nodes,
                        );
                    }
                    return Node::Call {
                        func,
                        site,
                        args: nodes,
                    };
                }
                if let Some(b) = Builtin::lookup(name, nodes.len()) {
                    if b.arity() != nodes.len() {
                        return Node::Invalid(
                            format!(
                                "built-in '{}' takes {} argument(s), {} given",
                                name,
                                b.arity(),
                                nodes.len()
                            ),
                            nodes,
                        );
                    }
                    return Node::Builtin(b, nodes);
                }
                if is_constructor_name(name) {
                    return Node::Construct(Arc::from(name.as_str()), nodes);
                }
                if nodes.is_empty() {
                    return Node::Sensor(name.clone());
                }
                Node::Invalid(format!("unknown function '{}'", name), nodes)
            }
            ExprKind::If(c, t, f) => Node::If(
                Box::new(self.expr(c, scope)),
                Box::new(self.expr(t, scope)),
                Box::new(self.expr(f, scope)),
            ),
            ExprKind::Nbr(scope_kind, body) => Node::Nbr(*scope_kind, Box::new(self.expr(body, scope))),
            ExprKind::Rep { inits, params, bodies } => {
                // Programs are desugared before compilation, so exactly one
                // of each is present.
                let init = self.expr(&inits[0], scope);
                let slot = scope.push(&params[0]);
                let body = self.expr(&bodies[0], scope);
                scope.pop();
                Node::Rep {
                    init: Box::new(init),
                    slot,
                    body: Box::new(body),
                }
            }
            ExprKind::Let(..) | ExprKind::TupleLit(_) => {
                unreachable!("compile runs on desugared programs")
            }
        }
    }
}
