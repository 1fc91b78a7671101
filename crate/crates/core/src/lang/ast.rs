//! Abstract syntax of field-calculus programs.
//!
//! Equality on [`Expr`] is *structural*: source positions are carried for
//! diagnostics but never take part in comparisons, so a program reparsed from
//! its pretty-printed form compares equal to the original.

use std::fmt;

use crate::value::LocalValue;

/// 1-based line/column of the first character of a syntax node.
#[derive(Debug, Clone, Copy, Default, PartialOrd, Ord, PartialEq, Eq, Hash)]
pub struct SourcePos {
    pub line: u32,
    pub column: u32,
}

impl SourcePos {
    pub fn new(line: u32, column: u32) -> Self {
        SourcePos { line, column }
    }
}

impl fmt::Display for SourcePos {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}", self.line, self.column)
    }
}

/// Which neighbours an `nbr` construct talks to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum NbrScope {
    /// `nbr`: every neighbour.
    All,
    /// `nbrLocal`: neighbours at the same location.
    Local,
    /// `nbrRemote`: neighbours at a different location.
    Remote,
}

impl NbrScope {
    pub fn keyword(self) -> &'static str {
        match self {
            NbrScope::All => "nbr",
            NbrScope::Local => "nbrLocal",
            NbrScope::Remote => "nbrRemote",
        }
    }
}

#[derive(Debug, Clone)]
pub struct Expr {
    pub kind: ExprKind,
    pub pos: SourcePos,
}

#[derive(Debug, Clone, PartialEq)]
pub enum ExprKind {
    Var(String),
    Lit(LocalValue),
    /// Function application. Infix and prefix operators are calls whose name
    /// is the operator symbol (`+`, `==`, `!`, ...); constructor applications
    /// such as `Tuple(1, 2)` are calls to the capitalised name.
    Call(String, Vec<Expr>),
    If(Box<Expr>, Box<Expr>, Box<Expr>),
    Nbr(NbrScope, Box<Expr>),
    /// `rep (inits) { (params) => bodies }`. Core form has exactly one of each.
    Rep {
        inits: Vec<Expr>,
        params: Vec<String>,
        bodies: Vec<Expr>,
    },
    Let(String, Box<Expr>, Box<Expr>),
    TupleLit(Vec<Expr>),
}

impl PartialEq for Expr {
    fn eq(&self, other: &Self) -> bool {
        self.kind == other.kind
    }
}

impl Expr {
    pub fn new(kind: ExprKind, pos: SourcePos) -> Self {
        Expr { kind, pos }
    }

    pub fn var(name: impl Into<String>, pos: SourcePos) -> Self {
        Expr::new(ExprKind::Var(name.into()), pos)
    }

    pub fn lit(value: LocalValue, pos: SourcePos) -> Self {
        Expr::new(ExprKind::Lit(value), pos)
    }

    pub fn call(name: impl Into<String>, args: Vec<Expr>, pos: SourcePos) -> Self {
        Expr::new(ExprKind::Call(name.into(), args), pos)
    }

    /// Visit this node and every descendant in preorder.
    pub fn walk<'a>(&'a self, f: &mut dyn FnMut(&'a Expr)) {
        f(self);
        match &self.kind {
            ExprKind::Var(_) | ExprKind::Lit(_) => {}
            ExprKind::Call(_, args) | ExprKind::TupleLit(args) => {
                for a in args {
                    a.walk(f);
                }
            }
            ExprKind::If(c, t, e) => {
                c.walk(f);
                t.walk(f);
                e.walk(f);
            }
            ExprKind::Nbr(_, body) => body.walk(f),
            ExprKind::Rep { inits, bodies, .. } => {
                for e in inits.iter().chain(bodies) {
                    e.walk(f);
                }
            }
            ExprKind::Let(_, bound, body) => {
                bound.walk(f);
                body.walk(f);
            }
        }
    }

    /// Variables occurring free in this expression, in order of first occurrence.
    pub fn free_vars(&self) -> Vec<String> {
        let mut out = Vec::new();
        let mut bound = Vec::new();
        collect_free(self, &mut bound, &mut out);
        out
    }

    /// True when the expression uses no `let`, tuple literal or multi-valued `rep`.
    pub fn is_core(&self) -> bool {
        let mut core = true;
        self.walk(&mut |e| match &e.kind {
            ExprKind::Let(..) | ExprKind::TupleLit(_) => core = false,
            ExprKind::Rep { inits, .. } if inits.len() != 1 => core = false,
            _ => {}
        });
        core
    }
}

fn collect_free(e: &Expr, bound: &mut Vec<String>, out: &mut Vec<String>) {
    match &e.kind {
        ExprKind::Var(x) => {
            if !bound.contains(x) && !out.contains(x) {
                out.push(x.clone());
            }
        }
        ExprKind::Lit(_) => {}
        ExprKind::Call(_, args) | ExprKind::TupleLit(args) => {
            for a in args {
                collect_free(a, bound, out);
            }
        }
        ExprKind::If(c, t, f) => {
            collect_free(c, bound, out);
            collect_free(t, bound, out);
            collect_free(f, bound, out);
        }
        ExprKind::Nbr(_, body) => collect_free(body, bound, out),
        ExprKind::Rep { inits, params, bodies } => {
            for i in inits {
                collect_free(i, bound, out);
            }
            let mark = bound.len();
            bound.extend(params.iter().cloned());
            for b in bodies {
                collect_free(b, bound, out);
            }
            bound.truncate(mark);
        }
        ExprKind::Let(x, bound_expr, body) => {
            collect_free(bound_expr, bound, out);
            bound.push(x.clone());
            collect_free(body, bound, out);
            bound.pop();
        }
    }
}

#[derive(Debug, Clone)]
pub struct FunctionDecl {
    pub name: String,
    pub params: Vec<String>,
    pub body: Expr,
    pub pos: SourcePos,
}

/// Structural: positions are ignored, as for [`Expr`].
impl PartialEq for FunctionDecl {
    fn eq(&self, other: &Self) -> bool {
        self.name == other.name && self.params == other.params && self.body == other.body
    }
}

/// A program: function declarations (in declaration order) and a main expression.
#[derive(Debug, Clone, PartialEq)]
pub struct Program {
    pub functions: Vec<FunctionDecl>,
    pub main: Expr,
}

impl Program {
    pub fn function(&self, name: &str) -> Option<&FunctionDecl> {
        self.functions.iter().find(|f| f.name == name)
    }

    pub fn is_core(&self) -> bool {
        self.main.is_core() && self.functions.iter().all(|f| f.body.is_core())
    }
}

/// True for names that denote constructors rather than functions or variables.
pub fn is_constructor_name(name: &str) -> bool {
    name.chars().next().is_some_and(|c| c.is_ascii_uppercase())
}
