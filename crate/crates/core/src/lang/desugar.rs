//! Rewriting of `let`, tuple literals and multi-valued `rep` into core form,
//! and load-time resolution of named constants.

use std::collections::{BTreeMap, HashSet};

use super::ast::{Expr, ExprKind, FunctionDecl, Program};
use crate::value::LocalValue;

/// Rewrite a validated program into core form.
///
/// * `let x = e1 in e2` becomes a call `_letN(e1, y1, .., yn)` to a generated
///   `def _letN(x, y1, .., yn) { e2 }`, where the `y`s are the free variables
///   of `e2` other than `x`, in order of first occurrence.
/// * `[e1, .., en]` becomes `Tuple(e1, .., en)`.
/// * `rep (v1, .., vn) { (x1, .., xn) => e1, .., en }` becomes a single
///   `rep` over `[v1, .., vn]` whose body binds each `xi` to the i-th
///   projection (`1st`, `2nd`, then `nth(t, i)`) of the state tuple.
///
/// Generated names are numbered in traversal order and skip any identifier
/// already used in the program, so the result is deterministic.
pub fn desugar(program: &Program) -> Program {
    let mut d = Desugarer {
        used: used_names(program),
        let_counter: 0,
        tuple_counter: 0,
        generated: Vec::new(),
    };
    let mut functions: Vec<FunctionDecl> = program
        .functions
        .iter()
        .map(|f| FunctionDecl {
            name: f.name.clone(),
            params: f.params.clone(),
            body: d.expr(&f.body),
            pos: f.pos,
        })
        .collect();
    let main = d.expr(&program.main);
    functions.extend(d.generated);
    Program { functions, main }
}

struct Desugarer {
    used: HashSet<String>,
    let_counter: usize,
    tuple_counter: usize,
    generated: Vec<FunctionDecl>,
}

impl Desugarer {
    fn fresh(&mut self, prefix: &str, counter_is_let: bool) -> String {
        loop {
            let counter = if counter_is_let {
                &mut self.let_counter
            } else {
                &mut self.tuple_counter
            };
            let name = format!("{}{}", prefix, counter);
            *counter += 1;
            if self.used.insert(name.clone()) {
                return name;
            }
        }
    }

    fn exprs(&mut self, es: &[Expr]) -> Vec<Expr> {
        es.iter().map(|e| self.expr(e)).collect()
    }

    fn expr(&mut self, e: &Expr) -> Expr {
        let pos = e.pos;
        let kind = match &e.kind {
            ExprKind::Var(_) | ExprKind::Lit(_) => e.kind.clone(),
            ExprKind::Call(name, args) => ExprKind::Call(name.clone(), self.exprs(args)),
            ExprKind::TupleLit(items) => ExprKind::Call("Tuple".into(), self.exprs(items)),
            ExprKind::If(c, t, f) => {
                ExprKind::If(Box::new(self.expr(c)), Box::new(self.expr(t)), Box::new(self.expr(f)))
            }
            ExprKind::Nbr(scope, body) => ExprKind::Nbr(*scope, Box::new(self.expr(body))),
            ExprKind::Rep { inits, params, bodies } if inits.len() == 1 => ExprKind::Rep {
                inits: self.exprs(inits),
                params: params.clone(),
                bodies: self.exprs(bodies),
            },
            ExprKind::Rep { inits, params, bodies } => {
                let t = self.fresh("_t", false);
                // let x1 = 1st(t) in .. let xn = nth(t, n) in [e1, .., en]
                let mut body = Expr::new(ExprKind::TupleLit(bodies.clone()), pos);
                for (i, x) in params.iter().enumerate().rev() {
                    let proj = projection(&t, i + 1, pos);
                    body = Expr::new(ExprKind::Let(x.clone(), Box::new(proj), Box::new(body)), pos);
                }
                let init = Expr::new(ExprKind::TupleLit(inits.clone()), pos);
                let rep = Expr::new(
                    ExprKind::Rep {
                        inits: vec![init],
                        params: vec![t],
                        bodies: vec![body],
                    },
                    pos,
                );
                return self.expr(&rep);
            }
            ExprKind::Let(x, bound, body) => {
                let name = self.fresh("_let", true);
                let mut params = vec![x.clone()];
                params.extend(body.free_vars().into_iter().filter(|v| v != x));
                let mut args = vec![self.expr(bound)];
                args.extend(params[1..].iter().map(|v| Expr::var(v.clone(), pos)));
                let new_body = self.expr(body);
                self.generated.push(FunctionDecl {
                    name: name.clone(),
                    params,
                    body: new_body,
                    pos,
                });
                ExprKind::Call(name, args)
            }
        };
        Expr::new(kind, pos)
    }
}

fn projection(tuple: &str, index: usize, pos: crate::lang::SourcePos) -> Expr {
    let t = Expr::var(tuple, pos);
    match index {
        1 => Expr::call("1st", vec![t], pos),
        2 => Expr::call("2nd", vec![t], pos),
        k => Expr::call("nth", vec![t, Expr::lit(LocalValue::Num(k as f64), pos)], pos),
    }
}

fn used_names(program: &Program) -> HashSet<String> {
    let mut used = HashSet::new();
    let mut note = |e: &Expr| match &e.kind {
        ExprKind::Var(x) | ExprKind::Call(x, _) => {
            used.insert(x.clone());
        }
        ExprKind::Rep { params, .. } => used.extend(params.iter().cloned()),
        ExprKind::Let(x, ..) => {
            used.insert(x.clone());
        }
        _ => {}
    };
    for f in &program.functions {
        f.body.walk(&mut note);
    }
    program.main.walk(&mut note);
    for f in &program.functions {
        used.insert(f.name.clone());
        used.extend(f.params.iter().cloned());
    }
    used
}

/// Replace free variables and nullary constructors named in `constants` by
/// the corresponding literal. Bound variables are never replaced; unknown
/// capitalised names stay symbolic.
pub fn resolve_constants(program: &Program, constants: &BTreeMap<String, LocalValue>) -> Program {
    if constants.is_empty() {
        return program.clone();
    }
    let functions = program
        .functions
        .iter()
        .map(|f| FunctionDecl {
            body: resolve(&f.body, &mut f.params.clone(), constants),
            ..f.clone()
        })
        .collect();
    let main = resolve(&program.main, &mut Vec::new(), constants);
    Program { functions, main }
}

fn resolve(e: &Expr, bound: &mut Vec<String>, constants: &BTreeMap<String, LocalValue>) -> Expr {
    let pos = e.pos;
    let all = |es: &[Expr], bound: &mut Vec<String>| -> Vec<Expr> {
        es.iter().map(|x| resolve(x, bound, constants)).collect()
    };
    let kind = match &e.kind {
        ExprKind::Var(x) if !bound.contains(x) => match constants.get(x) {
            Some(v) => ExprKind::Lit(v.clone()),
            None => e.kind.clone(),
        },
        ExprKind::Lit(LocalValue::Constructor(name, args)) if args.is_empty() => match constants.get(name) {
            Some(v) => ExprKind::Lit(v.clone()),
            None => e.kind.clone(),
        },
        ExprKind::Var(_) | ExprKind::Lit(_) => e.kind.clone(),
        ExprKind::Call(name, args) => ExprKind::Call(name.clone(), all(args, bound)),
        ExprKind::TupleLit(items) => ExprKind::TupleLit(all(items, bound)),
        ExprKind::If(c, t, f) => ExprKind::If(
            Box::new(resolve(c, bound, constants)),
            Box::new(resolve(t, bound, constants)),
            Box::new(resolve(f, bound, constants)),
        ),
        ExprKind::Nbr(scope, body) => ExprKind::Nbr(*scope, Box::new(resolve(body, bound, constants))),
        ExprKind::Rep { inits, params, bodies } => {
            let inits = all(inits, bound);
            let mark = bound.len();
            bound.extend(params.iter().cloned());
            let bodies = all(bodies, bound);
            bound.truncate(mark);
            ExprKind::Rep {
                inits,
                params: params.clone(),
                bodies,
            }
        }
        ExprKind::Let(x, b, body) => {
            let b = resolve(b, bound, constants);
            bound.push(x.clone());
            let body = resolve(body, bound, constants);
            bound.pop();
            ExprKind::Let(x.clone(), Box::new(b), Box::new(body))
        }
    };
    Expr::new(kind, pos)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lang::{parse, pretty_print};

    fn core_text(src: &str) -> String {
        pretty_print(&desugar(&parse(src).unwrap()))
    }

    #[test]
    fn let_becomes_generated_function() {
        assert_eq!(core_text("let x = 1 in x+2"), "def _let0(x) {\n  x + 2\n}\n_let0(1)");
    }

    #[test]
    fn let_passes_free_variables() {
        let text = core_text("def f(a, b) { let x = a in b + x + a } f(1, 2)");
        assert!(text.contains("def _let0(x, b, a)"), "{}", text);
        assert!(text.contains("_let0(a, b, a)"), "{}", text);
    }

    #[test]
    fn tuple_literal() {
        assert_eq!(core_text("[1,2]"), "Tuple(1, 2)");
    }

    #[test]
    fn multi_valued_rep() {
        let p = desugar(&parse("rep (0,1) {(a,b) => b,a}").unwrap());
        assert!(p.is_core());
        let ExprKind::Rep { inits, params, bodies } = &p.main.kind else {
            panic!("{:?}", p.main)
        };
        assert_eq!(params, &vec!["_t0".to_string()]);
        assert!(matches!(&inits[0].kind, ExprKind::Call(c, a) if c == "Tuple" && a.len() == 2));
        assert_eq!(bodies.len(), 1);
        let text = pretty_print(&p);
        assert!(text.contains("1st(_t0)") && text.contains("2nd(_t0)"), "{}", text);
        let three = pretty_print(&desugar(&parse("rep (0,1,2) {(a,b,c) => c,b,a}").unwrap()));
        assert!(three.contains("nth(_t0, 3)"), "{}", three);
    }

    #[test]
    fn fresh_names_avoid_user_names() {
        let text = core_text("def _let0(y) { y } let x = _let0(1) in x");
        assert!(text.contains("def _let1(x)"), "{}", text);
    }

    #[test]
    fn idempotent_and_deterministic() {
        let p = parse("def f(v) { let a = rep (1, v) { (n, m) => m, [n] } in 1st(a) } f(2)").unwrap();
        let once = desugar(&p);
        assert_eq!(desugar(&once), once);
        assert_eq!(desugar(&p), once);
    }

    #[test]
    fn constants_replace_free_names_only() {
        let p = parse("def f(x) { x + THRESHOLD + LIMIT } f(DELAY)").unwrap();
        let mut c = BTreeMap::new();
        c.insert("DELAY".to_string(), LocalValue::Num(5.0));
        c.insert("THRESHOLD".to_string(), LocalValue::Num(10.0));
        let r = resolve_constants(&p, &c);
        let text = pretty_print(&r);
        assert_eq!(text, "def f(x) {\n  x + 10 + LIMIT\n}\nf(5)");
        let p = parse("def g(delay) { delay + rate } g(rate)").unwrap();
        let mut c = BTreeMap::new();
        c.insert("delay".to_string(), LocalValue::Num(1.0));
        c.insert("rate".to_string(), LocalValue::Num(2.0));
        assert_eq!(
            pretty_print(&resolve_constants(&p, &c)),
            "def g(delay) {\n  delay + 2\n}\ng(2)"
        );
    }
}
