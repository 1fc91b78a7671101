//! Canonical program text. Reparsing the output yields a structurally equal
//! program; parentheses appear only where precedence requires them.

use super::ast::{Expr, ExprKind, Program};
use super::parser::{operator_level, RELATIONAL_LEVEL, UNARY_LEVEL};
use crate::value::{escape_str, format_number, LocalValue};

const PRIMARY_LEVEL: u8 = 8;
const LET_LEVEL: u8 = 0;

pub fn pretty_print(program: &Program) -> String {
    let mut out = String::new();
    for f in &program.functions {
        out.push_str("def ");
        out.push_str(&f.name);
        out.push('(');
        out.push_str(&f.params.join(", "));
        out.push_str(") {\n  ");
        write_expr(&f.body, &mut out);
        out.push_str("\n}\n");
    }
    write_expr(&program.main, &mut out);
    out
}

pub fn expr_to_string(e: &Expr) -> String {
    let mut out = String::new();
    write_expr(e, &mut out);
    out
}

fn level(e: &Expr) -> u8 {
    match &e.kind {
        ExprKind::Call(name, args) if args.len() == 2 => operator_level(name).unwrap_or(PRIMARY_LEVEL),
        ExprKind::Call(name, args) if args.len() == 1 && (name == "-" || name == "!") => UNARY_LEVEL,
        ExprKind::Lit(LocalValue::Num(n)) if n.is_sign_negative() && *n != 0.0 => UNARY_LEVEL,
        ExprKind::Let(..) => LET_LEVEL,
        _ => PRIMARY_LEVEL,
    }
}

fn write_operand(e: &Expr, needs_parens: bool, out: &mut String) {
    if needs_parens {
        out.push('(');
        write_expr(e, out);
        out.push(')');
    } else {
        write_expr(e, out);
    }
}

fn write_list(items: &[Expr], out: &mut String) {
    for (i, a) in items.iter().enumerate() {
        if i > 0 {
            out.push_str(", ");
        }
        write_expr(a, out);
    }
}

fn write_expr(e: &Expr, out: &mut String) {
    match &e.kind {
        ExprKind::Var(x) => out.push_str(x),
        ExprKind::Lit(v) => write_literal(v, out),
        ExprKind::Call(name, args) if args.len() == 2 && operator_level(name).is_some() => {
            let lvl = operator_level(name).unwrap();
            let left_parens = if lvl == RELATIONAL_LEVEL {
                level(&args[0]) <= lvl
            } else {
                level(&args[0]) < lvl
            };
            write_operand(&args[0], left_parens, out);
            out.push(' ');
            out.push_str(name);
            out.push(' ');
            write_operand(&args[1], level(&args[1]) <= lvl, out);
        }
        ExprKind::Call(name, args) if args.len() == 1 && (name == "-" || name == "!") => {
            out.push_str(name);
            // `-5` would reparse as a literal, so keep an explicit negation of
            // a numeral (or of a negative operand) parenthesised.
            let operand = &args[0];
            let parens = level(operand) < UNARY_LEVEL
                || (name == "-" && matches!(operand.kind, ExprKind::Lit(LocalValue::Num(_))))
                || level(operand) == UNARY_LEVEL && name == "-";
            write_operand(operand, parens, out);
        }
        ExprKind::Call(name, args) => {
            out.push_str(name);
            out.push('(');
            write_list(args, out);
            out.push(')');
        }
        ExprKind::If(c, t, f) => {
            out.push_str("if (");
            write_expr(c, out);
            out.push_str(") { ");
            write_expr(t, out);
            out.push_str(" } { ");
            write_expr(f, out);
            out.push_str(" }");
        }
        ExprKind::Nbr(scope, body) => {
            out.push_str(scope.keyword());
            out.push_str(" { ");
            write_expr(body, out);
            out.push_str(" }");
        }
        ExprKind::Rep { inits, params, bodies } => {
            out.push_str("rep (");
            write_list(inits, out);
            out.push_str(") { (");
            out.push_str(&params.join(", "));
            out.push_str(") => ");
            write_list(bodies, out);
            out.push_str(" }");
        }
        ExprKind::Let(x, bound, body) => {
            out.push_str("let ");
            out.push_str(x);
            out.push_str(" = ");
            write_expr(bound, out);
            out.push_str(" in ");
            write_expr(body, out);
        }
        ExprKind::TupleLit(items) => {
            out.push('[');
            write_list(items, out);
            out.push(']');
        }
    }
}

fn write_literal(v: &LocalValue, out: &mut String) {
    match v {
        LocalValue::Num(n) => out.push_str(&format_number(*n)),
        LocalValue::Str(s) => escape_str(s, out),
        LocalValue::Constructor(name, args) if !args.is_empty() => {
            out.push_str(name);
            out.push('(');
            for (i, a) in args.iter().enumerate() {
                if i > 0 {
                    out.push_str(", ");
                }
                write_literal(a, out);
            }
            out.push(')');
        }
        other => out.push_str(&other.to_string()),
    }
}
