//! Recursive-descent parser and static validation.

use std::collections::HashSet;

use super::ast::{Expr, ExprKind, FunctionDecl, NbrScope, Program, SourcePos};
use super::diag::{Diagnostic, DiagnosticKind, ParseErrors};
use super::lexer::{tokenize, Token, TokenKind};
use crate::value::LocalValue;

/// Parse and validate a program.
pub fn parse(source: &str) -> Result<Program, ParseErrors> {
    let program = parse_unvalidated(source).map_err(|d| ParseErrors(vec![d]))?;
    let diags = validate(&program);
    if diags.is_empty() {
        Ok(program)
    } else {
        Err(ParseErrors(diags))
    }
}

/// Parse a single expression (no function declarations).
pub fn parse_expr(source: &str) -> Result<Expr, ParseErrors> {
    let single = |d| ParseErrors(vec![d]);
    let tokens = tokenize(source).map_err(single)?;
    let mut p = Parser { tokens, i: 0 };
    let e = p.expr().map_err(single)?;
    p.expect_eof().map_err(single)?;
    Ok(e)
}

fn parse_unvalidated(source: &str) -> Result<Program, Diagnostic> {
    let tokens = tokenize(source)?;
    let mut p = Parser { tokens, i: 0 };
    let mut functions = Vec::new();
    while p.peek() == &TokenKind::Def {
        functions.push(p.function()?);
    }
    if p.peek() == &TokenKind::Eof {
        return Err(p.error("expected a main expression after the declarations"));
    }
    let main = p.expr()?;
    p.expect_eof()?;
    Ok(Program { functions, main })
}

type PResult<T> = Result<T, Diagnostic>;

struct Parser {
    tokens: Vec<Token>,
    i: usize,
}

// Binary operator levels; higher binds tighter.
fn binary_level(op: &str) -> Option<u8> {
    Some(match op {
        "||" => 1,
        "&&" => 2,
        "==" | "!=" => 3,
        "<" | "<=" | ">" | ">=" => 4,
        "+" | "-" => 5,
        "*" | "/" | "%" => 6,
        _ => return None,
    })
}

pub(crate) const RELATIONAL_LEVEL: u8 = 4;
pub(crate) const UNARY_LEVEL: u8 = 7;

pub(crate) fn operator_level(op: &str) -> Option<u8> {
    binary_level(op)
}

impl Parser {
    fn peek(&self) -> &TokenKind {
        &self.tokens[self.i].kind
    }

    fn pos(&self) -> SourcePos {
        self.tokens[self.i].pos
    }

    fn advance(&mut self) -> Token {
        let t = self.tokens[self.i].clone();
        if self.i + 1 < self.tokens.len() {
            self.i += 1;
        }
        t
    }

    fn error(&self, message: impl Into<String>) -> Diagnostic {
        Diagnostic::new(DiagnosticKind::Syntax, self.pos(), message)
    }

    fn expect(&mut self, kind: TokenKind, what: &str) -> PResult<Token> {
        if *self.peek() == kind {
            Ok(self.advance())
        } else {
            Err(self.error(format!("expected {}, found {}", what, self.peek().describe())))
        }
    }

    fn expect_eof(&mut self) -> PResult<()> {
        match self.peek() {
            TokenKind::Eof => Ok(()),
            other => Err(self.error(format!("unexpected {} after the main expression", other.describe()))),
        }
    }

    fn ident(&mut self, what: &str) -> PResult<String> {
        match self.peek().clone() {
            TokenKind::Ident(name) => {
                self.advance();
                Ok(name)
            }
            other => Err(self.error(format!("expected {}, found {}", what, other.describe()))),
        }
    }

    fn function(&mut self) -> PResult<FunctionDecl> {
        let pos = self.expect(TokenKind::Def, "'def'")?.pos;
        let name = self.ident("function name")?;
        self.expect(TokenKind::LParen, "'('")?;
        let mut params = Vec::new();
        if self.peek() != &TokenKind::RParen {
            loop {
                params.push(self.ident("parameter name")?);
                if self.peek() == &TokenKind::Comma {
                    self.advance();
                } else {
                    break;
                }
            }
        }
        self.expect(TokenKind::RParen, "')'")?;
        self.expect(TokenKind::LBrace, "'{'")?;
        let body = self.expr()?;
        self.expect(TokenKind::RBrace, "'}'")?;
        Ok(FunctionDecl {
            name,
            params,
            body,
            pos,
        })
    }

    fn expr(&mut self) -> PResult<Expr> {
        self.binary(1)
    }

    fn binary(&mut self, min_level: u8) -> PResult<Expr> {
        let mut lhs = self.unary()?;
        loop {
            let TokenKind::Op(op) = *self.peek() else {
                return Ok(lhs);
            };
            let Some(level) = binary_level(op) else {
                return Ok(lhs);
            };
            if level < min_level {
                return Ok(lhs);
            }
            self.advance();
            let rhs = self.binary(level + 1)?;
            let pos = lhs.pos;
            lhs = Expr::call(op, vec![lhs, rhs], pos);
            if level == RELATIONAL_LEVEL {
                if let TokenKind::Op(next) = *self.peek() {
                    if binary_level(next) == Some(RELATIONAL_LEVEL) {
                        return Err(self.error(format!(
                            "comparison operators do not chain; write '{}' as a conjunction",
                            next
                        )));
                    }
                }
            }
        }
    }

    fn unary(&mut self) -> PResult<Expr> {
        let pos = self.pos();
        match *self.peek() {
            TokenKind::Op("-") => {
                self.advance();
                // A minus sign directly on a numeral is part of the literal.
                match *self.peek() {
                    TokenKind::Num(n) => {
                        self.advance();
                        return Ok(Expr::lit(LocalValue::Num(-n), pos));
                    }
                    TokenKind::Infinity => {
                        self.advance();
                        return Ok(Expr::lit(LocalValue::Num(f64::NEG_INFINITY), pos));
                    }
                    _ => {}
                }
                let operand = self.unary()?;
                Ok(Expr::call("-", vec![operand], pos))
            }
            TokenKind::Op("!") => {
                self.advance();
                let operand = self.unary()?;
                Ok(Expr::call("!", vec![operand], pos))
            }
            _ => self.primary(),
        }
    }

    fn args_until(&mut self, close: TokenKind, what: &str) -> PResult<Vec<Expr>> {
        let mut args = Vec::new();
        if *self.peek() != close {
            loop {
                args.push(self.expr()?);
                if self.peek() == &TokenKind::Comma {
                    self.advance();
                } else {
                    break;
                }
            }
        }
        self.expect(close, what)?;
        Ok(args)
    }

    fn braced(&mut self) -> PResult<Expr> {
        self.expect(TokenKind::LBrace, "'{'")?;
        let e = self.expr()?;
        self.expect(TokenKind::RBrace, "'}'")?;
        Ok(e)
    }

    fn primary(&mut self) -> PResult<Expr> {
        let pos = self.pos();
        let tok = self.peek().clone();
        match tok {
            TokenKind::Num(n) => {
                self.advance();
                Ok(Expr::lit(LocalValue::Num(n), pos))
            }
            TokenKind::Infinity => {
                self.advance();
                Ok(Expr::lit(LocalValue::Num(f64::INFINITY), pos))
            }
            TokenKind::Str(s) => {
                self.advance();
                Ok(Expr::lit(LocalValue::Str(s), pos))
            }
            TokenKind::True => {
                self.advance();
                Ok(Expr::lit(LocalValue::Bool(true), pos))
            }
            TokenKind::False => {
                self.advance();
                Ok(Expr::lit(LocalValue::Bool(false), pos))
            }
            TokenKind::Null => {
                self.advance();
                Ok(Expr::lit(LocalValue::Null, pos))
            }
            TokenKind::Ident(name) => {
                self.advance();
                if self.peek() == &TokenKind::LParen {
                    self.advance();
                    let args = self.args_until(TokenKind::RParen, "')'")?;
                    Ok(Expr::call(name, args, pos))
                } else {
                    Ok(Expr::var(name, pos))
                }
            }
            TokenKind::Cons(name) => {
                self.advance();
                if self.peek() == &TokenKind::LParen {
                    self.advance();
                    let args = self.args_until(TokenKind::RParen, "')'")?;
                    Ok(Expr::call(name, args, pos))
                } else {
                    Ok(Expr::lit(constructor_literal(&name), pos))
                }
            }
            TokenKind::LParen => {
                self.advance();
                let e = self.expr()?;
                self.expect(TokenKind::RParen, "')'")?;
                Ok(e)
            }
            TokenKind::LBracket => {
                self.advance();
                let elems = self.args_until(TokenKind::RBracket, "']'")?;
                Ok(Expr::new(ExprKind::TupleLit(elems), pos))
            }
            TokenKind::If => {
                self.advance();
                self.expect(TokenKind::LParen, "'(' after 'if'")?;
                let cond = self.expr()?;
                self.expect(TokenKind::RParen, "')'")?;
                let then = self.braced()?;
                let els = self.braced()?;
                Ok(Expr::new(
                    ExprKind::If(Box::new(cond), Box::new(then), Box::new(els)),
                    pos,
                ))
            }
            TokenKind::Nbr | TokenKind::NbrLocal | TokenKind::NbrRemote => {
                self.advance();
                let scope = match tok {
                    TokenKind::Nbr => NbrScope::All,
                    TokenKind::NbrLocal => NbrScope::Local,
                    _ => NbrScope::Remote,
                };
                let body = self.braced()?;
                Ok(Expr::new(ExprKind::Nbr(scope, Box::new(body)), pos))
            }
            TokenKind::Rep => {
                self.advance();
                self.expect(TokenKind::LParen, "'(' after 'rep'")?;
                let inits = self.args_until(TokenKind::RParen, "')'")?;
                self.expect(TokenKind::LBrace, "'{'")?;
                self.expect(TokenKind::LParen, "'(' before the rep parameters")?;
                let mut params = Vec::new();
                loop {
                    params.push(self.ident("rep parameter")?);
                    if self.peek() == &TokenKind::Comma {
                        self.advance();
                    } else {
                        break;
                    }
                }
                self.expect(TokenKind::RParen, "')'")?;
                self.expect(TokenKind::Arrow, "'=>'")?;
                let bodies = self.args_until(TokenKind::RBrace, "'}'")?;
                if inits.is_empty() || bodies.is_empty() {
                    return Err(Diagnostic::new(
                        DiagnosticKind::Syntax,
                        pos,
                        "rep needs at least one initial value and body",
                    ));
                }
                Ok(Expr::new(ExprKind::Rep { inits, params, bodies }, pos))
            }
            TokenKind::Let => {
                self.advance();
                let name = self.ident("bound name")?;
                self.expect(TokenKind::Assign, "'='")?;
                let bound = self.expr()?;
                self.expect(TokenKind::In, "'in'")?;
                let body = self.expr()?;
                Ok(Expr::new(ExprKind::Let(name, Box::new(bound), Box::new(body)), pos))
            }
            other => Err(self.error(format!("expected an expression, found {}", other.describe()))),
        }
    }
}

pub(crate) fn constructor_literal(name: &str) -> LocalValue {
    match name {
        "True" => LocalValue::Bool(true),
        "False" => LocalValue::Bool(false),
        "Null" => LocalValue::Null,
        _ => LocalValue::symbol(name),
    }
}

/// Static checks on a syntactically valid program.
pub fn validate(program: &Program) -> Vec<Diagnostic> {
    let mut diags = Vec::new();
    let mut seen = HashSet::new();
    for f in &program.functions {
        if !seen.insert(f.name.as_str()) {
            diags.push(Diagnostic::new(
                DiagnosticKind::DuplicateFunction,
                f.pos,
                format!("function '{}' is declared more than once", f.name),
            ));
        }
        check_unique(&f.params, f.pos, &format!("function '{}'", f.name), &mut diags);
    }
    let bodies = program
        .functions
        .iter()
        .map(|f| &f.body)
        .chain(std::iter::once(&program.main));
    for body in bodies {
        body.walk(&mut |e| match &e.kind {
            ExprKind::Call(name, args) => {
                if let Some(f) = program.function(name) {
                    if f.params.len() != args.len() {
                        diags.push(Diagnostic::new(
                            DiagnosticKind::ArityMismatch,
                            e.pos,
                            format!("'{}' takes {} argument(s), {} given", name, f.params.len(), args.len()),
                        ));
                    }
                }
            }
            ExprKind::Rep { inits, params, bodies } => {
                if inits.len() != params.len() || params.len() != bodies.len() {
                    diags.push(Diagnostic::new(
                        DiagnosticKind::ArityMismatch,
                        e.pos,
                        format!(
                            "rep has {} initial value(s), {} parameter(s) and {} bod{}",
                            inits.len(),
                            params.len(),
                            bodies.len(),
                            if bodies.len() == 1 { "y" } else { "ies" }
                        ),
                    ));
                }
                check_unique(params, e.pos, "rep", &mut diags);
            }
            _ => {}
        });
    }
    diags.sort_by_key(|d| d.pos);
    diags
}

fn check_unique(params: &[String], pos: SourcePos, owner: &str, diags: &mut Vec<Diagnostic>) {
    let mut seen = HashSet::new();
    for p in params {
        if !seen.insert(p.as_str()) {
            diags.push(Diagnostic::new(
                DiagnosticKind::DuplicateParameter,
                pos,
                format!("{} has parameter '{}' more than once", owner, p),
            ));
        }
    }
}
