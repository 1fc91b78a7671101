//! Tokenizer for `.fc` program text.
//!
//! Identifiers may contain `-` between letters (`elliptic-channel`), so
//! subtraction between two names needs whitespace: `a - b`. A numeral
//! immediately followed by letters is an identifier (`1st`, `2nd`).

use super::ast::SourcePos;
use super::diag::{Diagnostic, DiagnosticKind};

#[derive(Debug, Clone, PartialEq)]
pub enum TokenKind {
    Num(f64),
    Str(String),
    /// Lower-case (or digit-led) identifier.
    Ident(String),
    /// Capitalised identifier: constructor name.
    Cons(String),
    Def,
    If,
    Nbr,
    NbrLocal,
    NbrRemote,
    Rep,
    Let,
    In,
    Infinity,
    True,
    False,
    Null,
    LParen,
    RParen,
    LBrace,
    RBrace,
    LBracket,
    RBracket,
    Comma,
    Arrow,
    Assign,
    Op(&'static str),
    Eof,
}

impl TokenKind {
    pub fn describe(&self) -> String {
        match self {
            TokenKind::Num(n) => format!("number {}", n),
            TokenKind::Str(_) => "string".into(),
            TokenKind::Ident(s) | TokenKind::Cons(s) => format!("'{}'", s),
            TokenKind::Def => "'def'".into(),
            TokenKind::If => "'if'".into(),
            TokenKind::Nbr => "'nbr'".into(),
            TokenKind::NbrLocal => "'nbrLocal'".into(),
            TokenKind::NbrRemote => "'nbrRemote'".into(),
            TokenKind::Rep => "'rep'".into(),
            TokenKind::Let => "'let'".into(),
            TokenKind::In => "'in'".into(),
            TokenKind::Infinity => "'infinity'".into(),
            TokenKind::True => "'true'".into(),
            TokenKind::False => "'false'".into(),
            TokenKind::Null => "'null'".into(),
            TokenKind::LParen => "'('".into(),
            TokenKind::RParen => "')'".into(),
            TokenKind::LBrace => "'{'".into(),
            TokenKind::RBrace => "'}'".into(),
            TokenKind::LBracket => "'['".into(),
            TokenKind::RBracket => "']'".into(),
            TokenKind::Comma => "','".into(),
            TokenKind::Arrow => "'=>'".into(),
            TokenKind::Assign => "'='".into(),
            TokenKind::Op(op) => format!("'{}'", op),
            TokenKind::Eof => "end of input".into(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Token {
    pub kind: TokenKind,
    pub pos: SourcePos,
    /// Byte range in the source.
    pub span: std::ops::Range<usize>,
}

pub fn tokenize(source: &str) -> Result<Vec<Token>, Diagnostic> {
    Lexer::new(source).run()
}

struct Lexer {
    chars: Vec<char>,
    i: usize,
    byte: usize,
    line: u32,
    col: u32,
}

impl Lexer {
    fn new(source: &str) -> Self {
        Lexer {
            chars: source.chars().collect(),
            i: 0,
            byte: 0,
            line: 1,
            col: 1,
        }
    }

    fn peek_at(&self, k: usize) -> Option<char> {
        self.chars.get(self.i + k).copied()
    }

    fn bump(&mut self) -> Option<char> {
        let c = self.chars.get(self.i).copied()?;
        self.i += 1;
        self.byte += c.len_utf8();
        if c == '\n' {
            self.line += 1;
            self.col = 1;
        } else {
            self.col += 1;
        }
        Some(c)
    }

    fn pos(&self) -> SourcePos {
        SourcePos::new(self.line, self.col)
    }

    fn run(mut self) -> Result<Vec<Token>, Diagnostic> {
        let mut out = Vec::new();
        loop {
            self.skip_trivia();
            let pos = self.pos();
            let start = self.byte;
            let Some(c) = self.peek_at(0) else {
                out.push(Token {
                    kind: TokenKind::Eof,
                    pos,
                    span: start..start,
                });
                return Ok(out);
            };
            let kind = if c.is_ascii_digit() {
                self.number_or_ordinal()?
            } else if c.is_ascii_alphabetic() || c == '_' {
                let word = self.word(String::new());
                keyword_or_ident(word)
            } else if c == '"' {
                self.string()?
            } else {
                self.symbol()?
            };
            out.push(Token {
                kind,
                pos,
                span: start..self.byte,
            });
        }
    }

    fn skip_trivia(&mut self) {
        loop {
            match self.peek_at(0) {
                Some(c) if c.is_whitespace() => {
                    self.bump();
                }
                Some('/') if self.peek_at(1) == Some('/') => {
                    while let Some(c) = self.peek_at(0) {
                        if c == '\n' {
                            break;
                        }
                        self.bump();
                    }
                }
                _ => return,
            }
        }
    }

    fn word(&mut self, mut text: String) -> String {
        while let Some(c) = self.peek_at(0) {
            let hyphen = c == '-' && self.peek_at(1).is_some_and(|n| n.is_ascii_alphabetic());
            if c.is_ascii_alphanumeric() || c == '_' || hyphen {
                text.push(c);
                self.bump();
            } else {
                break;
            }
        }
        text
    }

    fn number_or_ordinal(&mut self) -> Result<TokenKind, Diagnostic> {
        let pos = self.pos();
        let mut text = String::new();
        while let Some(c) = self.peek_at(0).filter(|c| c.is_ascii_digit()) {
            text.push(c);
            self.bump();
        }
        if self.peek_at(0).is_some_and(|c| c.is_ascii_alphabetic() || c == '_') {
            return Ok(TokenKind::Ident(self.word(text)));
        }
        if self.peek_at(0) == Some('.') && self.peek_at(1).is_some_and(|c| c.is_ascii_digit()) {
            text.push('.');
            self.bump();
            while let Some(c) = self.peek_at(0).filter(|c| c.is_ascii_digit()) {
                text.push(c);
                self.bump();
            }
            if self.peek_at(0).is_some_and(|c| c.is_ascii_alphabetic() || c == '_') {
                return Err(Diagnostic::new(
                    DiagnosticKind::Lexical,
                    pos,
                    format!("malformed number '{}{}'", text, self.peek_at(0).unwrap()),
                ));
            }
        }
        text.parse::<f64>()
            .map(TokenKind::Num)
            .map_err(|_| Diagnostic::new(DiagnosticKind::Lexical, pos, format!("malformed number '{}'", text)))
    }

    fn string(&mut self) -> Result<TokenKind, Diagnostic> {
        let pos = self.pos();
        self.bump();
        let mut s = String::new();
        loop {
            match self.bump() {
                None | Some('\n') => {
                    return Err(Diagnostic::new(
                        DiagnosticKind::Lexical,
                        pos,
                        "unterminated string literal",
                    ))
                }
                Some('"') => return Ok(TokenKind::Str(s)),
                Some('\\') => {
                    let esc_pos = self.pos();
                    match self.bump() {
                        Some('n') => s.push('\n'),
                        Some('t') => s.push('\t'),
                        Some('"') => s.push('"'),
                        Some('\\') => s.push('\\'),
                        other => {
                            return Err(Diagnostic::new(
                                DiagnosticKind::Lexical,
                                esc_pos,
                                format!("unknown escape '\\{}'", other.map(String::from).unwrap_or_default()),
                            ))
                        }
                    }
                }
                Some(c) => s.push(c),
            }
        }
    }

    fn symbol(&mut self) -> Result<TokenKind, Diagnostic> {
        let pos = self.pos();
        let c = self.bump().unwrap();
        let next = self.peek_at(0);
        let two = |l: &mut Lexer, k: TokenKind| {
            l.bump();
            Ok(k)
        };
        match (c, next) {
            ('=', Some('>')) => two(self, TokenKind::Arrow),
            ('=', Some('=')) => two(self, TokenKind::Op("==")),
            ('!', Some('=')) => two(self, TokenKind::Op("!=")),
            ('<', Some('=')) => two(self, TokenKind::Op("<=")),
            ('>', Some('=')) => two(self, TokenKind::Op(">=")),
            ('&', Some('&')) => two(self, TokenKind::Op("&&")),
            ('|', Some('|')) => two(self, TokenKind::Op("||")),
            ('=', _) => Ok(TokenKind::Assign),
            ('!', _) => Ok(TokenKind::Op("!")),
            ('<', _) => Ok(TokenKind::Op("<")),
            ('>', _) => Ok(TokenKind::Op(">")),
            ('+', _) => Ok(TokenKind::Op("+")),
            ('-', _) => Ok(TokenKind::Op("-")),
            ('*', _) => Ok(TokenKind::Op("*")),
            ('/', _) => Ok(TokenKind::Op("/")),
            ('%', _) => Ok(TokenKind::Op("%")),
            ('(', _) => Ok(TokenKind::LParen),
            (')', _) => Ok(TokenKind::RParen),
            ('{', _) => Ok(TokenKind::LBrace),
            ('}', _) => Ok(TokenKind::RBrace),
            ('[', _) => Ok(TokenKind::LBracket),
            (']', _) => Ok(TokenKind::RBracket),
            (',', _) => Ok(TokenKind::Comma),
            (c, _) => Err(Diagnostic::new(
                DiagnosticKind::Lexical,
                pos,
                format!("unexpected character '{}'", c),
            )),
        }
    }
}

fn keyword_or_ident(word: String) -> TokenKind {
    match word.as_str() {
        "def" => TokenKind::Def,
        "if" => TokenKind::If,
        "nbr" => TokenKind::Nbr,
        "nbrLocal" => TokenKind::NbrLocal,
        "nbrRemote" => TokenKind::NbrRemote,
        "rep" => TokenKind::Rep,
        "let" => TokenKind::Let,
        "in" => TokenKind::In,
        "infinity" => TokenKind::Infinity,
        "true" => TokenKind::True,
        "false" => TokenKind::False,
        "null" => TokenKind::Null,
        _ if word.starts_with(|c: char| c.is_ascii_uppercase()) => TokenKind::Cons(word),
        _ => TokenKind::Ident(word),
    }
}
