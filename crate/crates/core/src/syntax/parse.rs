//! Lexer and recursive-descent parser for definition files.
//!
//! ```text
//! file   := { def } ;
//! def    := ("stream" | "tree") ident "=" expr ;
//! choice := atom [ "(+" prob ")" choice ] ;
//! atom   := ident | ident ":" atom | "tail" "(" expr ")"
//!         | "mk" "(" ident "," expr "," expr ")"
//!         | "left" "(" expr ")" | "right" "(" expr ")" | "(" expr ")" ;
//! prob   := int "/" int | decimal ;
//! ```
//!
//! `#` starts a line comment. Probabilities 0 and 1 are accepted and the
//! choice is collapsed to the branch that is taken.

use std::collections::{HashMap, HashSet};
use std::fmt;

use num::{BigInt, One, Zero};
use thiserror::Error;

use super::{Definition, Kind, Label, Prob, Rational, Term};

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ParseErrorKind {
    Syntax(String),
    ProbabilityOutOfRange(String),
    MixedKind { construct: String, kind: Kind },
    ForeignReference(String),
    UnknownIdentifier(String),
    DuplicateDefinition(String),
}

impl fmt::Display for ParseErrorKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ParseErrorKind::Syntax(msg) => write!(f, "syntax error: {msg}"),
            ParseErrorKind::ProbabilityOutOfRange(p) => {
                write!(f, "probability out of range: {p}")
            }
            ParseErrorKind::MixedKind { construct, kind } => {
                write!(f, "mixed-kind term: `{construct}` is not allowed in a {kind} definition")
            }
            ParseErrorKind::ForeignReference(name) => write!(
                f,
                "reference to another definition `{name}` is unsupported (only self-recursion)"
            ),
            ParseErrorKind::UnknownIdentifier(name) => write!(f, "unknown identifier `{name}`"),
            ParseErrorKind::DuplicateDefinition(name) => {
                write!(f, "duplicate definition name `{name}`")
            }
        }
    }
}

/// A located parse or validation error. Lines and columns are 1-based.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("{line}:{column}: {kind}")]
pub struct ParseError {
    pub line: usize,
    pub column: usize,
    pub kind: ParseErrorKind,
}

#[derive(Debug, Clone, PartialEq, Eq)]
enum Tok {
    Ident(String),
    Number(String),
    ChoiceOpen,
    LParen,
    RParen,
    Colon,
    Comma,
    Slash,
    Equals,
    Eof,
}

impl fmt::Display for Tok {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Tok::Ident(s) | Tok::Number(s) => write!(f, "`{s}`"),
            Tok::ChoiceOpen => f.write_str("`(+`"),
            Tok::LParen => f.write_str("`(`"),
            Tok::RParen => f.write_str("`)`"),
            Tok::Colon => f.write_str("`:`"),
            Tok::Comma => f.write_str("`,`"),
            Tok::Slash => f.write_str("`/`"),
            Tok::Equals => f.write_str("`=`"),
            Tok::Eof => f.write_str("end of input"),
        }
    }
}

#[derive(Debug, Clone)]
struct Token {
    tok: Tok,
    line: usize,
    column: usize,
}

fn lex(text: &str) -> Result<Vec<Token>, ParseError> {
    let chars: Vec<char> = text.chars().collect();
    let mut tokens = Vec::new();
    let (mut i, mut line, mut col) = (0, 1, 1);
    let err = |line, column, msg: String| ParseError {
        line,
        column,
        kind: ParseErrorKind::Syntax(msg),
    };
    while i < chars.len() {
        let c = chars[i];
        let (tl, tc) = (line, col);
        let advance = |i: &mut usize, n: usize, col: &mut usize| {
            *i += n;
            *col += n;
        };
        match c {
            '\n' => {
                i += 1;
                line += 1;
                col = 1;
                continue;
            }
            c if c.is_whitespace() => {
                advance(&mut i, 1, &mut col);
                continue;
            }
            '#' => {
                while i < chars.len() && chars[i] != '\n' {
                    i += 1;
                }
                continue;
            }
            '(' => {
                let mut j = i + 1;
                while j < chars.len() && chars[j] != '\n' && chars[j].is_whitespace() {
                    j += 1;
                }
                if j < chars.len() && chars[j] == '+' {
                    tokens.push(Token { tok: Tok::ChoiceOpen, line: tl, column: tc });
                    let n = j + 1 - i;
                    advance(&mut i, n, &mut col);
                } else {
                    tokens.push(Token { tok: Tok::LParen, line: tl, column: tc });
                    advance(&mut i, 1, &mut col);
                }
                continue;
            }
            ')' | ':' | ',' | '/' | '=' => {
                let tok = match c {
                    ')' => Tok::RParen,
                    ':' => Tok::Colon,
                    ',' => Tok::Comma,
                    '/' => Tok::Slash,
                    _ => Tok::Equals,
                };
                tokens.push(Token { tok, line: tl, column: tc });
                advance(&mut i, 1, &mut col);
                continue;
            }
            c if c.is_ascii_alphabetic() => {
                let start = i;
                while i < chars.len() && (chars[i].is_ascii_alphanumeric() || chars[i] == '_') {
                    i += 1;
                }
                col += i - start;
                let s: String = chars[start..i].iter().collect();
                tokens.push(Token { tok: Tok::Ident(s), line: tl, column: tc });
                continue;
            }
            c if c.is_ascii_digit() || c == '.' => {
                let start = i;
                while i < chars.len() && (chars[i].is_ascii_digit() || chars[i] == '.') {
                    i += 1;
                }
                col += i - start;
                let s: String = chars[start..i].iter().collect();
                tokens.push(Token { tok: Tok::Number(s), line: tl, column: tc });
                continue;
            }
            other => return Err(err(tl, tc, format!("unexpected character `{other}`"))),
        }
    }
    tokens.push(Token { tok: Tok::Eof, line, column: col });
    Ok(tokens)
}

fn is_def_keyword(tok: &Tok) -> bool {
    matches!(tok, Tok::Ident(s) if s == "stream" || s == "tree")
}

/// Parses a number literal into an exact rational (`3`, `0.75`, `.5`).
fn parse_decimal(s: &str) -> Option<Rational> {
    let (int_part, frac_part) = match s.split_once('.') {
        Some((a, b)) => (a, b),
        None => (s, ""),
    };
    if frac_part.contains('.') || (int_part.is_empty() && frac_part.is_empty()) {
        return None;
    }
    let digits = format!("{int_part}{frac_part}");
    let numer: BigInt = if digits.is_empty() { BigInt::zero() } else { digits.parse().ok()? };
    let denom = num::pow(BigInt::from(10), frac_part.len());
    Some(Rational::new(numer, denom))
}

struct Parser<'a> {
    tokens: &'a [Token],
    pos: usize,
    // Every name declared anywhere in the file, used to tell foreign
    // references apart from unknown identifiers.
    declared: &'a HashSet<String>,
    name: String,
    kind: Kind,
}

type PResult<T> = Result<T, ParseError>;

impl<'a> Parser<'a> {
    fn peek(&self) -> &Token {
        &self.tokens[self.pos]
    }

    fn peek_at(&self, offset: usize) -> &Tok {
        let i = (self.pos + offset).min(self.tokens.len() - 1);
        &self.tokens[i].tok
    }

    fn bump(&mut self) -> Token {
        let t = self.tokens[self.pos].clone();
        if self.pos + 1 < self.tokens.len() {
            self.pos += 1;
        }
        t
    }

    fn error_at(tok: &Token, kind: ParseErrorKind) -> ParseError {
        ParseError { line: tok.line, column: tok.column, kind }
    }

    fn unexpected(&self, expected: &str) -> ParseError {
        let t = self.peek();
        Self::error_at(t, ParseErrorKind::Syntax(format!("expected {expected}, found {}", t.tok)))
    }

    fn expect(&mut self, tok: Tok) -> PResult<Token> {
        if self.peek().tok == tok {
            Ok(self.bump())
        } else {
            Err(self.unexpected(&tok.to_string()))
        }
    }

    fn expect_ident(&mut self, what: &str) -> PResult<(String, Token)> {
        match &self.peek().tok {
            Tok::Ident(s) => {
                let s = s.clone();
                Ok((s, self.bump()))
            }
            _ => Err(self.unexpected(what)),
        }
    }

    fn require_kind(&self, tok: &Token, construct: &str, kind: Kind) -> PResult<()> {
        if self.kind == kind {
            Ok(())
        } else {
            Err(Self::error_at(
                tok,
                ParseErrorKind::MixedKind { construct: construct.to_string(), kind: self.kind },
            ))
        }
    }

    fn expr(&mut self) -> PResult<Term> {
        let left = self.atom()?;
        if self.peek().tok != Tok::ChoiceOpen {
            return Ok(left);
        }
        self.bump();
        let prob_tok = self.peek().clone();
        let p = self.prob()?;
        self.expect(Tok::RParen)?;
        let right = self.expr()?;
        if p.is_one() {
            Ok(left)
        } else if p.is_zero() {
            Ok(right)
        } else {
            let p = Prob::new(p.clone()).map_err(|_| {
                Self::error_at(&prob_tok, ParseErrorKind::ProbabilityOutOfRange(p.to_string()))
            })?;
            Ok(Term::choice(p, left, right))
        }
    }

    fn prob(&mut self) -> PResult<Rational> {
        let start = self.peek().clone();
        let Tok::Number(first) = start.tok.clone() else {
            return Err(self.unexpected("a probability"));
        };
        self.bump();
        let bad = |msg: &str| {
            Self::error_at(&start, ParseErrorKind::Syntax(format!("malformed probability: {msg}")))
        };
        let value = if self.peek().tok == Tok::Slash {
            self.bump();
            let den_tok = self.peek().clone();
            let Tok::Number(second) = den_tok.tok else {
                return Err(self.unexpected("a denominator"));
            };
            self.bump();
            let num: BigInt = first.parse().map_err(|_| bad("numerator must be an integer"))?;
            let den: BigInt = second.parse().map_err(|_| bad("denominator must be an integer"))?;
            if den.is_zero() {
                return Err(bad("zero denominator"));
            }
            Rational::new(num, den)
        } else {
            parse_decimal(&first).ok_or_else(|| bad("invalid decimal"))?
        };
        if value > Rational::one() || value < Rational::zero() {
            return Err(Self::error_at(
                &start,
                ParseErrorKind::ProbabilityOutOfRange(super::rational_string(&value)),
            ));
        }
        Ok(value)
    }

    fn keyword_call(&self, kw: &str) -> bool {
        matches!(&self.peek().tok, Tok::Ident(s) if s == kw) && *self.peek_at(1) == Tok::LParen
    }

    fn unary(&mut self, construct: &str, kind: Kind) -> PResult<Term> {
        let tok = self.bump();
        self.require_kind(&tok, construct, kind)?;
        self.expect(Tok::LParen)?;
        let arg = self.expr()?;
        self.expect(Tok::RParen)?;
        Ok(arg)
    }

    fn atom(&mut self) -> PResult<Term> {
        if self.keyword_call("tail") {
            return Ok(Term::tail(self.unary("tail", Kind::Stream)?));
        }
        if self.keyword_call("left") {
            return Ok(Term::left(self.unary("left", Kind::Tree)?));
        }
        if self.keyword_call("right") {
            return Ok(Term::right(self.unary("right", Kind::Tree)?));
        }
        if self.keyword_call("mk") {
            let tok = self.bump();
            self.require_kind(&tok, "mk", Kind::Tree)?;
            self.expect(Tok::LParen)?;
            let (label, _) = self.expect_ident("a label")?;
            self.expect(Tok::Comma)?;
            let l = self.expr()?;
            self.expect(Tok::Comma)?;
            let r = self.expr()?;
            self.expect(Tok::RParen)?;
            return Ok(Term::mk(Label(label), l, r));
        }
        match self.peek().tok.clone() {
            Tok::LParen => {
                self.bump();
                let e = self.expr()?;
                self.expect(Tok::RParen)?;
                Ok(e)
            }
            Tok::Ident(name) => {
                let tok = self.bump();
                if self.peek().tok == Tok::Colon {
                    self.require_kind(&self.peek().clone(), ":", Kind::Stream)?;
                    self.bump();
                    let tail = self.atom()?;
                    return Ok(Term::cons(Label(name), tail));
                }
                if name == self.name {
                    Ok(Term::Rec)
                } else if self.declared.contains(&name) {
                    Err(Self::error_at(&tok, ParseErrorKind::ForeignReference(name)))
                } else {
                    Err(Self::error_at(&tok, ParseErrorKind::UnknownIdentifier(name)))
                }
            }
            _ => Err(self.unexpected("a term")),
        }
    }
}

/// Positions of definition headers (`stream|tree ident =`).
fn header_positions(tokens: &[Token]) -> Vec<usize> {
    (0..tokens.len())
        .filter(|&i| {
            is_def_keyword(&tokens[i].tok)
                && matches!(tokens.get(i + 1).map(|t| &t.tok), Some(Tok::Ident(_)))
                && matches!(tokens.get(i + 2).map(|t| &t.tok), Some(Tok::Equals))
        })
        .collect()
}

/// Parses every definition, recovering at the next definition header after
/// an error. Valid definitions are returned alongside all errors found.
pub fn parse_file_partial(text: &str) -> (Vec<Definition>, Vec<ParseError>) {
    let tokens = match lex(text) {
        Ok(t) => t,
        Err(e) => return (Vec::new(), vec![e]),
    };
    let headers = header_positions(&tokens);
    let declared: HashSet<String> = headers
        .iter()
        .filter_map(|&i| match &tokens[i + 1].tok {
            Tok::Ident(s) => Some(s.clone()),
            _ => None,
        })
        .collect();

    let mut defs = Vec::new();
    let mut errors = Vec::new();
    let mut seen: HashMap<String, ()> = HashMap::new();
    let mut pos = 0;

    while tokens[pos].tok != Tok::Eof {
        let next_header = |after: usize| {
            headers.iter().copied().find(|&h| h > after).unwrap_or(tokens.len() - 1)
        };
        if !headers.contains(&pos) {
            let t = &tokens[pos];
            errors.push(ParseError {
                line: t.line,
                column: t.column,
                kind: ParseErrorKind::Syntax(format!(
                    "expected `stream` or `tree` definition, found {}",
                    t.tok
                )),
            });
            pos = next_header(pos);
            continue;
        }
        let kind = match &tokens[pos].tok {
            Tok::Ident(s) if s == "stream" => Kind::Stream,
            _ => Kind::Tree,
        };
        let name_tok = &tokens[pos + 1];
        let Tok::Ident(name) = name_tok.tok.clone() else { unreachable!() };
        let mut parser = Parser {
            tokens: &tokens,
            pos: pos + 3,
            declared: &declared,
            name: name.clone(),
            kind,
        };
        let result = parser.expr().and_then(|body| {
            let t = parser.peek();
            if t.tok == Tok::Eof || headers.contains(&parser.pos) {
                Ok(body)
            } else {
                Err(parser.unexpected("`(+`, a new definition or end of input"))
            }
        });
        match result {
            Ok(body) => {
                if seen.insert(name.clone(), ()).is_some() {
                    errors.push(ParseError {
                        line: name_tok.line,
                        column: name_tok.column,
                        kind: ParseErrorKind::DuplicateDefinition(name),
                    });
                } else {
                    // Kind checks already happened during parsing.
                    defs.push(Definition { name, kind, body });
                }
                pos = parser.pos;
            }
            Err(e) => {
                errors.push(e);
                pos = next_header(pos);
            }
        }
    }
    (defs, errors)
}

/// Parses a definition file. Fails on the first error.
pub fn parse_file(text: &str) -> Result<Vec<Definition>, ParseError> {
    let (defs, mut errors) = parse_file_partial(text);
    if errors.is_empty() {
        Ok(defs)
    } else {
        errors.sort_by_key(|e| (e.line, e.column));
        Err(errors.swap_remove(0))
    }
}
