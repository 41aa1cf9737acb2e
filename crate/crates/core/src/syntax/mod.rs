//! Abstract syntax of the stream and tree calculus.
//!
//! A [`Definition`] binds a single recursion variable to a body [`Term`].
//! Stream bodies are built from choice, `a : e` and `tail(e)`; tree bodies
//! from choice, `mk(a, e, e)`, `left(e)` and `right(e)`. Constructing a
//! definition validates that the body is kind-homogeneous, so downstream
//! modules never see mixed terms.

mod parse;
mod print;
mod random;

use std::collections::HashSet;
use std::fmt;

use num::{BigInt, One, Zero};
use thiserror::Error;

pub use parse::{parse_file, parse_file_partial, ParseError, ParseErrorKind};
pub use print::{pretty_print, term_to_string};
pub use random::random_definition;

/// Arbitrary-precision exact rational.
pub type Rational = num::BigRational;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum SyntaxError {
    #[error("invalid label `{0}`")]
    InvalidLabel(String),
    #[error("invalid identifier `{0}`")]
    InvalidIdentifier(String),
    #[error("probability out of range: {0}")]
    ProbabilityOutOfRange(Rational),
    #[error("mixed-kind term: `{construct}` is not allowed in a {kind} definition")]
    MixedKind { construct: &'static str, kind: Kind },
}

pub(crate) fn is_identifier(s: &str) -> bool {
    let mut chars = s.chars();
    match chars.next() {
        Some(c) if c.is_ascii_alphabetic() => {}
        _ => return false,
    }
    chars.all(|c| c.is_ascii_alphanumeric() || c == '_')
}

/// An output symbol.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Label(String);

impl Label {
    pub fn new(name: impl Into<String>) -> Result<Self, SyntaxError> {
        let name = name.into();
        if is_identifier(&name) {
            Ok(Label(name))
        } else {
            Err(SyntaxError::InvalidLabel(name))
        }
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl fmt::Display for Label {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

/// A choice probability, strictly between 0 and 1.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Prob(Rational);

impl Prob {
    pub fn new(value: Rational) -> Result<Self, SyntaxError> {
        if value > Rational::zero() && value < Rational::one() {
            Ok(Prob(value))
        } else {
            Err(SyntaxError::ProbabilityOutOfRange(value))
        }
    }

    /// Convenience constructor for `num/den`.
    pub fn ratio(num: i64, den: i64) -> Result<Self, SyntaxError> {
        if den == 0 {
            return Err(SyntaxError::ProbabilityOutOfRange(Rational::zero()));
        }
        Self::new(Rational::new(BigInt::from(num), BigInt::from(den)))
    }

    pub fn value(&self) -> &Rational {
        &self.0
    }

    /// `1 - p`.
    pub fn complement(&self) -> Rational {
        Rational::one() - &self.0
    }

    pub fn to_f64(&self) -> f64 {
        rational_to_f64(&self.0)
    }
}

impl fmt::Display for Prob {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}/{}", self.0.numer(), self.0.denom())
    }
}

/// Formats a rational as `num/den`, or just `num` for integers.
pub fn rational_string(r: &Rational) -> String {
    if r.is_integer() {
        r.numer().to_string()
    } else {
        format!("{}/{}", r.numer(), r.denom())
    }
}

pub fn rational_to_f64(r: &Rational) -> f64 {
    use num::ToPrimitive;
    r.to_f64().unwrap_or(f64::NAN)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Kind {
    Stream,
    Tree,
}

impl fmt::Display for Kind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Kind::Stream => "stream",
            Kind::Tree => "tree",
        })
    }
}

/// A term of the calculus. `Rec` is the definition's own recursion variable.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Term {
    Rec,
    Choice(Prob, Box<Term>, Box<Term>),
    Cons(Label, Box<Term>),
    Tail(Box<Term>),
    Mk(Label, Box<Term>, Box<Term>),
    Left(Box<Term>),
    Right(Box<Term>),
}

impl Term {
    pub fn choice(p: Prob, left: Term, right: Term) -> Term {
        Term::Choice(p, Box::new(left), Box::new(right))
    }

    pub fn cons(label: Label, tail: Term) -> Term {
        Term::Cons(label, Box::new(tail))
    }

    pub fn tail(arg: Term) -> Term {
        Term::Tail(Box::new(arg))
    }

    pub fn mk(label: Label, left: Term, right: Term) -> Term {
        Term::Mk(label, Box::new(left), Box::new(right))
    }

    pub fn left(arg: Term) -> Term {
        Term::Left(Box::new(arg))
    }

    pub fn right(arg: Term) -> Term {
        Term::Right(Box::new(arg))
    }

    /// Immediate subterms, left to right.
    pub fn children(&self) -> Vec<&Term> {
        match self {
            Term::Rec => vec![],
            Term::Choice(_, a, b) | Term::Mk(_, a, b) => vec![a, b],
            Term::Cons(_, e) | Term::Tail(e) | Term::Left(e) | Term::Right(e) => vec![e],
        }
    }

    /// The kind this node forces, if any.
    fn own_kind(&self) -> Option<(Kind, &'static str)> {
        match self {
            Term::Rec | Term::Choice(..) => None,
            Term::Cons(..) => Some((Kind::Stream, ":")),
            Term::Tail(_) => Some((Kind::Stream, "tail")),
            Term::Mk(..) => Some((Kind::Tree, "mk")),
            Term::Left(_) => Some((Kind::Tree, "left")),
            Term::Right(_) => Some((Kind::Tree, "right")),
        }
    }

    /// Checks that every node is compatible with `kind`.
    pub fn check_kind(&self, kind: Kind) -> Result<(), SyntaxError> {
        if let Some((k, construct)) = self.own_kind() {
            if k != kind {
                return Err(SyntaxError::MixedKind { construct, kind });
            }
        }
        self.children().into_iter().try_for_each(|c| c.check_kind(kind))
    }

    /// Number of constructor and destructor nodes.
    pub fn operator_count(&self) -> usize {
        let own = usize::from(self.own_kind().is_some());
        own + self.children().into_iter().map(Term::operator_count).sum::<usize>()
    }

    /// Number of nodes.
    pub fn size(&self) -> usize {
        1 + self.children().into_iter().map(Term::size).sum::<usize>()
    }

    pub fn is_constructor(&self) -> bool {
        matches!(self, Term::Cons(..) | Term::Mk(..))
    }
}

/// A recursive definition `name = body`.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Definition {
    name: String,
    kind: Kind,
    body: Term,
}

impl Definition {
    pub fn new(name: impl Into<String>, kind: Kind, body: Term) -> Result<Self, SyntaxError> {
        let name = name.into();
        if !is_identifier(&name) {
            return Err(SyntaxError::InvalidIdentifier(name));
        }
        body.check_kind(kind)?;
        Ok(Definition { name, kind, body })
    }

    pub fn stream(name: impl Into<String>, body: Term) -> Result<Self, SyntaxError> {
        Self::new(name, Kind::Stream, body)
    }

    pub fn tree(name: impl Into<String>, body: Term) -> Result<Self, SyntaxError> {
        Self::new(name, Kind::Tree, body)
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn kind(&self) -> Kind {
        self.kind
    }

    pub fn body(&self) -> &Term {
        &self.body
    }
}

/// Distinct syntactic subterms of the body in pre-order; the first
/// occurrence of each structurally-equal subterm fixes its position.
pub fn subterms(d: &Definition) -> Vec<Term> {
    fn walk<'a>(t: &'a Term, seen: &mut HashSet<&'a Term>, out: &mut Vec<Term>) {
        if seen.insert(t) {
            out.push(t.clone());
        }
        for c in t.children() {
            walk(c, seen, out);
        }
    }
    let mut seen = HashSet::new();
    let mut out = Vec::new();
    walk(d.body(), &mut seen, &mut out);
    out
}
