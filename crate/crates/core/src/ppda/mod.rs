//! Probabilistic pushdown automata for stream and tree definitions.
//!
//! Control states are the distinct subterms of the body; the stack counts
//! pending destructors (`tl` for streams, `lt`/`rt` for trees). A
//! configuration is outputting when its state is a constructor and its stack
//! is empty.

mod cross;
mod export;
mod run;

use std::collections::{BTreeMap, HashMap};
use std::fmt;

use num::{One, Zero};

use crate::syntax::{subterms, term_to_string, Definition, Kind, Rational, Term};

pub use cross::{cross_validate, CrossReport, CROSS_DEPTH_BOUND};
pub use export::{export, ExportError, ExportFormat};
pub use run::{sample_ppda_run, simulate_excursions, ExcursionStats, PpdaRun};

pub type StateId = usize;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Symbol {
    Tl,
    Lt,
    Rt,
}

impl fmt::Display for Symbol {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Symbol::Tl => "tl",
            Symbol::Lt => "lt",
            Symbol::Rt => "rt",
        })
    }
}

/// What a transition does to the top of the stack.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum StackOp {
    /// Remove the top symbol. Only valid on a nonempty stack.
    Pop,
    /// Leave the stack unchanged.
    Keep,
    /// Push a symbol over the current top.
    Push(Symbol),
}

impl StackOp {
    /// The string that replaces the read symbol, top first (empty-stack
    /// reads replace nothing).
    pub fn push_string(self, top: Option<Symbol>) -> Vec<Symbol> {
        match (self, top) {
            (StackOp::Pop, _) => vec![],
            (StackOp::Keep, None) => vec![],
            (StackOp::Keep, Some(a)) => vec![a],
            (StackOp::Push(y), None) => vec![y],
            (StackOp::Push(y), Some(a)) => vec![y, a],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Move {
    pub prob: Rational,
    pub next: StateId,
    pub op: StackOp,
}

/// A configuration. The stack is stored bottom first, so the top symbol is
/// the last element; displays print the top on the left.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Config {
    pub state: StateId,
    pub stack: Vec<Symbol>,
}

impl Config {
    pub fn new(state: StateId) -> Self {
        Config { state, stack: Vec::new() }
    }

    pub fn top(&self) -> Option<Symbol> {
        self.stack.last().copied()
    }
}

impl fmt::Display for Config {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "(q{}, ", self.state)?;
        if self.stack.is_empty() {
            f.write_str("⊥")?;
        } else {
            let syms: Vec<String> = self.stack.iter().rev().map(Symbol::to_string).collect();
            f.write_str(&syms.join("·"))?;
        }
        f.write_str(")")
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Ppda {
    name: String,
    kind: Kind,
    states: Vec<Term>,
    alphabet: Vec<Symbol>,
    /// Indexed by `row_index(state, top)`.
    rows: Vec<Vec<Move>>,
    initial: StateId,
}

impl Ppda {
    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn kind(&self) -> Kind {
        self.kind
    }

    pub fn states(&self) -> &[Term] {
        &self.states
    }

    pub fn state(&self, id: StateId) -> &Term {
        &self.states[id]
    }

    /// Renders a state in concrete syntax.
    pub fn state_name(&self, id: StateId) -> String {
        term_to_string(&self.states[id], &self.name)
    }

    pub fn alphabet(&self) -> &[Symbol] {
        &self.alphabet
    }

    pub fn initial(&self) -> Config {
        Config::new(self.initial)
    }

    /// Every possible top of stack: `None` (empty) followed by the alphabet.
    pub fn tops(&self) -> Vec<Option<Symbol>> {
        std::iter::once(None).chain(self.alphabet.iter().copied().map(Some)).collect()
    }

    fn row_index(&self, state: StateId, top: Option<Symbol>) -> usize {
        let width = self.alphabet.len() + 1;
        let col = match top {
            None => 0,
            Some(s) => {
                1 + self.alphabet.iter().position(|&a| a == s).expect("symbol outside alphabet")
            }
        };
        state * width + col
    }

    /// Transitions for `state` reading `top`.
    pub fn row(&self, state: StateId, top: Option<Symbol>) -> &[Move] {
        &self.rows[self.row_index(state, top)]
    }

    pub fn is_constructor_state(&self, id: StateId) -> bool {
        self.states[id].is_constructor()
    }

    pub fn is_recursion_state(&self, id: StateId) -> bool {
        self.states[id] == Term::Rec
    }
}

fn push_move(moves: &mut Vec<Move>, prob: Rational, next: StateId, op: StackOp) {
    match moves.iter_mut().find(|m| m.next == next && m.op == op) {
        Some(m) => m.prob += prob,
        None => moves.push(Move { prob, next, op }),
    }
}

/// Builds the automaton of `d`. Identical targets within a row are merged.
pub fn translate(d: &Definition) -> Ppda {
    let states = subterms(d);
    let index: HashMap<&Term, StateId> = states.iter().enumerate().map(|(i, t)| (t, i)).collect();
    let id = |t: &Term| index[t];
    let alphabet = match d.kind() {
        Kind::Stream => vec![Symbol::Tl],
        Kind::Tree => vec![Symbol::Lt, Symbol::Rt],
    };
    let initial = id(d.body());
    let half = Rational::new(1.into(), 2.into());
    let tops: Vec<Option<Symbol>> =
        std::iter::once(None).chain(alphabet.iter().copied().map(Some)).collect();

    let mut rows = Vec::with_capacity(states.len() * tops.len());
    for state in &states {
        for &top in &tops {
            let mut moves = Vec::new();
            match state {
                Term::Rec => push_move(&mut moves, Rational::one(), initial, StackOp::Keep),
                Term::Choice(p, a, b) => {
                    push_move(&mut moves, p.value().clone(), id(a), StackOp::Keep);
                    push_move(&mut moves, p.complement(), id(b), StackOp::Keep);
                }
                Term::Cons(_, e) => {
                    let op = if top.is_none() { StackOp::Keep } else { StackOp::Pop };
                    push_move(&mut moves, Rational::one(), id(e), op);
                }
                Term::Tail(e) => push_move(&mut moves, Rational::one(), id(e), StackOp::Push(Symbol::Tl)),
                Term::Left(e) => push_move(&mut moves, Rational::one(), id(e), StackOp::Push(Symbol::Lt)),
                Term::Right(e) => push_move(&mut moves, Rational::one(), id(e), StackOp::Push(Symbol::Rt)),
                Term::Mk(_, l, r) => match top {
                    None => {
                        push_move(&mut moves, half.clone(), id(l), StackOp::Keep);
                        push_move(&mut moves, half.clone(), id(r), StackOp::Keep);
                    }
                    Some(Symbol::Lt) => push_move(&mut moves, Rational::one(), id(l), StackOp::Pop),
                    Some(_) => push_move(&mut moves, Rational::one(), id(r), StackOp::Pop),
                },
            }
            rows.push(moves);
        }
    }
    Ppda { name: d.name().to_string(), kind: d.kind(), states, alphabet, rows, initial }
}

/// Applies one transition to `c`: exact distribution over successors.
pub fn ppda_step(p: &Ppda, c: &Config) -> BTreeMap<Config, Rational> {
    let top = c.top();
    let mut out = BTreeMap::new();
    for m in p.row(c.state, top) {
        let mut stack = c.stack.clone();
        if top.is_some() {
            stack.pop();
        }
        stack.extend(m.op.push_string(top).into_iter().rev());
        *out.entry(Config { state: m.next, stack }).or_insert_with(Rational::zero) +=
            m.prob.clone();
    }
    out
}

/// Constructor state with an empty stack.
pub fn is_outputting(p: &Ppda, c: &Config) -> bool {
    c.stack.is_empty() && p.is_constructor_state(c.state)
}
