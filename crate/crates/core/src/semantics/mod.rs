//! Probabilistic small-step semantics.
//!
//! [`step`] maps a term to an exact distribution over one-step outcomes: an
//! output with the remaining term(s), or a silent unfolding of the
//! recursion variable. Destructors are pushed inward until they meet a
//! constructor (which cancels them), a choice (which is distributed), or the
//! recursion variable (which is unfolded under the accumulated context).
//! Exactly one output is emitted per step.

mod policy;
mod sample;

use std::collections::{BTreeMap, HashMap};
use std::fmt;

use num::{One, Zero};
use thiserror::Error;

use crate::syntax::{Definition, Kind, Label, Rational, Term};

pub use policy::{Direction, DirectionWord, TreePolicy};
pub use sample::{monte_carlo, monte_carlo_with, sample_run, McConfig, McReport, Trace, VerdictHint};

/// Default cap on exhaustive expansion depth.
pub const DEFAULT_DEPTH_BOUND: usize = 16;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum SemanticsError {
    #[error("term kind does not match the {0} definition")]
    KindMismatch(Kind),
    #[error("depth {depth} exceeds the configured bound {bound}")]
    DepthBoundExceeded { depth: usize, bound: usize },
    #[error("invalid simulation parameters: {0}")]
    InvalidParameters(String),
}

/// One observation: an output symbol or a silent step.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Event {
    Out(Label),
    Unf,
}

impl fmt::Display for Event {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Event::Out(a) => write!(f, "Out {a}"),
            Event::Unf => f.write_str("Unf"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum StepOutcome {
    /// Stream output: head label and the remaining stream.
    StreamOutput(Label, Term),
    /// Tree output: root label and both children.
    TreeOutput(Label, Term, Term),
    /// Silent step.
    Unfold(Term),
}

impl StepOutcome {
    pub fn event(&self) -> Event {
        match self {
            StepOutcome::StreamOutput(a, _) | StepOutcome::TreeOutput(a, _, _) => {
                Event::Out(a.clone())
            }
            StepOutcome::Unfold(_) => Event::Unf,
        }
    }
}

/// Exact distribution over step outcomes; entries are positive and sum to 1.
pub type StepDist = BTreeMap<StepOutcome, Rational>;

/// Pending destructor in a context, outermost first.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub(crate) enum Destructor {
    Tail,
    Left,
    Right,
}

pub(crate) fn wrap(context: &[Destructor], core: Term) -> Term {
    context.iter().rev().fold(core, |t, d| match d {
        Destructor::Tail => Term::tail(t),
        Destructor::Left => Term::left(t),
        Destructor::Right => Term::right(t),
    })
}

fn add(dist: &mut StepDist, outcome: StepOutcome, weight: Rational) {
    let entry = dist.entry(outcome).or_insert_with(Rational::zero);
    *entry += weight;
}

fn step_in_context(
    d: &Definition,
    context: &mut Vec<Destructor>,
    core: &Term,
    weight: Rational,
    dist: &mut StepDist,
) {
    match core {
        Term::Choice(p, a, b) => {
            step_in_context(d, context, a, &weight * p.value(), dist);
            step_in_context(d, context, b, weight * p.complement(), dist);
        }
        Term::Tail(e) | Term::Left(e) | Term::Right(e) => {
            context.push(match core {
                Term::Tail(_) => Destructor::Tail,
                Term::Left(_) => Destructor::Left,
                _ => Destructor::Right,
            });
            step_in_context(d, context, e, weight, dist);
            context.pop();
        }
        Term::Cons(a, e) => match context.pop() {
            None => add(dist, StepOutcome::StreamOutput(a.clone(), (**e).clone()), weight),
            Some(top) => {
                step_in_context(d, context, e, weight, dist);
                context.push(top);
            }
        },
        Term::Mk(a, l, r) => match context.pop() {
            None => add(
                dist,
                StepOutcome::TreeOutput(a.clone(), (**l).clone(), (**r).clone()),
                weight,
            ),
            Some(top) => {
                let child = if top == Destructor::Left { l } else { r };
                step_in_context(d, context, child, weight, dist);
                context.push(top);
            }
        },
        Term::Rec => add(dist, StepOutcome::Unfold(wrap(context, d.body().clone())), weight),
    }
}

/// Exact one-step distribution of `t` under the definition `d`.
pub fn step(d: &Definition, t: &Term) -> Result<StepDist, SemanticsError> {
    t.check_kind(d.kind()).map_err(|_| SemanticsError::KindMismatch(d.kind()))?;
    let mut dist = StepDist::new();
    step_in_context(d, &mut Vec::new(), t, Rational::one(), &mut dist);
    Ok(dist)
}

/// Exact distribution of the first `depth` events, using the default depth
/// bound.
pub fn prefix_distribution(
    d: &Definition,
    depth: usize,
    policy: &TreePolicy,
) -> Result<BTreeMap<Vec<Event>, Rational>, SemanticsError> {
    prefix_distribution_bounded(d, depth, policy, DEFAULT_DEPTH_BOUND)
}

pub fn prefix_distribution_bounded(
    d: &Definition,
    depth: usize,
    policy: &TreePolicy,
    bound: usize,
) -> Result<BTreeMap<Vec<Event>, Rational>, SemanticsError> {
    if depth > bound {
        return Err(SemanticsError::DepthBoundExceeded { depth, bound });
    }
    let half = Rational::new(1.into(), 2.into());
    // (events so far, current term) -> probability
    let mut frontier: HashMap<(Vec<Event>, Term), Rational> = HashMap::new();
    frontier.insert((Vec::new(), d.body().clone()), Rational::one());

    for _ in 0..depth {
        let mut next: HashMap<(Vec<Event>, Term), Rational> = HashMap::new();
        let mut push = |events: Vec<Event>, t: Term, w: Rational| {
            *next.entry((events, t)).or_insert_with(Rational::zero) += w;
        };
        for ((events, term), w) in frontier {
            let outputs_so_far = events.iter().filter(|e| matches!(e, Event::Out(_))).count();
            for (outcome, p) in step(d, &term)? {
                let mut evs = events.clone();
                evs.push(outcome.event());
                let w = &w * p;
                match outcome {
                    StepOutcome::StreamOutput(_, rest) | StepOutcome::Unfold(rest) => {
                        push(evs, rest, w)
                    }
                    StepOutcome::TreeOutput(_, l, r) => match policy {
                        TreePolicy::Uniform => {
                            push(evs.clone(), l, &w * &half);
                            push(evs, r, w * &half);
                        }
                        TreePolicy::Word(word) => {
                            let child = match word.at(outputs_so_far) {
                                Direction::L => l,
                                Direction::R => r,
                            };
                            push(evs, child, w);
                        }
                    },
                }
            }
        }
        frontier = next;
    }

    let mut out: BTreeMap<Vec<Event>, Rational> = BTreeMap::new();
    for ((events, _), w) in frontier {
        *out.entry(events).or_insert_with(Rational::zero) += w;
    }
    Ok(out)
}
