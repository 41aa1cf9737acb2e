//! Exact finite-depth comparison between the term semantics and the
//! automaton.
//!
//! An automaton run is read as a sequence of events: a transition out of an
//! outputting configuration is an output, a transition out of the recursion
//! state is a silent unfolding, and every other transition is internal
//! bookkeeping (choices, destructor pushes, cancellations). Both sides are
//! expanded exhaustively to the same number of events and compared for exact
//! equality.

use std::collections::{BTreeMap, HashMap};

use num::{One, Zero};

use super::{is_outputting, ppda_step, translate, Config, Ppda};
use crate::semantics::{prefix_distribution_bounded, Event, SemanticsError, TreePolicy};
use crate::syntax::{rational_string, Definition, Rational, Term};

pub const CROSS_DEPTH_BOUND: usize = 12;

#[derive(Debug, Clone, PartialEq)]
pub struct CrossReport {
    pub equal: bool,
    pub depth: usize,
    pub semantics: BTreeMap<Vec<Event>, Rational>,
    pub automaton: BTreeMap<Vec<Event>, Rational>,
    /// Human-readable summary of the first mismatches, empty when equal.
    pub details: String,
}

fn event_of(p: &Ppda, c: &Config) -> Option<Event> {
    if is_outputting(p, c) {
        match p.state(c.state) {
            Term::Cons(a, _) | Term::Mk(a, _, _) => Some(Event::Out(a.clone())),
            _ => unreachable!("outputting state is a constructor"),
        }
    } else if p.is_recursion_state(c.state) {
        Some(Event::Unf)
    } else {
        None
    }
}

/// Follows internal transitions from `c` until the next event transition.
fn next_events(p: &Ppda, c: &Config, w: Rational, out: &mut Vec<(Event, Config, Rational)>) {
    let event = event_of(p, c);
    for (succ, prob) in ppda_step(p, c) {
        let w = &w * prob;
        match &event {
            Some(e) => out.push((e.clone(), succ, w)),
            None => next_events(p, &succ, w, out),
        }
    }
}

/// Distribution of the first `depth` events of automaton runs from the
/// initial configuration.
pub fn automaton_prefix_distribution(p: &Ppda, depth: usize) -> BTreeMap<Vec<Event>, Rational> {
    let mut frontier: HashMap<(Vec<Event>, Config), Rational> = HashMap::new();
    frontier.insert((Vec::new(), p.initial()), Rational::one());
    for _ in 0..depth {
        let mut next: HashMap<(Vec<Event>, Config), Rational> = HashMap::new();
        for ((events, c), w) in frontier {
            let mut succs = Vec::new();
            next_events(p, &c, w, &mut succs);
            for (e, c2, w2) in succs {
                let mut evs = events.clone();
                evs.push(e);
                *next.entry((evs, c2)).or_insert_with(Rational::zero) += w2;
            }
        }
        frontier = next;
    }
    let mut out = BTreeMap::new();
    for ((events, _), w) in frontier {
        *out.entry(events).or_insert_with(Rational::zero) += w;
    }
    out
}

fn describe(events: &[Event]) -> String {
    events.iter().map(Event::to_string).collect::<Vec<_>>().join(", ")
}

/// Compares the depth-`depth` event distributions of the semantics (with the
/// uniform tree policy) and of the translated automaton.
pub fn cross_validate(d: &Definition, depth: usize) -> Result<CrossReport, SemanticsError> {
    if depth > CROSS_DEPTH_BOUND {
        return Err(SemanticsError::DepthBoundExceeded { depth, bound: CROSS_DEPTH_BOUND });
    }
    let semantics = prefix_distribution_bounded(d, depth, &TreePolicy::Uniform, CROSS_DEPTH_BOUND)?;
    let automaton = automaton_prefix_distribution(&translate(d), depth);
    let equal = semantics == automaton;
    let mut details = String::new();
    if !equal {
        let zero = Rational::zero();
        let keys: std::collections::BTreeSet<_> = semantics.keys().chain(automaton.keys()).collect();
        for k in keys.into_iter().filter(|k| semantics.get(*k) != automaton.get(*k)).take(5) {
            details.push_str(&format!(
                "[{}]: semantics {} vs automaton {}\n",
                describe(k),
                rational_string(semantics.get(k).unwrap_or(&zero)),
                rational_string(automaton.get(k).unwrap_or(&zero)),
            ));
        }
    }
    Ok(CrossReport { equal, depth, semantics, automaton, details })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::syntax::parse_file;

    fn check(src: &str, depth: usize) -> CrossReport {
        cross_validate(&parse_file(src).unwrap()[0], depth).unwrap()
    }

    #[test]
    fn fair_walk_agrees() {
        let r = check("stream s = a : s (+ 1/2) tail(s)", 6);
        assert!(r.equal, "{}", r.details);
        assert!(r.semantics.len() > 4);
    }

    #[test]
    fn silent_loop_agrees() {
        let r = check("stream s = s", 10);
        assert!(r.equal);
        assert_eq!(r.automaton.len(), 1);
        assert_eq!(r.automaton[&vec![Event::Unf; 10]], Rational::one());
    }

    #[test]
    fn tree_agrees_under_uniform_policy() {
        assert!(check("tree t = left(t) (+ 1/4) mk(x, t, t)", 6).equal);
        assert!(check("tree t = left(t) (+ 1/4) mk(x, t, left(t))", 6).equal);
        assert!(check("tree t = right(left(t)) (+ 2/3) mk(x, mk(y, t, right(t)), left(t))", 6).equal);
    }

    #[test]
    fn depth_bound() {
        let d = parse_file("stream s = s").unwrap().remove(0);
        assert!(cross_validate(&d, 13).is_err());
    }

    #[test]
    fn mismatch_is_reported() {
        // Sanity check of the comparison itself: a different definition's
        // automaton must not match.
        let d = parse_file("stream s = a : s (+ 1/2) tail(s)").unwrap().remove(0);
        let other = parse_file("stream s = a : s (+ 1/3) tail(s)").unwrap().remove(0);
        let sem = prefix_distribution_bounded(&d, 3, &TreePolicy::Uniform, 12).unwrap();
        let aut = automaton_prefix_distribution(&translate(&other), 3);
        assert_ne!(sem, aut);
    }
}
