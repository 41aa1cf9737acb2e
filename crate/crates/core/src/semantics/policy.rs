//! Path policies for tree runs: which child to follow after each output.

use std::fmt;
use std::str::FromStr;

use thiserror::Error;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Direction {
    L,
    R,
}

impl fmt::Display for Direction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Direction::L => "L",
            Direction::R => "R",
        })
    }
}

/// An ultimately periodic word `prefix · cycle^ω` over `{L, R}`.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct DirectionWord {
    prefix: Vec<Direction>,
    cycle: Vec<Direction>,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("invalid direction word `{0}`: expected e.g. `L^w`, `(LR)^w` or `RR(L)^w`")]
pub struct DirectionWordError(String);

impl DirectionWord {
    /// `cycle` must be nonempty.
    pub fn new(prefix: Vec<Direction>, cycle: Vec<Direction>) -> Option<Self> {
        (!cycle.is_empty()).then_some(DirectionWord { prefix, cycle })
    }

    /// Direction taken at the `i`-th output (0-based).
    pub fn at(&self, i: usize) -> Direction {
        if i < self.prefix.len() {
            self.prefix[i]
        } else {
            self.cycle[(i - self.prefix.len()) % self.cycle.len()]
        }
    }
}

impl fmt::Display for DirectionWord {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for d in &self.prefix {
            write!(f, "{d}")?;
        }
        f.write_str("(")?;
        for d in &self.cycle {
            write!(f, "{d}")?;
        }
        f.write_str(")^w")
    }
}

impl FromStr for DirectionWord {
    type Err = DirectionWordError;

    /// Accepts `PREFIX X^w` where `X` is a single letter or a parenthesized
    /// group; `^ω` is accepted as well as `^w`.
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let err = || DirectionWordError(s.to_string());
        let compact: String = s.chars().filter(|c| !c.is_whitespace()).collect();
        let body = compact
            .strip_suffix("^w")
            .or_else(|| compact.strip_suffix("^ω"))
            .ok_or_else(err)?;
        if !body.is_ascii() {
            return Err(err());
        }
        let letters = |t: &str| -> Result<Vec<Direction>, DirectionWordError> {
            t.chars()
                .map(|c| match c {
                    'L' | 'l' => Ok(Direction::L),
                    'R' | 'r' => Ok(Direction::R),
                    _ => Err(err()),
                })
                .collect()
        };
        let (prefix, cycle) = if let Some(inner) = body.strip_suffix(')') {
            let open = inner.rfind('(').ok_or_else(err)?;
            (letters(&inner[..open])?, letters(&inner[open + 1..])?)
        } else {
            let split = body.len().checked_sub(1).ok_or_else(err)?;
            (letters(&body[..split])?, letters(&body[split..])?)
        };
        DirectionWord::new(prefix, cycle).ok_or_else(err)
    }
}

/// How tree runs pick a child after an output.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub enum TreePolicy {
    /// Each child with probability 1/2.
    #[default]
    Uniform,
    Word(DirectionWord),
}

impl FromStr for TreePolicy {
    type Err = DirectionWordError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        if s.eq_ignore_ascii_case("uniform") {
            Ok(TreePolicy::Uniform)
        } else {
            s.parse().map(TreePolicy::Word)
        }
    }
}
