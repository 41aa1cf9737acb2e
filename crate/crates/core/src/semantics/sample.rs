//! Seeded sampling of runs and the Monte Carlo falsifier.
//!
//! Runs are simulated on a compiled form of the body: the current term is
//! always a destructor context wrapped around a subterm of the body, so a
//! machine state is a context stack plus a node index.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use super::{Destructor, Direction, Event, SemanticsError, TreePolicy};
use crate::syntax::{Definition, Label, Term};

#[derive(Debug, Clone, Copy)]
enum Node {
    Rec,
    Choice { p: f64, a: usize, b: usize },
    Cons { label: usize, tail: usize },
    Tail(usize),
    Mk { label: usize, l: usize, r: usize },
    Left(usize),
    Right(usize),
}

struct Compiled {
    nodes: Vec<Node>,
    labels: Vec<Label>,
}

const ROOT: usize = 0;

impl Compiled {
    fn new(d: &Definition) -> Self {
        let mut c = Compiled { nodes: Vec::new(), labels: Vec::new() };
        c.add(d.body());
        c
    }

    fn label(&mut self, l: &Label) -> usize {
        match self.labels.iter().position(|x| x == l) {
            Some(i) => i,
            None => {
                self.labels.push(l.clone());
                self.labels.len() - 1
            }
        }
    }

    fn add(&mut self, t: &Term) -> usize {
        let id = self.nodes.len();
        self.nodes.push(Node::Rec);
        let node = match t {
            Term::Rec => Node::Rec,
            Term::Choice(p, a, b) => {
                let (a, b) = (self.add(a), self.add(b));
                Node::Choice { p: p.to_f64(), a, b }
            }
            Term::Cons(l, e) => {
                let label = self.label(l);
                Node::Cons { label, tail: self.add(e) }
            }
            Term::Tail(e) => Node::Tail(self.add(e)),
            Term::Mk(lab, l, r) => {
                let label = self.label(lab);
                let (l, r) = (self.add(l), self.add(r));
                Node::Mk { label, l, r }
            }
            Term::Left(e) => Node::Left(self.add(e)),
            Term::Right(e) => Node::Right(self.add(e)),
        };
        self.nodes[id] = node;
        id
    }
}

enum Tick {
    Out(usize, Option<Direction>),
    Unf,
}

struct Machine<'a> {
    prog: &'a Compiled,
    policy: &'a TreePolicy,
    context: Vec<Destructor>,
    core: usize,
    outputs: usize,
}

impl<'a> Machine<'a> {
    fn new(prog: &'a Compiled, policy: &'a TreePolicy) -> Self {
        Machine { prog, policy, context: Vec::new(), core: ROOT, outputs: 0 }
    }

    fn tick<R: Rng>(&mut self, rng: &mut R) -> Tick {
        loop {
            match self.prog.nodes[self.core] {
                Node::Choice { p, a, b } => {
                    self.core = if rng.gen::<f64>() < p { a } else { b };
                }
                Node::Tail(e) => {
                    self.context.push(Destructor::Tail);
                    self.core = e;
                }
                Node::Left(e) => {
                    self.context.push(Destructor::Left);
                    self.core = e;
                }
                Node::Right(e) => {
                    self.context.push(Destructor::Right);
                    self.core = e;
                }
                Node::Cons { label, tail } => {
                    self.core = tail;
                    if self.context.pop().is_none() {
                        self.outputs += 1;
                        return Tick::Out(label, None);
                    }
                }
                Node::Mk { label, l, r } => match self.context.pop() {
                    None => {
                        let dir = match self.policy {
                            TreePolicy::Uniform => {
                                if rng.gen::<bool>() {
                                    Direction::L
                                } else {
                                    Direction::R
                                }
                            }
                            TreePolicy::Word(w) => w.at(self.outputs),
                        };
                        self.outputs += 1;
                        self.core = if dir == Direction::L { l } else { r };
                        return Tick::Out(label, Some(dir));
                    }
                    Some(Destructor::Left) => self.core = l,
                    Some(_) => self.core = r,
                },
                Node::Rec => {
                    self.core = ROOT;
                    return Tick::Unf;
                }
            }
        }
    }
}

/// A sampled run prefix. `directions` has one entry per tree output.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Trace {
    pub events: Vec<Event>,
    pub directions: Vec<Direction>,
}

/// Samples `horizon` steps starting from the body. Deterministic in `seed`.
pub fn sample_run(d: &Definition, horizon: usize, seed: u64, policy: &TreePolicy) -> Trace {
    let prog = Compiled::new(d);
    let mut machine = Machine::new(&prog, policy);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut trace = Trace { events: Vec::with_capacity(horizon), directions: Vec::new() };
    for _ in 0..horizon {
        match machine.tick(&mut rng) {
            Tick::Out(label, dir) => {
                trace.events.push(Event::Out(prog.labels[label].clone()));
                trace.directions.extend(dir);
            }
            Tick::Unf => trace.events.push(Event::Unf),
        }
    }
    trace
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum VerdictHint {
    NoEvidenceAgainstAsp,
    EvidenceAgainstAsp,
}

/// Thresholds of the falsifier.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct McConfig {
    /// Evidence against ASP when more than this fraction of runs is silent
    /// over the second half of the horizon.
    pub silence_threshold: f64,
    /// Evidence against ASP when the mean least-squares slope of cumulative
    /// outputs over the second half falls below this (outputs per step).
    pub min_tail_slope: Option<f64>,
}

impl Default for McConfig {
    fn default() -> Self {
        McConfig { silence_threshold: 0.05, min_tail_slope: Some(1e-3) }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct McReport {
    pub runs: usize,
    pub horizon: usize,
    pub seed: u64,
    pub output_counts: Vec<u64>,
    /// Mean outputs per step.
    pub mean_rate: f64,
    /// Fraction of runs with no output in the second half of the horizon.
    pub tail_silence: f64,
    /// Mean least-squares slope of cumulative outputs over the second half.
    pub tail_slope: f64,
    pub verdict_hint: VerdictHint,
}

struct RunStats {
    outputs: u64,
    tail_outputs: u64,
    tail_slope: f64,
}

fn simulate(prog: &Compiled, policy: &TreePolicy, horizon: usize, seed: u64) -> RunStats {
    let mut machine = Machine::new(prog, policy);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let half = horizon / 2;
    let mut outputs = 0u64;
    let mut at_half = 0u64;
    // Regression of y_t (cumulative outputs) on t over t in [half, horizon).
    let (mut sum_y, mut sum_ty) = (0f64, 0f64);
    for t in 0..horizon {
        if t == half {
            at_half = outputs;
        }
        if let Tick::Out(..) = machine.tick(&mut rng) {
            outputs += 1;
        }
        if t >= half {
            let y = outputs as f64;
            sum_y += y;
            sum_ty += t as f64 * y;
        }
    }
    let n = (horizon - half) as f64;
    let t_mean = (half + horizon - 1) as f64 / 2.0;
    let s_tt = n * (n * n - 1.0) / 12.0;
    let tail_slope = if s_tt > 0.0 { (sum_ty - t_mean * sum_y) / s_tt } else { 0.0 };
    RunStats { outputs, tail_outputs: outputs - at_half, tail_slope }
}

/// Monte Carlo falsifier with the default thresholds.
pub fn monte_carlo(
    d: &Definition,
    runs: usize,
    horizon: usize,
    seed: u64,
    policy: &TreePolicy,
) -> Result<McReport, SemanticsError> {
    monte_carlo_with(d, runs, horizon, seed, policy, &McConfig::default())
}

/// Runs `runs` independent simulations (run `i` uses seed `seed + i`) in
/// parallel. The hint is statistical evidence only.
pub fn monte_carlo_with(
    d: &Definition,
    runs: usize,
    horizon: usize,
    seed: u64,
    policy: &TreePolicy,
    config: &McConfig,
) -> Result<McReport, SemanticsError> {
    if runs == 0 {
        return Err(SemanticsError::InvalidParameters("runs must be at least 1".into()));
    }
    if horizon < 100 {
        return Err(SemanticsError::InvalidParameters("horizon must be at least 100".into()));
    }
    let prog = Compiled::new(d);
    let stats: Vec<RunStats> = (0..runs as u64)
        .into_par_iter()
        .map(|i| simulate(&prog, policy, horizon, seed.wrapping_add(i)))
        .collect();

    let silent = stats.iter().filter(|s| s.tail_outputs == 0).count();
    let tail_silence = silent as f64 / runs as f64;
    let tail_slope = stats.iter().map(|s| s.tail_slope).sum::<f64>() / runs as f64;
    let total: u64 = stats.iter().map(|s| s.outputs).sum();
    let mean_rate = total as f64 / (runs as f64 * horizon as f64);
    let flat = config.min_tail_slope.is_some_and(|m| tail_slope < m);
    let verdict_hint = if tail_silence > config.silence_threshold || flat {
        VerdictHint::EvidenceAgainstAsp
    } else {
        VerdictHint::NoEvidenceAgainstAsp
    };
    Ok(McReport {
        runs,
        horizon,
        seed,
        output_counts: stats.iter().map(|s| s.outputs).collect(),
        mean_rate,
        tail_silence,
        tail_slope,
        verdict_hint,
    })
}
