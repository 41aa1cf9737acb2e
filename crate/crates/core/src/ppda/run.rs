use std::collections::BTreeMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use super::{is_outputting, Config, Ppda, StackOp, StateId, Symbol};
use crate::syntax::rational_to_f64;

/// Rows with cumulative float probabilities for sampling.
struct Sampler<'a> {
    ppda: &'a Ppda,
    rows: Vec<Vec<(f64, StateId, StackOp)>>,
}

impl<'a> Sampler<'a> {
    fn new(ppda: &'a Ppda) -> Self {
        let rows = ppda
            .rows
            .iter()
            .map(|row| {
                let mut acc = 0.0;
                row.iter()
                    .map(|m| {
                        acc += rational_to_f64(&m.prob);
                        (acc, m.next, m.op)
                    })
                    .collect()
            })
            .collect();
        Sampler { ppda, rows }
    }

    fn advance<R: Rng>(&self, state: &mut StateId, stack: &mut Vec<Symbol>, rng: &mut R) {
        let top = stack.last().copied();
        let row = &self.rows[self.ppda.row_index(*state, top)];
        let (_, next, op) = if row.len() == 1 {
            row[0]
        } else {
            let u = rng.gen::<f64>() * row.last().map_or(1.0, |r| r.0);
            *row.iter().find(|r| u < r.0).unwrap_or(row.last().expect("empty row"))
        };
        match op {
            StackOp::Pop => {
                stack.pop();
            }
            StackOp::Keep => {}
            StackOp::Push(y) => stack.push(y),
        }
        *state = next;
    }
}

/// A sampled run: `configs[i]` is the configuration before step `i`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PpdaRun {
    pub configs: Vec<Config>,
    pub outputting: Vec<bool>,
}

/// Samples `horizon` configurations from the initial one. Deterministic in
/// `seed`.
pub fn sample_ppda_run(p: &Ppda, horizon: usize, seed: u64) -> PpdaRun {
    let sampler = Sampler::new(p);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut c = p.initial();
    let mut run = PpdaRun { configs: Vec::with_capacity(horizon), outputting: Vec::new() };
    for _ in 0..horizon {
        run.outputting.push(is_outputting(p, &c));
        run.configs.push(c.clone());
        sampler.advance(&mut c.state, &mut c.stack, &mut rng);
    }
    run
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExcursionStats {
    pub trials: usize,
    pub returned: usize,
    /// Number of returns per exit state.
    pub exits: BTreeMap<StateId, usize>,
}

impl ExcursionStats {
    pub fn return_fraction(&self) -> f64 {
        self.returned as f64 / self.trials as f64
    }
}

/// Runs `trials` excursions from `(state, [symbol])` and counts those that
/// pop the symbol within `horizon` steps. Trial `i` uses seed `seed + i`.
pub fn simulate_excursions(
    p: &Ppda,
    state: StateId,
    symbol: Symbol,
    trials: usize,
    horizon: usize,
    seed: u64,
) -> ExcursionStats {
    let sampler = Sampler::new(p);
    let results: Vec<Option<StateId>> = (0..trials as u64)
        .into_par_iter()
        .map(|i| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed.wrapping_add(i));
            let (mut q, mut stack) = (state, vec![symbol]);
            for _ in 0..horizon {
                sampler.advance(&mut q, &mut stack, &mut rng);
                if stack.is_empty() {
                    return Some(q);
                }
            }
            None
        })
        .collect();
    let mut exits = BTreeMap::new();
    for q in results.iter().flatten() {
        *exits.entry(*q).or_insert(0) += 1;
    }
    ExcursionStats { trials, returned: results.iter().flatten().count(), exits }
}
