//! Seeded random definitions for fuzzing and property tests.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{Definition, Kind, Label, Prob, Term};

fn term<R: Rng>(rng: &mut R, kind: Kind, depth: usize) -> Term {
    if depth == 0 || rng.gen_bool(0.25) {
        return Term::Rec;
    }
    let label = |rng: &mut R| Label::new(["a", "b"][rng.gen_range(0..2)]).expect("valid label");
    match rng.gen_range(0..4) {
        0 => {
            let den = rng.gen_range(2..=8);
            let p = Prob::ratio(rng.gen_range(1..den), den).expect("inside the open interval");
            Term::choice(p, term(rng, kind, depth - 1), term(rng, kind, depth - 1))
        }
        1 => match kind {
            Kind::Stream => Term::cons(label(rng), term(rng, kind, depth - 1)),
            Kind::Tree => {
                Term::mk(label(rng), term(rng, kind, depth - 1), term(rng, kind, depth - 1))
            }
        },
        _ => match (kind, rng.gen_bool(0.5)) {
            (Kind::Stream, _) => Term::tail(term(rng, kind, depth - 1)),
            (Kind::Tree, true) => Term::left(term(rng, kind, depth - 1)),
            (Kind::Tree, false) => Term::right(term(rng, kind, depth - 1)),
        },
    }
}

/// A valid definition named `s` (streams) or `t` (trees) whose body has
/// depth at most `max_depth`. Deterministic in `seed`.
pub fn random_definition(seed: u64, kind: Kind, max_depth: usize) -> Definition {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let body = term(&mut rng, kind, max_depth);
    let name = match kind {
        Kind::Stream => "s",
        Kind::Tree => "t",
    };
    Definition::new(name, kind, body).expect("generated terms are kind-homogeneous")
}
