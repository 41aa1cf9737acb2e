use num::{One, Signed, Zero};
use petgraph::graph::DiGraph;

use super::simplex::lp_feasible;
use crate::syntax::Rational;

/// Decides `ρ(B) <= 1` exactly for a nonnegative square matrix.
///
/// An irreducible `B` has spectral radius at most one iff some `v >= 1`
/// satisfies `B v <= v`. With `irreducible == false` the matrix is split
/// into its strongly connected blocks first.
pub fn spectral_le_one(b: &[Vec<Rational>], irreducible: bool) -> bool {
    assert!(b.iter().all(|row| row.len() == b.len()), "matrix must be square");
    assert!(b.iter().flatten().all(|x| !x.is_negative()), "matrix must be nonnegative");
    if irreducible {
        return collatz_wielandt(b);
    }
    let mut g = DiGraph::<usize, ()>::new();
    let nodes: Vec<_> = (0..b.len()).map(|i| g.add_node(i)).collect();
    for (i, row) in b.iter().enumerate() {
        for (j, x) in row.iter().enumerate() {
            if !x.is_zero() {
                g.add_edge(nodes[i], nodes[j], ());
            }
        }
    }
    petgraph::algo::tarjan_scc(&g).into_iter().all(|block| {
        let idx: Vec<usize> = block.into_iter().map(|n| g[n]).collect();
        let sub: Vec<Vec<Rational>> =
            idx.iter().map(|&i| idx.iter().map(|&j| b[i][j].clone()).collect()).collect();
        collatz_wielandt(&sub)
    })
}

/// Feasibility of `B v <= v, v >= 1`, written as `(B - I) w <= 1 - B 1`
/// over `w = v - 1 >= 0`.
fn collatz_wielandt(b: &[Vec<Rational>]) -> bool {
    let n = b.len();
    let a: Vec<Vec<Rational>> = (0..n)
        .map(|i| {
            (0..n)
                .map(|j| if i == j { &b[i][j] - Rational::one() } else { b[i][j].clone() })
                .collect()
        })
        .collect();
    let rhs: Vec<Rational> = b
        .iter()
        .map(|row| Rational::one() - row.iter().fold(Rational::zero(), |s, x| s + x))
        .collect();
    match lp_feasible(&a, &rhs) {
        Some(w) => {
            let v: Vec<Rational> = w.into_iter().map(|x| x + Rational::one()).collect();
            debug_assert!(b.iter().zip(&v).all(|(row, vi)| {
                row.iter().zip(&v).fold(Rational::zero(), |s, (x, y)| s + x * y) <= *vi
            }));
            true
        }
        None => false,
    }
}
