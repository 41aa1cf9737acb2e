use nalgebra::{DMatrix, DVector};
use num::Zero;

use super::{EqSystem, VarId};
use crate::syntax::{rational_to_f64, Rational};

const NEWTON_MAX_ITER: usize = 1000;
const FALLBACK_MAX_ITER: usize = 100_000;

/// Numeric approximation of the least fixed point.
#[derive(Debug, Clone, PartialEq)]
pub struct Solution {
    pub values: Vec<f64>,
    pub iterations: usize,
    pub converged: bool,
}

/// Largest float not above `r`.
fn f64_down(r: &Rational) -> f64 {
    let f = rational_to_f64(r);
    match Rational::from_float(f) {
        Some(exact) if exact > *r => f.next_down(),
        _ => f,
    }
}

fn mul_down(a: f64, b: f64) -> f64 {
    let p = a * b;
    if a.mul_add(b, -p) < 0.0 {
        p.next_down()
    } else {
        p
    }
}

fn add_down(a: f64, b: f64) -> f64 {
    let s = a + b;
    let bb = s - a;
    let err = (a - (s - bb)) + (b - bb);
    if err < 0.0 {
        s.next_down()
    } else {
        s
    }
}

struct Compiled {
    /// Per equation: (coefficient rounded down, coefficient, variables).
    eqs: Vec<Vec<(f64, f64, Vec<VarId>)>>,
}

impl Compiled {
    fn new(s: &EqSystem) -> Self {
        let eqs = s
            .equations()
            .iter()
            .map(|eq| {
                eq.iter()
                    .map(|m| (f64_down(&m.coeff), rational_to_f64(&m.coeff), m.vars.clone()))
                    .collect()
            })
            .collect();
        Compiled { eqs }
    }

    fn eval_down(&self, i: VarId, x: &[f64]) -> f64 {
        self.eqs[i].iter().fold(0.0, |acc, (c, _, vars)| {
            add_down(acc, vars.iter().fold(*c, |p, &v| mul_down(p, x[v])))
        })
    }

    fn eval(&self, i: VarId, x: &[f64]) -> f64 {
        self.eqs[i]
            .iter()
            .map(|(_, c, vars)| vars.iter().fold(*c, |p, &v| p * x[v]))
            .sum()
    }

    /// Partial derivative of `F_i` with respect to `x_j`.
    fn derivative(&self, i: VarId, j: VarId, x: &[f64]) -> f64 {
        self.eqs[i]
            .iter()
            .map(|(_, c, vars)| match vars.as_slice() {
                [a] if *a == j => *c,
                [a, b] if *a == j && *b == j => 2.0 * c * x[j],
                [a, b] if *a == j => c * x[*b],
                [a, b] if *b == j => c * x[*a],
                _ => 0.0,
            })
            .sum()
    }
}

/// Kleene iteration `x <- F(x)` from zero. Every operation is rounded
/// toward zero, so each iterate is a lower bound of the least fixed point.
pub fn kleene_solve(s: &EqSystem, epsilon: f64, max_iter: usize) -> Solution {
    let c = Compiled::new(s);
    let mut x = vec![0.0; s.len()];
    let mut iterations = 0;
    let mut converged = s.is_empty();
    while !converged && iterations < max_iter {
        let y: Vec<f64> = (0..s.len()).map(|i| c.eval_down(i, &x).min(1.0)).collect();
        let change = y.iter().zip(&x).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        x = y;
        iterations += 1;
        converged = change < epsilon;
    }
    Solution { values: x, iterations, converged }
}

/// Newton iteration applied per strongly connected component, dependencies
/// first. A singular step falls back to Kleene iteration on the component.
pub fn newton_solve(s: &EqSystem, epsilon: f64) -> Solution {
    let c = Compiled::new(s);
    let mut x = vec![0.0; s.len()];
    let mut iterations = 0;
    let mut converged = true;
    for scc in s.sccs() {
        let recursive = scc.len() > 1
            || s.equation(scc[0]).iter().any(|m| m.vars.contains(&scc[0]));
        if !recursive {
            x[scc[0]] = c.eval(scc[0], &x).clamp(0.0, 1.0);
            iterations += 1;
            continue;
        }
        let (its, ok) = newton_component(&c, &scc, &mut x, epsilon);
        iterations += its;
        converged &= ok;
    }
    Solution { values: x, iterations, converged }
}

fn newton_component(c: &Compiled, scc: &[VarId], x: &mut [f64], epsilon: f64) -> (usize, bool) {
    let n = scc.len();
    for it in 1..=NEWTON_MAX_ITER {
        let residual = DVector::from_fn(n, |k, _| c.eval(scc[k], x) - x[scc[k]]);
        if residual.amax() == 0.0 {
            return (it, true);
        }
        let jac = DMatrix::from_fn(n, n, |r, k| {
            let d = if r == k { 1.0 } else { 0.0 };
            d - c.derivative(scc[r], scc[k], x)
        });
        let step = match jac.lu().solve(&residual) {
            Some(step) if step.iter().all(|v| v.is_finite()) => step,
            _ => return kleene_component(c, scc, x, epsilon, it),
        };
        for (k, &v) in scc.iter().enumerate() {
            x[v] = (x[v] + step[k]).clamp(0.0, 1.0);
        }
        if step.amax() < epsilon {
            return (it, true);
        }
    }
    (NEWTON_MAX_ITER, false)
}

fn kleene_component(
    c: &Compiled,
    scc: &[VarId],
    x: &mut [f64],
    epsilon: f64,
    done: usize,
) -> (usize, bool) {
    for it in 1..=FALLBACK_MAX_ITER {
        let y: Vec<f64> = scc.iter().map(|&v| c.eval(v, x).clamp(0.0, 1.0)).collect();
        let mut change: f64 = 0.0;
        for (k, &v) in scc.iter().enumerate() {
            change = change.max((y[k] - x[v]).abs());
            x[v] = y[k];
        }
        if change < epsilon {
            return (done + it, true);
        }
    }
    (done + FALLBACK_MAX_ITER, false)
}

/// Exact evaluation helper used by the certificate checks.
pub(crate) fn le_componentwise(a: &[Rational], b: &[Rational]) -> bool {
    a.iter().zip(b).all(|(x, y)| x <= y)
}

pub(crate) fn sum(values: impl IntoIterator<Item = Rational>) -> Rational {
    values.into_iter().fold(Rational::zero(), |a, b| a + b)
}
