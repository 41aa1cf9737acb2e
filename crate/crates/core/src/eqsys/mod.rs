//! Pop-probability equation systems of a translated automaton.
//!
//! The variable `[q, X, q']` is the probability that a run started in state
//! `q` with the single stack symbol `X` eventually pops `X` and lands in
//! `q'`. These probabilities are the least fixed point of a monotone
//! polynomial system `x = F(x)` with constant (pop), linear (symbol
//! preserving) and quadratic (push) monomials.
//!
//! Numeric solving is for reporting; the return classification in
//! [`classify_heads`] is decided in exact rational arithmetic.

mod classify;
mod clean;
mod simplex;
mod smt;
mod solve;
mod spectral;

use std::collections::{BTreeMap, HashMap};
use std::fmt;

use num::{One, Zero};
use petgraph::graph::DiGraph;

use crate::ppda::{Ppda, StackOp, StateId, Symbol};
use crate::syntax::{rational_string, rational_to_f64, Rational};

pub use classify::{
    certify_subreturn, classify_heads, ClassifyConfig, HeadClass, SubReturnProof,
};
pub use clean::{clean, Positivity};
pub use simplex::lp_feasible;
pub use smt::{run_solver, smt_export, SmtAnswer, SmtError, SMT_SOLVER_ENV};
pub use solve::{kleene_solve, newton_solve, Solution};
pub use spectral::spectral_le_one;

pub type VarId = usize;

/// The variable `[state, symbol, exit]`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Var {
    pub state: StateId,
    pub symbol: Symbol,
    pub exit: StateId,
}

impl Var {
    pub fn head(&self) -> Head {
        Head { state: self.state, symbol: self.symbol }
    }
}

/// Start of an excursion: a state with a single symbol on the stack.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Head {
    pub state: StateId,
    pub symbol: Symbol,
}

/// `coeff * Π vars`; `vars` is sorted and has at most two entries.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Monomial {
    pub coeff: Rational,
    pub vars: Vec<VarId>,
}

impl Monomial {
    pub fn new(coeff: Rational, mut vars: Vec<VarId>) -> Self {
        vars.sort_unstable();
        Monomial { coeff, vars }
    }

    pub fn constant(coeff: Rational) -> Self {
        Monomial { coeff, vars: vec![] }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EqSystem {
    vars: Vec<Var>,
    labels: Vec<String>,
    equations: Vec<Vec<Monomial>>,
    /// All heads of the automaton, including those without variables.
    heads: Vec<Head>,
}

impl fmt::Display for EqSystem {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, eq) in self.equations.iter().enumerate() {
            write!(f, "{} =", self.labels[i])?;
            if eq.is_empty() {
                f.write_str(" 0")?;
            }
            for (k, m) in eq.iter().enumerate() {
                f.write_str(if k == 0 { " " } else { " + " })?;
                let vars: Vec<&str> = m.vars.iter().map(|&v| self.labels[v].as_str()).collect();
                if vars.is_empty() || !m.coeff.is_one() {
                    write!(f, "{}", rational_string(&m.coeff))?;
                    if !vars.is_empty() {
                        f.write_str("·")?;
                    }
                }
                f.write_str(&vars.join("·"))?;
            }
            writeln!(f)?;
        }
        Ok(())
    }
}

fn merge_monomials(eq: Vec<Monomial>) -> Vec<Monomial> {
    let mut merged: Vec<Monomial> = Vec::new();
    for m in eq {
        if m.coeff.is_zero() {
            continue;
        }
        match merged.iter_mut().find(|x| x.vars == m.vars) {
            Some(x) => x.coeff += m.coeff,
            None => merged.push(m),
        }
    }
    merged
}

impl EqSystem {
    /// Builds a system from explicit equations. Monomials with identical
    /// variables are merged and zero coefficients dropped.
    ///
    /// Panics if a monomial refers to an unknown variable, has degree above
    /// two or a negative coefficient.
    pub fn new(vars: Vec<Var>, labels: Vec<String>, equations: Vec<Vec<Monomial>>) -> Self {
        assert_eq!(vars.len(), labels.len());
        assert_eq!(vars.len(), equations.len());
        for m in equations.iter().flatten() {
            assert!(m.vars.len() <= 2, "monomial degree above two");
            assert!(m.vars.iter().all(|&v| v < vars.len()), "unknown variable");
            assert!(m.coeff >= Rational::zero(), "negative coefficient");
        }
        let mut heads: Vec<Head> = vars.iter().map(Var::head).collect();
        heads.sort();
        heads.dedup();
        let equations = equations.into_iter().map(merge_monomials).collect();
        EqSystem { vars, labels, equations, heads }
    }

    pub fn len(&self) -> usize {
        self.vars.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vars.is_empty()
    }

    pub fn vars(&self) -> &[Var] {
        &self.vars
    }

    pub fn var(&self, id: VarId) -> Var {
        self.vars[id]
    }

    pub fn label(&self, id: VarId) -> &str {
        &self.labels[id]
    }

    pub fn equation(&self, id: VarId) -> &[Monomial] {
        &self.equations[id]
    }

    pub fn equations(&self) -> &[Vec<Monomial>] {
        &self.equations
    }

    pub fn heads(&self) -> &[Head] {
        &self.heads
    }

    pub fn find(&self, var: Var) -> Option<VarId> {
        self.vars.iter().position(|&v| v == var)
    }

    /// Variables of `head`, in system order.
    pub fn head_vars(&self, head: Head) -> Vec<VarId> {
        (0..self.len()).filter(|&i| self.vars[i].head() == head).collect()
    }

    /// Evaluates `F` exactly.
    pub fn eval_exact(&self, x: &[Rational]) -> Vec<Rational> {
        self.equations
            .iter()
            .map(|eq| {
                eq.iter()
                    .map(|m| m.vars.iter().fold(m.coeff.clone(), |acc, &v| acc * &x[v]))
                    .fold(Rational::zero(), |a, b| a + b)
            })
            .collect()
    }

    /// Evaluates `F` in floating point.
    pub fn eval_f64(&self, x: &[f64]) -> Vec<f64> {
        self.equations
            .iter()
            .map(|eq| {
                eq.iter()
                    .map(|m| m.vars.iter().fold(rational_to_f64(&m.coeff), |acc, &v| acc * x[v]))
                    .sum()
            })
            .collect()
    }

    /// Dependency graph: an edge `i -> j` when `x_j` occurs in `F_i`.
    pub(crate) fn dependency_graph(&self) -> DiGraph<VarId, ()> {
        let mut g = DiGraph::new();
        let nodes: Vec<_> = (0..self.len()).map(|i| g.add_node(i)).collect();
        for (i, eq) in self.equations.iter().enumerate() {
            let mut targets: Vec<VarId> = eq.iter().flat_map(|m| m.vars.iter().copied()).collect();
            targets.sort_unstable();
            targets.dedup();
            for j in targets {
                g.add_edge(nodes[i], nodes[j], ());
            }
        }
        g
    }

    /// Strongly connected components, dependencies first.
    pub fn sccs(&self) -> Vec<Vec<VarId>> {
        let g = self.dependency_graph();
        petgraph::algo::tarjan_scc(&g)
            .into_iter()
            .map(|c| {
                let mut vs: Vec<VarId> = c.into_iter().map(|n| g[n]).collect();
                vs.sort_unstable();
                vs
            })
            .collect()
    }

    /// Every variable reachable from `roots` in the dependency graph.
    pub fn dependency_closure(&self, roots: &[VarId]) -> Vec<VarId> {
        let mut seen = vec![false; self.len()];
        let mut stack: Vec<VarId> = roots.to_vec();
        while let Some(i) = stack.pop() {
            if std::mem::replace(&mut seen[i], true) {
                continue;
            }
            stack.extend(self.equations[i].iter().flat_map(|m| m.vars.iter().copied()));
        }
        (0..self.len()).filter(|&i| seen[i]).collect()
    }

    /// Keeps the variables for which `keep` holds and drops every monomial
    /// mentioning a removed variable. Returns the old-to-new index map.
    pub(crate) fn restrict(&self, keep: &[bool]) -> (EqSystem, Vec<Option<VarId>>) {
        let mut map = vec![None; self.len()];
        let mut next = 0;
        for i in 0..self.len() {
            if keep[i] {
                map[i] = Some(next);
                next += 1;
            }
        }
        let mut vars = Vec::new();
        let mut labels = Vec::new();
        let mut equations = Vec::new();
        for i in (0..self.len()).filter(|&i| keep[i]) {
            vars.push(self.vars[i]);
            labels.push(self.labels[i].clone());
            let eq = self.equations[i]
                .iter()
                .filter_map(|m| {
                    let vs: Option<Vec<VarId>> = m.vars.iter().map(|&v| map[v]).collect();
                    vs.map(|vars| Monomial { coeff: m.coeff.clone(), vars })
                })
                .collect();
            equations.push(eq);
        }
        let sys = EqSystem { vars, labels, equations, heads: self.heads.clone() };
        (sys, map)
    }
}

/// Builds the pop-probability system of `p`, with one variable per
/// `(state, symbol, exit)` triple.
pub fn build_system(p: &Ppda) -> EqSystem {
    let n = p.states().len();
    let alphabet = p.alphabet().to_vec();
    let mut index: HashMap<Var, VarId> = HashMap::new();
    let mut vars = Vec::new();
    for state in 0..n {
        for &symbol in &alphabet {
            for exit in 0..n {
                let v = Var { state, symbol, exit };
                index.insert(v, vars.len());
                vars.push(v);
            }
        }
    }
    let labels = vars
        .iter()
        .map(|v| format!("[{}, {}, {}]", p.state_name(v.state), v.symbol, p.state_name(v.exit)))
        .collect();
    let id = |state, symbol, exit| index[&Var { state, symbol, exit }];

    let mut equations = Vec::with_capacity(vars.len());
    for v in &vars {
        let mut eq = Vec::new();
        for m in p.row(v.state, Some(v.symbol)) {
            match m.op {
                StackOp::Pop => {
                    if m.next == v.exit {
                        eq.push(Monomial::constant(m.prob.clone()));
                    }
                }
                StackOp::Keep => {
                    eq.push(Monomial::new(m.prob.clone(), vec![id(m.next, v.symbol, v.exit)]));
                }
                StackOp::Push(y) => {
                    for s in 0..n {
                        eq.push(Monomial::new(
                            m.prob.clone(),
                            vec![id(m.next, y, s), id(s, v.symbol, v.exit)],
                        ));
                    }
                }
            }
        }
        equations.push(merge_monomials(eq));
    }
    let heads = (0..n)
        .flat_map(|state| alphabet.iter().map(move |&symbol| Head { state, symbol }))
        .collect();
    EqSystem { vars, labels, equations, heads }
}

/// Variables with positive coefficient mass, per head, for quick summaries.
pub fn head_variables(s: &EqSystem) -> BTreeMap<Head, Vec<VarId>> {
    let mut out: BTreeMap<Head, Vec<VarId>> = s.heads().iter().map(|&h| (h, vec![])).collect();
    for (i, v) in s.vars().iter().enumerate() {
        out.entry(v.head()).or_default().push(i);
    }
    out
}

/// Helper for tests and examples: a system over synthetic variables
/// `[i, tl, 0]` named `labels[i]`.
pub fn synthetic_system(labels: &[&str], equations: Vec<Vec<Monomial>>) -> EqSystem {
    let vars = (0..labels.len())
        .map(|i| Var { state: i, symbol: Symbol::Tl, exit: 0 })
        .collect();
    EqSystem::new(vars, labels.iter().map(|s| s.to_string()).collect(), equations)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ppda::translate;
    use crate::syntax::parse_file;
    use num::BigInt;

    pub(crate) fn q(n: i64, d: i64) -> Rational {
        Rational::new(BigInt::from(n), BigInt::from(d))
    }

    fn system(src: &str) -> (Ppda, EqSystem) {
        let p = translate(&parse_file(src).unwrap()[0]);
        let s = build_system(&p);
        (p, s)
    }

    fn var_named(p: &Ppda, s: &EqSystem, state: &str, sym: Symbol, exit: &str) -> VarId {
        let id = |name: &str| (0..p.states().len()).find(|&i| p.state_name(i) == name).unwrap();
        s.find(Var { state: id(state), symbol: sym, exit: id(exit) }).unwrap()
    }

    #[test]
    fn biased_walk_equations() {
        let (p, s) = system("stream s = a : s (+ 1/4) tail(s)");
        let rec = var_named(&p, &s, "s", Symbol::Tl, "s");
        let choice = var_named(&p, &s, "a : s (+ 1/4) tail(s)", Symbol::Tl, "s");
        let cons = var_named(&p, &s, "a : s", Symbol::Tl, "s");
        let tail = var_named(&p, &s, "tail(s)", Symbol::Tl, "s");
        assert_eq!(s.equation(rec), &[Monomial::new(q(1, 1), vec![choice])]);
        assert_eq!(
            s.equation(choice),
            &[Monomial::new(q(1, 4), vec![cons]), Monomial::new(q(3, 4), vec![tail])]
        );
        assert_eq!(s.equation(cons), &[Monomial::constant(q(1, 1))]);
        // tail pushes tl and moves to s: sum over intermediate states.
        let eq = s.equation(tail);
        assert_eq!(eq.len(), p.states().len());
        assert!(eq.iter().any(|m| m.vars == vec![rec, rec] && m.coeff == q(1, 1)));
    }

    #[test]
    fn tree_head_equation() {
        // [t, lt, t] -> choice -> 1/4 left(t) (push lt) + 3/4 mk (pop to t).
        let (p, s) = system("tree t = left(t) (+ 1/4) mk(x, t, t)");
        let choice = var_named(&p, &s, "left(t) (+ 1/4) mk(x, t, t)", Symbol::Lt, "t");
        let left = var_named(&p, &s, "left(t)", Symbol::Lt, "t");
        let mk = var_named(&p, &s, "mk(x, t, t)", Symbol::Lt, "t");
        assert_eq!(
            s.equation(choice),
            &[Monomial::new(q(1, 4), vec![left]), Monomial::new(q(3, 4), vec![mk])]
        );
        assert_eq!(s.equation(mk), &[Monomial::constant(q(1, 1))]);
    }

    #[test]
    fn heads_cover_states_times_alphabet() {
        let (p, s) = system("tree t = left(t) (+ 1/4) mk(x, t, left(t))");
        assert_eq!(s.heads().len(), p.states().len() * 2);
        assert_eq!(s.len(), p.states().len() * p.states().len() * 2);
    }

    #[test]
    fn coefficient_mass_at_most_one_per_row() {
        // Each equation draws its coefficients from one probability row;
        // constants plus linear coefficients never exceed one.
        for src in [
            "stream s = a : s (+ 1/3) tail(tail(s))",
            "tree t = left(right(t)) (+ 1/5) mk(x, t, left(t))",
        ] {
            let (p, s) = system(src);
            for (i, v) in s.vars().iter().enumerate() {
                let row_mass: Rational =
                    p.row(v.state, Some(v.symbol)).iter().map(|m| m.prob.clone()).sum();
                assert_eq!(row_mass, q(1, 1));
                assert!(s.equation(i).iter().all(|m| m.coeff > q(0, 1) && m.coeff <= q(1, 1)));
            }
        }
    }

    #[test]
    fn display_lists_equations() {
        let s = synthetic_system(
            &["z"],
            vec![vec![Monomial::constant(q(1, 4)), Monomial::new(q(3, 4), vec![0, 0])]],
        );
        assert_eq!(s.to_string(), "z = 1/4 + 3/4·z·z\n");
    }
}
