//! Exact return classification of excursion heads.

use std::collections::BTreeMap;
use std::path::PathBuf;

use nalgebra::{DMatrix, DVector};
use num::{BigInt, One, Signed, Zero};

use super::solve::{le_componentwise, sum};
use super::{kleene_solve, newton_solve, run_solver, smt_export, spectral_le_one};
use super::{EqSystem, Head, SmtAnswer, Solution, Var, VarId};
use crate::syntax::{rational_to_f64, Rational};

#[derive(Debug, Clone, PartialEq)]
pub struct ClassifyConfig {
    pub epsilon: f64,
    pub max_iter: usize,
    pub smt_solver: Option<PathBuf>,
}

impl Default for ClassifyConfig {
    fn default() -> Self {
        ClassifyConfig { epsilon: 1e-9, max_iter: 100_000, smt_solver: None }
    }
}

/// Why a head returns with probability below one.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum SubReturnProof {
    /// The head has no variable with positive probability.
    NoReturn,
    /// An exactly verified pre-fixed point over the head's dependencies.
    PreFixedPoint(Vec<(Var, Rational)>),
    /// The exact criticality test failed but no pre-fixed point was found.
    Spectral,
    /// The external solver found a fixed point with return mass below one.
    Solver,
}

#[derive(Debug, Clone, PartialEq)]
pub enum HeadClass {
    AlmostSureReturn,
    SubReturn(SubReturnProof),
    Unknown { kleene_lower: f64, iterations: usize },
}

impl HeadClass {
    pub fn is_almost_sure(&self) -> bool {
        matches!(self, HeadClass::AlmostSureReturn)
    }

    pub fn is_sub(&self) -> bool {
        matches!(self, HeadClass::SubReturn(_))
    }

    pub fn is_unknown(&self) -> bool {
        matches!(self, HeadClass::Unknown { .. })
    }
}

fn eval_one(s: &EqSystem, i: VarId, x: &[Rational]) -> Rational {
    sum(s.equation(i).iter().map(|m| m.vars.iter().fold(m.coeff.clone(), |acc, &v| acc * &x[v])))
}

/// Checks in exact arithmetic that `candidate` is a pre-fixed point on
/// every variable `h` depends on and that it gives `h` total mass below
/// one. Success bounds the least fixed point, so `h` is sub-returning.
pub fn certify_subreturn(s: &EqSystem, h: Head, candidate: &[Rational]) -> bool {
    if candidate.len() != s.len() {
        return false;
    }
    let roots = s.head_vars(h);
    let closure = s.dependency_closure(&roots);
    let unit = |x: &Rational| !x.is_negative() && *x <= Rational::one();
    if !closure.iter().all(|&i| unit(&candidate[i])) {
        return false;
    }
    let image: Vec<Rational> = closure.iter().map(|&i| eval_one(s, i, candidate)).collect();
    let bound: Vec<Rational> = closure.iter().map(|&i| candidate[i].clone()).collect();
    le_componentwise(&image, &bound)
        && sum(roots.iter().map(|&i| candidate[i].clone())) < Rational::one()
}

/// The rational with the smallest denominator in `[lo, hi]`.
fn simplest_between(lo: &Rational, hi: &Rational) -> Rational {
    let fl = lo.floor();
    if fl == *lo || fl.clone() + Rational::one() <= *hi {
        return if fl == *lo { fl } else { fl + Rational::one() };
    }
    let inner = simplest_between(&(hi - &fl).recip(), &(lo - &fl).recip());
    fl + inner.recip()
}

fn pow2(k: u32) -> Rational {
    Rational::new(BigInt::one(), BigInt::one() << k)
}

/// Candidates from a numeric approximation: `x + 2^-20` rounded up to two
/// decimal places, the simplest rational in `[x + 2^-20, x + 2^-10]`, and
/// `x + 2^-10` rounded up to the grid `2^-10 Z`. Entries are clamped to one.
fn candidates(approx: &[f64]) -> [Vec<Rational>; 3] {
    let one = Rational::one();
    let exact: Vec<Rational> = approx
        .iter()
        .map(|&x| Rational::from_float(x.clamp(0.0, 1.0)).unwrap_or_else(Rational::zero))
        .collect();
    let tight = exact
        .iter()
        .map(|x| {
            let lo = x + pow2(20);
            if lo >= one {
                one.clone()
            } else {
                simplest_between(&lo, &(x + pow2(10)).min(one.clone()))
            }
        })
        .collect();
    let hundred = Rational::from_integer(100.into());
    let decimal = exact
        .iter()
        .map(|x| (((x + pow2(20)) * &hundred).ceil() / &hundred).min(one.clone()))
        .collect();
    let grid = BigInt::one() << 10u32;
    let loose = exact
        .iter()
        .map(|x| {
            let scaled = (x + pow2(10)) * Rational::from_integer(grid.clone());
            Rational::new(scaled.ceil().to_integer(), grid.clone()).min(one.clone())
        })
        .collect();
    [decimal, tight, loose]
}

/// `x + t·δ` rounded up to the grid `2^-k Z`, where `(I - J(x)) δ = 1`
/// over the closure variables below one, normalized to `max δ = 1`.
/// Variables at one stay at one. To first order this is a pre-fixed point
/// whenever the closure is subcritical at `x`.
fn directional(s: &EqSystem, closure: &[VarId], approx: &[f64], t: u32, k: u32) -> Option<Vec<Rational>> {
    let free: Vec<VarId> = closure.iter().copied().filter(|&i| approx[i] < 1.0 - 1e-7).collect();
    if free.is_empty() {
        return None;
    }
    let n = free.len();
    let mut jac = DMatrix::<f64>::identity(n, n);
    for (r, &i) in free.iter().enumerate() {
        for m in s.equation(i) {
            let c = rational_to_f64(&m.coeff);
            for (pos, &v) in m.vars.iter().enumerate() {
                if let Ok(col) = free.binary_search(&v) {
                    let others: f64 =
                        m.vars.iter().enumerate().filter(|&(q, _)| q != pos).map(|(_, &w)| approx[w]).product();
                    jac[(r, col)] -= c * others;
                }
            }
        }
    }
    let delta = jac.lu().solve(&DVector::from_element(n, 1.0))?;
    let max = delta.max();
    if !(delta.min() > 0.0 && max.is_finite()) {
        return None;
    }
    let grid = Rational::from_integer(BigInt::one() << k);
    let mut v: Vec<Rational> = approx
        .iter()
        .map(|&x| Rational::from_float(x.clamp(0.0, 1.0)).unwrap_or_else(Rational::zero))
        .collect();
    for &i in closure {
        if approx[i] >= 1.0 - 1e-7 {
            v[i] = Rational::one();
        }
    }
    for (r, &i) in free.iter().enumerate() {
        let step = Rational::from_float(delta[r] / max).unwrap_or_else(Rational::one) * pow2(t);
        let up = ((&v[i] + step) * &grid).ceil() / &grid;
        v[i] = up.min(Rational::one());
    }
    Some(v)
}

fn try_certificate(s: &EqSystem, h: Head, approx: &[f64]) -> Option<SubReturnProof> {
    let closure = s.dependency_closure(&s.head_vars(h));
    let [decimal, tight, loose] = candidates(approx);
    let mut attempts = [Some(decimal), Some(tight)]
        .into_iter()
        .chain([(20, 40), (10, 30)].into_iter().map(|(t, k)| directional(s, &closure, approx, t, k)))
        .chain(std::iter::once(Some(loose)))
        .flatten();
    attempts.find(|c| certify_subreturn(s, h, c)).map(|c| {
        SubReturnProof::PreFixedPoint(closure.iter().map(|&i| (s.var(i), c[i].clone())).collect())
    })
}

/// Per variable: `Some(true)` almost-sure, `Some(false)` sub-returning,
/// `None` when the variable depends on a multi-exit head.
fn exact_classes(s: &EqSystem, multi_exit: &[bool]) -> Vec<Option<bool>> {
    let n = s.len();
    let mut class: Vec<Option<bool>> = vec![None; n];
    let mut tainted = vec![false; n];
    let ones = vec![Rational::one(); n];
    for scc in s.sccs() {
        let in_scc = |v: VarId| scc.binary_search(&v).is_ok();
        let lower = scc.iter().flat_map(|&i| s.equation(i)).flat_map(|m| m.vars.iter().copied());
        let lower: Vec<VarId> = lower.filter(|&v| !in_scc(v)).collect();
        let at_one: Vec<Rational> = scc.iter().map(|&i| eval_one(s, i, &ones)).collect();
        if scc.iter().any(|&i| multi_exit[i])
            || lower.iter().any(|&v| tainted[v])
            || at_one.iter().any(|f| *f > Rational::one())
        {
            for &i in &scc {
                tainted[i] = true;
            }
            continue;
        }
        let sub = lower.iter().any(|&v| class[v] == Some(false))
            || at_one.iter().any(|f| *f < Rational::one());
        let almost_sure = !sub && {
            let jacobian: Vec<Vec<Rational>> = scc
                .iter()
                .map(|&i| {
                    let mut row = vec![Rational::zero(); scc.len()];
                    for m in s.equation(i) {
                        for &v in &m.vars {
                            if let Ok(k) = scc.binary_search(&v) {
                                row[k] += &m.coeff;
                            }
                        }
                    }
                    row
                })
                .collect();
            spectral_le_one(&jacobian, true)
        };
        for &i in &scc {
            class[i] = Some(almost_sure);
        }
    }
    class
}

fn recursive(s: &EqSystem, scc: &[VarId]) -> bool {
    scc.len() > 1 || s.equation(scc[0]).iter().any(|m| m.vars.contains(&scc[0]))
}

/// Least fixed point values that can be established exactly, component by
/// component. A non-recursive variable is evaluated from exact inputs. For
/// a recursive component the numeric approximation is snapped to nearby
/// simple rationals `y`; if `y` is an exact fixed point and the Jacobian at
/// `y` has spectral radius at most one, `y` is the least fixed point.
fn exact_values(s: &EqSystem, approx: &[f64]) -> Vec<Option<Rational>> {
    let mut known: Vec<Option<Rational>> = vec![None; s.len()];
    for scc in s.sccs() {
        let in_scc = |v: VarId| scc.binary_search(&v).is_ok();
        let inputs_known = scc
            .iter()
            .flat_map(|&i| s.equation(i))
            .flat_map(|m| m.vars.iter())
            .all(|&v| in_scc(v) || known[v].is_some());
        if !inputs_known {
            continue;
        }
        let mut x: Vec<Rational> = known.iter().map(|k| k.clone().unwrap_or_else(Rational::zero)).collect();
        if !recursive(s, &scc) {
            known[scc[0]] = Some(eval_one(s, scc[0], &x));
            continue;
        }
        let delta = pow2(20);
        for &i in &scc {
            let a = Rational::from_float(approx[i].clamp(0.0, 1.0)).unwrap_or_else(Rational::zero);
            let lo = (&a - &delta).max(Rational::zero());
            let hi = (&a + &delta).min(Rational::one());
            x[i] = simplest_between(&lo, &hi);
        }
        if scc.iter().any(|&i| x[i].is_zero() || eval_one(s, i, &x) != x[i]) {
            continue;
        }
        let jacobian: Vec<Vec<Rational>> = scc
            .iter()
            .map(|&i| {
                let mut row = vec![Rational::zero(); scc.len()];
                for m in s.equation(i) {
                    for (pos, v) in m.vars.iter().enumerate() {
                        if let Ok(k) = scc.binary_search(v) {
                            let others = m.vars.iter().enumerate().filter(|&(q, _)| q != pos);
                            row[k] += others.fold(m.coeff.clone(), |acc, (_, &w)| acc * &x[w]);
                        }
                    }
                }
                row
            })
            .collect();
        if spectral_le_one(&jacobian, true) {
            for &i in &scc {
                known[i] = Some(x[i].clone());
            }
        }
    }
    known
}

/// Classifies every head of `s` (a cleaned system) as almost surely
/// returning, sub-returning, or unknown.
///
/// Heads whose dependencies only involve single-exit heads are decided
/// exactly by the criticality test. Other heads are decided exactly when
/// their least fixed point values can be verified as rationals, then get a
/// certificate attempt, then the external solver if configured, and are
/// otherwise unknown.
pub fn classify_heads(s: &EqSystem, config: &ClassifyConfig) -> BTreeMap<Head, HeadClass> {
    let mut by_head: BTreeMap<Head, Vec<VarId>> = s.heads().iter().map(|&h| (h, vec![])).collect();
    for (i, v) in s.vars().iter().enumerate() {
        by_head.entry(v.head()).or_default().push(i);
    }
    let multi_exit: Vec<bool> = s.vars().iter().map(|v| by_head[&v.head()].len() > 1).collect();
    let classes = exact_classes(s, &multi_exit);

    let mut newton: Option<Solution> = None;
    let mut exact: Option<Vec<Option<Rational>>> = None;
    let mut kleene: Option<Solution> = None;
    let mut out = BTreeMap::new();
    for (&h, vars) in &by_head {
        let class = match vars.as_slice() {
            [] => HeadClass::SubReturn(SubReturnProof::NoReturn),
            [v] if classes[*v] == Some(true) => HeadClass::AlmostSureReturn,
            [v] if classes[*v] == Some(false) => {
                let approx = newton.get_or_insert_with(|| newton_solve(s, config.epsilon));
                HeadClass::SubReturn(try_certificate(s, h, &approx.values).unwrap_or(SubReturnProof::Spectral))
            }
            _ => {
                let approx = newton.get_or_insert_with(|| newton_solve(s, config.epsilon));
                let values = exact.get_or_insert_with(|| exact_values(s, &approx.values));
                let mass: Option<Vec<Rational>> = vars.iter().map(|&v| values[v].clone()).collect();
                let mass = mass.map(sum);
                if mass == Some(Rational::one()) {
                    HeadClass::AlmostSureReturn
                } else if mass.is_some_and(|m| m < Rational::one()) {
                    let closure = s.dependency_closure(vars);
                    let fixed = closure.iter().map(|&i| (s.var(i), values[i].clone().expect("closed"))).collect();
                    HeadClass::SubReturn(SubReturnProof::PreFixedPoint(fixed))
                } else if let Some(proof) = try_certificate(s, h, &approx.values) {
                    HeadClass::SubReturn(proof)
                } else {
                    let answer = config.smt_solver.as_ref().and_then(|path| {
                        let sentence = smt_export(s, h).ok()?;
                        run_solver(path, &sentence).ok()
                    });
                    match answer {
                        Some(SmtAnswer::Sat) => HeadClass::SubReturn(SubReturnProof::Solver),
                        Some(SmtAnswer::Unsat) => HeadClass::AlmostSureReturn,
                        _ => {
                            let k = kleene.get_or_insert_with(|| {
                                kleene_solve(s, config.epsilon, config.max_iter)
                            });
                            HeadClass::Unknown {
                                kleene_lower: vars.iter().map(|&v| k.values[v]).sum(),
                                iterations: k.iterations,
                            }
                        }
                    }
                }
            }
        };
        out.insert(h, class);
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::eqsys::{build_system, clean, synthetic_system, Monomial};
    use crate::ppda::{translate, Symbol};
    use crate::syntax::parse_file;

    fn q(n: i64, d: i64) -> Rational {
        Rational::new(BigInt::from(n), BigInt::from(d))
    }

    fn quadratic(c: (i64, i64), a: (i64, i64)) -> EqSystem {
        synthetic_system(
            &["z"],
            vec![vec![Monomial::constant(q(c.0, c.1)), Monomial::new(q(a.0, a.1), vec![0, 0])]],
        )
    }

    const Z: Head = Head { state: 0, symbol: Symbol::Tl };

    #[test]
    fn certificate_examples() {
        let sub = quadratic((1, 4), (3, 4));
        assert!(certify_subreturn(&sub, Z, &[q(17, 50)]));
        assert!(!certify_subreturn(&sub, Z, &[q(1, 4)]));
        assert!(!certify_subreturn(&sub, Z, &[q(1, 1)]));
        let critical = quadratic((1, 2), (1, 2));
        assert!(!certify_subreturn(&critical, Z, &[q(99, 100)]));
        assert!(!certify_subreturn(&critical, Z, &[q(1, 1)]));
        assert!(!certify_subreturn(&critical, Z, &[q(3, 2)]));
    }

    #[test]
    fn simplest_rational() {
        assert_eq!(simplest_between(&q(3, 10), &q(4, 10)), q(1, 3));
        assert_eq!(simplest_between(&q(1, 2), &q(1, 1)), q(1, 1));
        assert_eq!(simplest_between(&q(21, 100), &q(22, 100)), q(3, 14));
        assert_eq!(simplest_between(&q(5, 2), &q(5, 2)), q(5, 2));
    }

    #[test]
    fn quadratic_classes() {
        let cfg = ClassifyConfig::default();
        let sub = classify_heads(&quadratic((1, 4), (3, 4)), &cfg);
        match &sub[&Z] {
            HeadClass::SubReturn(SubReturnProof::PreFixedPoint(v)) => {
                assert_eq!(v[0].1, q(17, 50));
            }
            other => panic!("{other:?}"),
        }
        let critical = classify_heads(&quadratic((1, 2), (1, 2)), &cfg);
        assert_eq!(critical[&Z], HeadClass::AlmostSureReturn);
    }

    #[test]
    fn linear_propagation() {
        // z = 1/4 w + 3/4, w = 1: everything returns.
        let s = synthetic_system(
            &["z", "w"],
            vec![
                vec![Monomial::new(q(1, 4), vec![1]), Monomial::constant(q(3, 4))],
                vec![Monomial::constant(q(1, 1))],
            ],
        );
        let c = classify_heads(&s, &ClassifyConfig::default());
        assert!(c.values().all(HeadClass::is_almost_sure));
    }

    #[test]
    fn sub_return_propagates_upward() {
        // w is sub-returning, so z = w also is, without a self-loop.
        let s = synthetic_system(
            &["z", "w"],
            vec![
                vec![Monomial::new(q(1, 1), vec![1])],
                vec![Monomial::constant(q(1, 4)), Monomial::new(q(3, 4), vec![1, 1])],
            ],
        );
        let c = classify_heads(&s, &ClassifyConfig::default());
        assert!(c.values().all(HeadClass::is_sub));
    }

    fn head_classes(src: &str) -> (crate::ppda::Ppda, BTreeMap<Head, HeadClass>) {
        let p = translate(&parse_file(src).unwrap()[0]);
        let (s, _) = clean(&build_system(&p));
        let c = classify_heads(&s, &ClassifyConfig::default());
        (p, c)
    }

    #[test]
    fn stream_family() {
        for (p, almost_sure) in [("1/4", false), ("2/5", false), ("1/2", true), ("3/4", true)] {
            let (a, c) = head_classes(&format!("stream s = a : s (+ {p}) tail(s)"));
            let rec = (0..a.states().len()).find(|&i| a.is_recursion_state(i)).unwrap();
            let class = &c[&Head { state: rec, symbol: Symbol::Tl }];
            assert_eq!(class.is_almost_sure(), almost_sure, "p = {p}: {class:?}");
            if !almost_sure {
                assert!(matches!(class, HeadClass::SubReturn(SubReturnProof::PreFixedPoint(_))));
            }
        }
    }

    #[test]
    fn derived_tree_heads_return() {
        let (p, c) = head_classes("tree t = left(t) (+ 1/4) mk(x, t, left(t))");
        for name in ["t", "left(t)"] {
            let state = (0..p.states().len()).find(|&i| p.state_name(i) == name).unwrap();
            for symbol in [Symbol::Lt, Symbol::Rt] {
                assert!(c[&Head { state, symbol }].is_almost_sure(), "{name} {symbol}");
            }
        }
    }

    #[test]
    fn multi_exit_without_solver_is_unknown_or_certified() {
        // Two exits of one head.
        let vars = vec![
            Var { state: 0, symbol: Symbol::Tl, exit: 0 },
            Var { state: 0, symbol: Symbol::Tl, exit: 1 },
        ];
        let s = EqSystem::new(
            vars,
            vec!["a".into(), "b".into()],
            vec![
                vec![Monomial::constant(q(1, 2)), Monomial::new(q(1, 2), vec![0, 0])],
                vec![Monomial::constant(q(1, 4))],
            ],
        );
        // LFP: a = 1, b = 1/4, total 5/4 is no probability; the classifier
        // must claim neither class for it.
        let c = classify_heads(&s, &ClassifyConfig { max_iter: 1000, ..Default::default() });
        assert!(matches!(c[&Z], HeadClass::Unknown { .. }));
    }

    #[test]
    fn rational_fixed_points_decide_multi_exit_heads() {
        let d = parse_file("tree t = right(t (+ 3/7) mk(a, t, mk(b, t, t)))").unwrap().remove(0);
        let (s, _) = clean(&build_system(&translate(&d)));
        let c = classify_heads(&s, &ClassifyConfig::default());
        assert!(c.values().all(HeadClass::is_almost_sure));

        let vars = vec![
            Var { state: 0, symbol: Symbol::Tl, exit: 0 },
            Var { state: 0, symbol: Symbol::Tl, exit: 1 },
        ];
        let s = EqSystem::new(
            vars,
            vec!["a".into(), "b".into()],
            vec![
                vec![Monomial::constant(q(1, 4)), Monomial::new(q(1, 4), vec![0])],
                vec![Monomial::constant(q(1, 3))],
            ],
        );
        let c = classify_heads(&s, &ClassifyConfig::default());
        let HeadClass::SubReturn(SubReturnProof::PreFixedPoint(cert)) = &c[&Z] else {
            panic!("{:?}", c[&Z]);
        };
        assert_eq!(cert.iter().map(|(_, x)| x.clone()).collect::<Vec<_>>(), vec![q(1, 3), q(1, 3)]);
    }

    #[test]
    fn snapped_points_need_a_small_spectral_radius() {
        // z = 1/4 + 3/4 z^2 has fixed points 1/3 and 1; only 1/3 is least.
        let s = quadratic((1, 4), (3, 4));
        let at_one = exact_values(&s, &[1.0]);
        assert_eq!(at_one, vec![None]);
        let at_third = exact_values(&s, &[1.0 / 3.0]);
        assert_eq!(at_third, vec![Some(q(1, 3))]);
    }
}
