//! The syntactic productivity measure and the sufficient ASP check built on
//! it.
//!
//! The measure is the expected number of outputs produced minus outputs
//! consumed per unfolding of the body. A strictly positive measure proves
//! almost-sure productivity; zero or negative values prove nothing.

use num::{One, Zero};

use crate::syntax::{Definition, Rational, Term};

/// Outcome of the measure criterion.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Tier1 {
    Asp,
    Abstain,
}

/// Measure of a term. Streams and trees share the recurrences: each
/// constructor adds one, each destructor subtracts one, and `mk` takes the
/// smaller of its children.
pub fn measure_term(t: &Term) -> Rational {
    match t {
        Term::Rec => Rational::zero(),
        Term::Choice(p, a, b) => {
            p.value() * measure_term(a) + p.complement() * measure_term(b)
        }
        Term::Cons(_, e) => measure_term(e) + Rational::one(),
        Term::Tail(e) | Term::Left(e) | Term::Right(e) => measure_term(e) - Rational::one(),
        Term::Mk(_, l, r) => {
            let (ml, mr) = (measure_term(l), measure_term(r));
            ml.min(mr) + Rational::one()
        }
    }
}

pub fn measure(d: &Definition) -> Rational {
    measure_term(d.body())
}

/// `Asp` iff the measure is strictly positive.
pub fn tier1_verdict(d: &Definition) -> Tier1 {
    if measure(d) > Rational::zero() {
        Tier1::Asp
    } else {
        Tier1::Abstain
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::syntax::{parse_file, Prob};
    use num::BigInt;

    fn q(n: i64, d: i64) -> Rational {
        Rational::new(BigInt::from(n), BigInt::from(d))
    }

    fn def(src: &str) -> Definition {
        parse_file(src).unwrap().remove(0)
    }

    #[test]
    fn biased_walk_is_two_p_minus_one() {
        for (n, d) in [(1, 4), (1, 2), (3, 4), (1, 10), (9, 10)] {
            let src = format!("stream s = a : s (+ {n}/{d}) tail(s)");
            let p = q(n, d);
            assert_eq!(measure(&def(&src)), p * q(2, 1) - q(1, 1));
        }
        assert_eq!(measure(&def("stream s = a : s (+ 3/4) tail(s)")), q(1, 2));
    }

    #[test]
    fn recursion_variable_is_zero() {
        assert_eq!(measure(&def("stream s = s")), q(0, 1));
        assert_eq!(measure(&def("tree t = t")), q(0, 1));
    }

    #[test]
    fn tree_examples() {
        assert_eq!(measure(&def("tree t = left(t) (+ 1/4) mk(x, t, t)")), q(1, 2));
        assert_eq!(measure(&def("tree t = left(t) (+ 1/4) mk(x, t, left(t))")), q(-1, 4));
    }

    #[test]
    fn tier1_is_strict() {
        assert_eq!(tier1_verdict(&def("stream s = a : s (+ 3/4) tail(s)")), Tier1::Asp);
        assert_eq!(tier1_verdict(&def("stream s = a : s (+ 1/2) tail(s)")), Tier1::Abstain);
        assert_eq!(tier1_verdict(&def("tree t = left(t) (+ 1/4) mk(x, t, left(t))")), Tier1::Abstain);
        assert_eq!(tier1_verdict(&def("stream s = a : s (+ 1/10) s")), Tier1::Asp);
    }

    #[test]
    fn linearity_in_choice() {
        let a = Term::tail(Term::tail(Term::Rec));
        let b = Term::cons(crate::syntax::Label::new("x").unwrap(), Term::Rec);
        let p = Prob::ratio(2, 7).unwrap();
        let c = Term::choice(p.clone(), a.clone(), b.clone());
        let lhs = measure_term(&c);
        let rhs = p.value() * measure_term(&a)
            + p.complement() * measure_term(&b);
        assert_eq!(lhs, rhs);
    }
}
