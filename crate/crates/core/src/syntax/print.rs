//! Canonical concrete syntax with minimal parentheses.

use super::{Definition, Term};

/// Renders `t` in expression position, printing the recursion variable as
/// `rec_name`.
pub fn term_to_string(t: &Term, rec_name: &str) -> String {
    let mut out = String::new();
    expr(t, rec_name, &mut out);
    out
}

fn expr(t: &Term, rec: &str, out: &mut String) {
    match t {
        Term::Choice(p, a, b) => {
            atom(a, rec, out);
            out.push_str(&format!(" (+ {p}) "));
            expr(b, rec, out);
        }
        _ => atom(t, rec, out),
    }
}

fn atom(t: &Term, rec: &str, out: &mut String) {
    match t {
        Term::Rec => out.push_str(rec),
        Term::Choice(..) => {
            out.push('(');
            expr(t, rec, out);
            out.push(')');
        }
        Term::Cons(label, tail) => {
            out.push_str(label.as_str());
            out.push_str(" : ");
            atom(tail, rec, out);
        }
        Term::Tail(e) | Term::Left(e) | Term::Right(e) => {
            out.push_str(match t {
                Term::Tail(_) => "tail(",
                Term::Left(_) => "left(",
                _ => "right(",
            });
            expr(e, rec, out);
            out.push(')');
        }
        Term::Mk(label, l, r) => {
            out.push_str("mk(");
            out.push_str(label.as_str());
            out.push_str(", ");
            expr(l, rec, out);
            out.push_str(", ");
            expr(r, rec, out);
            out.push(')');
        }
    }
}

/// Renders a definition as `stream name = body` / `tree name = body`.
pub fn pretty_print(d: &Definition) -> String {
    format!("{} {} = {}", d.kind(), d.name(), term_to_string(d.body(), d.name()))
}

#[cfg(test)]
mod tests {
    use super::super::{parse_file, Label, Prob};
    use super::*;

    #[test]
    fn canonical_cons() {
        let d = Definition::stream("s", Term::cons(Label::new("a").unwrap(), Term::Rec)).unwrap();
        assert_eq!(pretty_print(&d), "stream s = a : s");
    }

    #[test]
    fn minimal_parentheses() {
        let half = Prob::ratio(1, 2).unwrap();
        let inner = Term::choice(half.clone(), Term::Rec, Term::tail(Term::Rec));
        let body = Term::choice(
            half.clone(),
            inner.clone(),
            Term::cons(Label::new("a").unwrap(), inner.clone()),
        );
        let d = Definition::stream("s", body).unwrap();
        let text = pretty_print(&d);
        assert_eq!(
            text,
            "stream s = (s (+ 1/2) tail(s)) (+ 1/2) a : (s (+ 1/2) tail(s))"
        );
        assert_eq!(parse_file(&text).unwrap(), vec![d]);
    }

    #[test]
    fn tree_examples_round_trip() {
        for src in [
            "tree t = left(t) (+ 1/4) mk(x, t, t)",
            "tree t = left(t) (+ 1/4) mk(x, t, left(t))",
        ] {
            let d = parse_file(src).unwrap().remove(0);
            assert_eq!(pretty_print(&d), src);
            assert_eq!(parse_file(&pretty_print(&d)).unwrap(), vec![d]);
        }
    }
}
