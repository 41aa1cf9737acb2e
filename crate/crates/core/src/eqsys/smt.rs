//! SMT-LIB2 export of the sub-return question and an external solver
//! bridge.

use std::fmt::Write as _;
use std::path::Path;
use std::process::Command;
use std::sync::atomic::{AtomicUsize, Ordering};

use num::{One, Signed};
use thiserror::Error;

use super::{EqSystem, Head, Var};
use crate::syntax::Rational;

/// Environment variable naming the solver executable.
pub const SMT_SOLVER_ENV: &str = "ASP_SMT_SOLVER";

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum SmtError {
    #[error("head ({state}, {symbol}) has no variables")]
    NoVariables { state: usize, symbol: String },
    #[error("cannot run solver `{path}`: {message}")]
    Io { path: String, message: String },
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum SmtAnswer {
    Sat,
    Unsat,
    Unknown(String),
}

fn var_name(v: Var) -> String {
    format!("v_{}_{}_{}", v.state, v.symbol, v.exit)
}

fn real(r: &Rational) -> String {
    let n = r.numer().abs();
    let body = if r.denom().is_one() {
        format!("{n}.0")
    } else {
        format!("(/ {n}.0 {}.0)", r.denom())
    };
    if r.is_negative() {
        format!("(- {body})")
    } else {
        body
    }
}

/// The sentence "some fixed point in `[0,1]^n` gives `h` a return
/// probability below one". It is satisfiable iff `h` is sub-returning.
/// Only the variables `h` depends on are included.
pub fn smt_export(s: &EqSystem, h: Head) -> Result<String, SmtError> {
    let roots = s.head_vars(h);
    if roots.is_empty() {
        return Err(SmtError::NoVariables { state: h.state, symbol: h.symbol.to_string() });
    }
    let vars = s.dependency_closure(&roots);
    let mut out = String::new();
    out.push_str("(set-logic QF_NRA)\n");
    for &i in &vars {
        let _ = writeln!(out, "(declare-fun {} () Real)", var_name(s.var(i)));
    }
    for &i in &vars {
        let x = var_name(s.var(i));
        let _ = writeln!(out, "(assert (and (<= 0.0 {x}) (<= {x} 1.0)))");
    }
    for &i in &vars {
        let terms: Vec<String> = s
            .equation(i)
            .iter()
            .map(|m| {
                if m.vars.is_empty() {
                    real(&m.coeff)
                } else {
                    let factors: Vec<String> = m.vars.iter().map(|&v| var_name(s.var(v))).collect();
                    format!("(* {} {})", real(&m.coeff), factors.join(" "))
                }
            })
            .collect();
        let rhs = match terms.len() {
            0 => "0.0".to_string(),
            1 => terms[0].clone(),
            _ => format!("(+ {})", terms.join(" ")),
        };
        let _ = writeln!(out, "(assert (= {} {rhs}))", var_name(s.var(i)));
    }
    let head: Vec<String> = roots.iter().map(|&v| var_name(s.var(v))).collect();
    let total = if head.len() == 1 { head[0].clone() } else { format!("(+ {})", head.join(" ")) };
    let _ = writeln!(out, "(assert (< {total} 1.0))");
    out.push_str("(check-sat)\n");
    Ok(out)
}

static COUNTER: AtomicUsize = AtomicUsize::new(0);

/// Runs `solver FILE` on the sentence and reads the first line of output.
pub fn run_solver(solver: &Path, sentence: &str) -> Result<SmtAnswer, SmtError> {
    let io = |e: std::io::Error| SmtError::Io {
        path: solver.display().to_string(),
        message: e.to_string(),
    };
    let file = std::env::temp_dir().join(format!(
        "asp-{}-{}.smt2",
        std::process::id(),
        COUNTER.fetch_add(1, Ordering::Relaxed)
    ));
    std::fs::write(&file, sentence).map_err(io)?;
    let output = Command::new(solver).arg(&file).output();
    let _ = std::fs::remove_file(&file);
    let output = output.map_err(io)?;
    let text = String::from_utf8_lossy(&output.stdout);
    let first = text.lines().map(str::trim).find(|l| !l.is_empty()).unwrap_or("");
    Ok(match first {
        "sat" => SmtAnswer::Sat,
        "unsat" => SmtAnswer::Unsat,
        other => SmtAnswer::Unknown(other.to_string()),
    })
}
