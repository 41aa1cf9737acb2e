//! JSON and Graphviz serialization of an automaton.

use std::fmt::Write as _;
use std::str::FromStr;

use serde_json::{json, Value};
use thiserror::Error;

use super::{Ppda, Symbol};
use crate::syntax::rational_string;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ExportFormat {
    Graphviz,
    Json,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("unknown export format `{0}` (expected `graphviz` or `json`)")]
pub struct ExportError(pub String);

impl FromStr for ExportFormat {
    type Err = ExportError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "graphviz" | "dot" => Ok(ExportFormat::Graphviz),
            "json" => Ok(ExportFormat::Json),
            _ => Err(ExportError(s.to_string())),
        }
    }
}

fn top_name(top: Option<Symbol>) -> String {
    top.map_or_else(|| "⊥".to_string(), |s| s.to_string())
}

fn to_json(p: &Ppda) -> Value {
    let states: Vec<Value> = (0..p.states().len())
        .map(|i| json!({ "id": i, "term": p.state_name(i) }))
        .collect();
    let mut transitions = Vec::new();
    for state in 0..p.states().len() {
        for top in p.tops() {
            let moves: Vec<Value> = p
                .row(state, top)
                .iter()
                .map(|m| {
                    let push: Vec<String> =
                        m.op.push_string(top).iter().map(Symbol::to_string).collect();
                    json!({
                        "prob": format!("{}/{}", m.prob.numer(), m.prob.denom()),
                        "next": m.next,
                        "push": push,
                    })
                })
                .collect();
            transitions.push(json!({ "state": state, "top": top_name(top), "moves": moves }));
        }
    }
    let outputting: Vec<usize> =
        (0..p.states().len()).filter(|&i| p.is_constructor_state(i)).collect();
    json!({
        "name": p.name(),
        "kind": p.kind().to_string(),
        "states": states,
        "alphabet": p.alphabet().iter().map(Symbol::to_string).collect::<Vec<_>>(),
        "transitions": transitions,
        "outputting": outputting,
    })
}

fn escape(s: &str) -> String {
    s.replace('\\', "\\\\").replace('"', "\\\"")
}

fn to_dot(p: &Ppda) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "digraph \"{}\" {{", escape(p.name()));
    let _ = writeln!(out, "  rankdir=LR;");
    for i in 0..p.states().len() {
        let shape = if p.is_constructor_state(i) { "doublecircle" } else { "circle" };
        let init = if p.initial().state == i { ", style=bold" } else { "" };
        let _ = writeln!(
            out,
            "  q{i} [label=\"{}\", shape={shape}{init}];",
            escape(&p.state_name(i))
        );
    }
    for state in 0..p.states().len() {
        for top in p.tops() {
            for m in p.row(state, top) {
                let push = m.op.push_string(top);
                let push = if push.is_empty() {
                    "ε".to_string()
                } else {
                    push.iter().map(Symbol::to_string).collect::<Vec<_>>().join("·")
                };
                let _ = writeln!(
                    out,
                    "  q{state} -> q{} [label=\"{} / {} : {}\"];",
                    m.next,
                    top_name(top),
                    push,
                    rational_string(&m.prob)
                );
            }
        }
    }
    out.push_str("}\n");
    out
}

/// Deterministic serialization of `p`.
pub fn export(p: &Ppda, format: ExportFormat) -> String {
    match format {
        ExportFormat::Json => {
            serde_json::to_string_pretty(&to_json(p)).expect("JSON values always serialize")
        }
        ExportFormat::Graphviz => to_dot(p),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ppda::translate;
    use crate::syntax::parse_file;

    fn ppda(src: &str) -> Ppda {
        translate(&parse_file(src).unwrap()[0])
    }

    #[test]
    fn silent_loop_json() {
        let p = ppda("stream s = s");
        let v: Value = serde_json::from_str(&export(&p, ExportFormat::Json)).unwrap();
        assert_eq!(v["states"].as_array().unwrap().len(), 1);
        assert_eq!(v["alphabet"], json!(["tl"]));
        assert_eq!(v["outputting"], json!([]));
        // One row per (state, top): ⊥ and tl.
        let rows = v["transitions"].as_array().unwrap();
        assert_eq!(rows.len(), 2);
        assert_eq!(rows[0]["moves"], json!([{ "prob": "1/1", "next": 0, "push": [] }]));
        assert_eq!(rows[1]["moves"], json!([{ "prob": "1/1", "next": 0, "push": ["tl"] }]));
    }

    #[test]
    fn constant_stream_dot_edge() {
        let dot = export(&ppda("stream s = a : s"), ExportFormat::Graphviz);
        assert!(dot.contains("q0 -> q1 [label=\"⊥ / ε : 1\"]"), "{dot}");
        assert!(dot.contains("q0 -> q1 [label=\"tl / ε : 1\"]"));
    }

    #[test]
    fn exports_are_stable() {
        let p = ppda("tree t = left(t) (+ 1/4) mk(x, t, left(t))");
        for f in [ExportFormat::Json, ExportFormat::Graphviz] {
            assert_eq!(export(&p, f), export(&p, f));
        }
    }

    #[test]
    fn unknown_format() {
        assert!("svg".parse::<ExportFormat>().is_err());
        assert_eq!("dot".parse::<ExportFormat>().unwrap(), ExportFormat::Graphviz);
    }
}
