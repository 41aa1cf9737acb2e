//! Commands behind the `asp` binary. Each command returns its exit code and
//! the text it would print, so the binary stays a thin wrapper.

use std::path::PathBuf;
use std::time::Instant;

use asp_core::decide::{
    decide_asp, AspResult, BuchiVerdict, DecideConfig, DecideError, ExactEvidence, Node,
    Provenance, Tier, Tier3Mode, Verdict,
};
use asp_core::eqsys::{
    build_system, classify_heads, clean, kleene_solve, newton_solve, ClassifyConfig, Head,
    HeadClass, SubReturnProof, Var,
};
use asp_core::measure::{measure, Tier1};
use asp_core::ppda::{export, translate, ExportFormat};
use asp_core::semantics::{monte_carlo, sample_run, Event, McReport, TreePolicy, VerdictHint};
use asp_core::syntax::{parse_file_partial, rational_string, Definition};
use rayon::prelude::*;
use serde_json::{json, Value};

pub const EXIT_ASP: i32 = 0;
pub const EXIT_NOT_ASP: i32 = 1;
pub const EXIT_UNKNOWN: i32 = 2;
pub const EXIT_INPUT: i32 = 3;
pub const EXIT_INTERNAL: i32 = 4;

/// What a command printed and how it exits.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct Outcome {
    pub code: i32,
    pub stdout: String,
    pub stderr: String,
}

/// Analysis parameters shared by `check`, `simulate` and `solve`.
#[derive(Debug, Clone, PartialEq)]
pub struct Flags {
    pub epsilon: f64,
    pub max_iter: usize,
    pub mc_runs: usize,
    pub mc_horizon: usize,
    pub seed: u64,
    pub smt_solver: Option<PathBuf>,
    pub no_tier3: bool,
    pub confirm: bool,
    pub json: bool,
    pub jobs: usize,
    pub timing: bool,
}

impl Default for Flags {
    fn default() -> Self {
        Flags {
            epsilon: 1e-9,
            max_iter: 100_000,
            mc_runs: 200,
            mc_horizon: 10_000,
            seed: 0xA5F,
            smt_solver: None,
            no_tier3: false,
            confirm: false,
            json: false,
            jobs: 0,
            timing: false,
        }
    }
}

impl Flags {
    fn classify(&self) -> ClassifyConfig {
        ClassifyConfig {
            epsilon: self.epsilon,
            max_iter: self.max_iter,
            smt_solver: self.smt_solver.clone(),
        }
    }

    pub fn decide_config(&self) -> DecideConfig {
        let tier3 = match (self.no_tier3, self.confirm) {
            (true, _) => Tier3Mode::Never,
            (false, true) => Tier3Mode::Always,
            (false, false) => Tier3Mode::OnUnknown,
        };
        DecideConfig {
            classify: self.classify(),
            tier3,
            mc_runs: self.mc_runs,
            mc_horizon: self.mc_horizon,
            seed: self.seed,
            ..DecideConfig::default()
        }
    }
}

/// A definition together with the file it came from.
#[derive(Debug, Clone)]
pub struct Input {
    pub file: String,
    pub def: Definition,
}

/// Reads and parses every file, keeping the valid definitions. Diagnostics
/// carry `file:line:column`.
pub fn load(files: &[PathBuf]) -> (Vec<Input>, Vec<String>) {
    let mut inputs = Vec::new();
    let mut errors = Vec::new();
    for path in files {
        let file = path.display().to_string();
        match std::fs::read_to_string(path) {
            Ok(text) => {
                let (defs, errs) = parse_file_partial(&text);
                errors.extend(errs.iter().map(|e| format!("{file}:{e}")));
                inputs.extend(defs.into_iter().map(|def| Input { file: file.clone(), def }));
            }
            Err(e) => errors.push(format!("{file}: {e}")),
        }
    }
    (inputs, errors)
}

fn run_parallel<T: Send>(jobs: usize, inputs: &[Input], f: impl Fn(&Input) -> T + Sync) -> Vec<T> {
    let pool = rayon::ThreadPoolBuilder::new().num_threads(jobs).build();
    match pool {
        Ok(pool) => pool.install(|| inputs.par_iter().map(&f).collect()),
        Err(_) => inputs.iter().map(f).collect(),
    }
}

fn finish(code: i32, stdout: String, errors: &[String]) -> Outcome {
    let mut stderr = String::new();
    for e in errors {
        stderr.push_str(e);
        stderr.push('\n');
    }
    Outcome { code, stdout, stderr }
}

fn to_json_text(v: &Value) -> String {
    let mut s = serde_json::to_string_pretty(v).expect("JSON values always serialize");
    s.push('\n');
    s
}

fn result_name(r: AspResult) -> &'static str {
    match r {
        AspResult::Asp => "ASP",
        AspResult::NotAsp => "NotASP",
        AspResult::Unknown => "Unknown",
    }
}

fn tier_name(t: Tier) -> &'static str {
    match t {
        Tier::Measure => "Measure",
        Tier::Exact => "Exact",
        Tier::StatisticalOnly => "StatisticalOnly",
    }
}

fn buchi_name(v: BuchiVerdict) -> &'static str {
    match v {
        BuchiVerdict::AlmostSure => "AlmostSure",
        BuchiVerdict::NotAlmostSure => "NotAlmostSure",
        BuchiVerdict::Unknown => "Unknown",
    }
}

fn hint_name(h: VerdictHint) -> &'static str {
    match h {
        VerdictHint::NoEvidenceAgainstAsp => "NoEvidenceAgainstASP",
        VerdictHint::EvidenceAgainstAsp => "EvidenceAgainstASP",
    }
}

fn head_name(states: &[String], h: Head) -> String {
    format!("({}, {})", states[h.state], h.symbol)
}

fn node_name(states: &[String], n: Node) -> String {
    match n {
        Node::State(q) => states[q].clone(),
        Node::Diverge => "D".to_string(),
    }
}

/// Short text form of the class of `h`, as printed by `solve`. A
/// certificate is shown through its entries for the head's own variables.
pub fn class_text(h: Head, c: &HeadClass) -> String {
    match c {
        HeadClass::AlmostSureReturn => "AlmostSureReturn".to_string(),
        HeadClass::SubReturn(SubReturnProof::NoReturn) => "SubReturn(no return)".to_string(),
        HeadClass::SubReturn(SubReturnProof::PreFixedPoint(v)) => {
            let values: Vec<String> = v
                .iter()
                .filter(|(var, _)| var.head() == h)
                .map(|(_, r)| rational_string(r))
                .collect();
            format!("SubReturn(cert {})", values.join(", "))
        }
        HeadClass::SubReturn(SubReturnProof::Spectral) => "SubReturn(spectral)".to_string(),
        HeadClass::SubReturn(SubReturnProof::Solver) => "SubReturn(solver)".to_string(),
        HeadClass::Unknown { kleene_lower, iterations } => {
            format!("Unknown(lower {kleene_lower:.6} after {iterations} iterations)")
        }
    }
}

fn class_json(states: &[String], labels: &dyn Fn(Var) -> String, h: Head, c: &HeadClass) -> Value {
    let mut v = json!({ "head": head_name(states, h) });
    match c {
        HeadClass::AlmostSureReturn => v["class"] = json!("AlmostSureReturn"),
        HeadClass::SubReturn(proof) => {
            v["class"] = json!("SubReturn");
            v["proof"] = match proof {
                SubReturnProof::NoReturn => json!("NoReturn"),
                SubReturnProof::PreFixedPoint(_) => json!("PreFixedPoint"),
                SubReturnProof::Spectral => json!("Spectral"),
                SubReturnProof::Solver => json!("Solver"),
            };
            if let SubReturnProof::PreFixedPoint(cert) = proof {
                v["certificate"] = cert
                    .iter()
                    .map(|(var, r)| json!({ "var": labels(*var), "value": rational_string(r) }))
                    .collect();
            }
        }
        HeadClass::Unknown { kleene_lower, iterations } => {
            v["class"] = json!("Unknown");
            v["kleeneLower"] = json!(kleene_lower);
            v["iterations"] = json!(iterations);
        }
    }
    v
}

fn var_label(states: &[String], v: Var) -> String {
    format!("[{}, {}, {}]", states[v.state], v.symbol, states[v.exit])
}

fn exact_json(e: &ExactEvidence) -> Value {
    let states = &e.states;
    let labels = |v| var_label(states, v);
    let heads: Vec<Value> =
        e.heads.iter().map(|(&h, c)| class_json(states, &labels, h, c)).collect();
    let edges: Vec<Value> = e
        .chain
        .edges
        .iter()
        .map(|edge| {
            let via = match edge.provenance {
                Provenance::Direct => json!("Direct"),
                Provenance::ExcursionReturn { head, .. } => {
                    json!({ "excursionReturn": head_name(states, head) })
                }
                Provenance::Divergence { head, certain } => {
                    json!({ "divergence": head_name(states, head), "certain": certain })
                }
            };
            json!({
                "from": node_name(states, edge.from),
                "to": node_name(states, edge.to),
                "via": via,
            })
        })
        .collect();
    let summary = |s: &asp_core::decide::GraphSummary| {
        json!({
            "bottomSccs": s.bottom_sccs.iter()
                .map(|c| c.iter().map(|&n| node_name(states, n)).collect::<Vec<_>>())
                .collect::<Vec<_>>(),
            "divergeReachable": s.diverge_reachable,
        })
    };
    json!({
        "verdict": buchi_name(e.analysis.verdict),
        "headClasses": heads,
        "groundChain": {
            "nodes": e.chain.nodes.iter().map(|&q| states[q].clone()).collect::<Vec<_>>(),
            "outputNodes": e.chain.output_nodes.iter().map(|&q| states[q].clone()).collect::<Vec<_>>(),
            "initial": states[e.chain.initial].clone(),
            "edges": edges,
            "optimistic": summary(&e.analysis.optimistic),
            "pessimistic": summary(&e.analysis.pessimistic),
        },
    })
}

fn mc_json(r: &McReport) -> Value {
    json!({
        "runs": r.runs,
        "horizon": r.horizon,
        "seed": r.seed,
        "meanRate": r.mean_rate,
        "tailSilence": r.tail_silence,
        "tailSlope": r.tail_slope,
        "hint": hint_name(r.verdict_hint),
    })
}

/// JSON report of one verdict.
pub fn verdict_json(input: &Input, v: &Verdict) -> Value {
    json!({
        "name": input.def.name(),
        "file": input.file,
        "kind": input.def.kind().to_string(),
        "measure": rational_string(&v.evidence.measure),
        "tier1": match v.evidence.tier1 { Tier1::Asp => "ASP", Tier1::Abstain => "Abstain" },
        "tier2": v.evidence.exact.as_ref().map_or(Value::Null, exact_json),
        "tier3": v.evidence.monte_carlo.as_ref().map_or(Value::Null, mc_json),
        "verdict": result_name(v.result),
        "tier": tier_name(v.tier),
    })
}

fn verdict_line(input: &Input, v: &Verdict) -> String {
    let mut line = format!(
        "{}: {} via {} (measure {})",
        input.def.name(),
        result_name(v.result),
        tier_name(v.tier),
        rational_string(&v.evidence.measure)
    );
    if let Some(r) = &v.evidence.monte_carlo {
        line.push_str(&format!(", simulation: {}", hint_name(r.verdict_hint)));
    }
    line
}

/// `check`: decides every definition.
///
/// Exit code 3 if any input failed to load, else 4 on an internal error,
/// else 1 if any definition is not ASP, else 2 if any is unknown, else 0.
pub fn cmd_check(files: &[PathBuf], flags: &Flags) -> Outcome {
    let (inputs, mut errors) = load(files);
    let input_error = !errors.is_empty();
    let config = flags.decide_config();
    let results = run_parallel(flags.jobs, &inputs, |input| {
        let start = Instant::now();
        let v = decide_asp(&input.def, &config);
        (v, start.elapsed())
    });

    let mut any_not = false;
    let mut any_unknown = false;
    let mut internal = false;
    let mut reports = Vec::new();
    let mut text = String::new();
    for (input, (result, elapsed)) in inputs.iter().zip(results) {
        let mut report = match result {
            Ok(v) => {
                any_not |= v.result == AspResult::NotAsp;
                any_unknown |= v.result == AspResult::Unknown;
                text.push_str(&verdict_line(input, &v));
                text.push('\n');
                verdict_json(input, &v)
            }
            Err(e) => {
                match e {
                    DecideError::InternalInconsistency { .. } => internal = true,
                    _ => any_unknown = true,
                }
                errors.push(format!("{}: {}: {e}", input.file, input.def.name()));
                text.push_str(&format!("{}: Unknown ({e})\n", input.def.name()));
                json!({
                    "name": input.def.name(),
                    "file": input.file,
                    "kind": input.def.kind().to_string(),
                    "measure": rational_string(&measure(&input.def)),
                    "verdict": "Unknown",
                    "error": e.to_string(),
                })
            }
        };
        if flags.timing {
            report["timingMs"] = json!(elapsed.as_secs_f64() * 1e3);
        }
        reports.push(report);
    }

    let code = if input_error {
        EXIT_INPUT
    } else if internal {
        EXIT_INTERNAL
    } else if any_not {
        EXIT_NOT_ASP
    } else if any_unknown {
        EXIT_UNKNOWN
    } else {
        EXIT_ASP
    };
    let stdout = if flags.json {
        to_json_text(&json!({ "definitions": reports, "errors": errors, "exitCode": code }))
    } else {
        text
    };
    finish(code, stdout, &errors)
}

fn input_code(errors: &[String]) -> i32 {
    if errors.is_empty() {
        EXIT_ASP
    } else {
        EXIT_INPUT
    }
}

/// `measure`: one `name value` line per definition.
pub fn cmd_measure(files: &[PathBuf], json_out: bool) -> Outcome {
    let (inputs, errors) = load(files);
    let stdout = if json_out {
        let rows: Vec<Value> = inputs
            .iter()
            .map(|i| {
                json!({
                    "name": i.def.name(),
                    "file": i.file,
                    "measure": rational_string(&measure(&i.def)),
                })
            })
            .collect();
        to_json_text(&json!({ "definitions": rows, "errors": errors }))
    } else {
        inputs
            .iter()
            .map(|i| format!("{} {}\n", i.def.name(), rational_string(&measure(&i.def))))
            .collect()
    };
    finish(input_code(&errors), stdout, &errors)
}

/// Options of `simulate`.
#[derive(Debug, Clone, PartialEq)]
pub struct SimulateFlags {
    pub flags: Flags,
    pub policy: TreePolicy,
    /// Number of events of a single sampled run to print.
    pub trace: usize,
}

/// `simulate`: Monte Carlo statistics per definition.
pub fn cmd_simulate(files: &[PathBuf], opts: &SimulateFlags) -> Outcome {
    let (inputs, mut errors) = load(files);
    let f = &opts.flags;
    let results = run_parallel(f.jobs, &inputs, |input| {
        monte_carlo(&input.def, f.mc_runs, f.mc_horizon, f.seed, &opts.policy)
    });
    let mut reports = Vec::new();
    let mut text = String::new();
    let mut failed = false;
    for (input, r) in inputs.iter().zip(results) {
        let r = match r {
            Ok(r) => r,
            Err(e) => {
                failed = true;
                errors.push(format!("{}: {}: {e}", input.file, input.def.name()));
                continue;
            }
        };
        let events: Vec<String> = if opts.trace > 0 {
            sample_run(&input.def, opts.trace, f.seed, &opts.policy)
                .events
                .iter()
                .map(Event::to_string)
                .collect()
        } else {
            Vec::new()
        };
        text.push_str(&format!(
            "{}: {} runs x {} steps, mean rate {:.6}, tail silence {:.3}, tail slope {:.6}, {}\n",
            input.def.name(),
            r.runs,
            r.horizon,
            r.mean_rate,
            r.tail_silence,
            r.tail_slope,
            hint_name(r.verdict_hint)
        ));
        if !events.is_empty() {
            text.push_str(&format!("  trace: {}\n", events.join(" ")));
        }
        let mut v = mc_json(&r);
        v["name"] = json!(input.def.name());
        v["file"] = json!(input.file);
        if opts.trace > 0 {
            v["trace"] = json!(events);
        }
        reports.push(v);
    }
    let code = if failed { EXIT_INPUT } else { input_code(&errors) };
    let stdout = if f.json {
        to_json_text(&json!({ "definitions": reports, "errors": errors }))
    } else {
        text
    };
    finish(code, stdout, &errors)
}

/// `ppda`: exports the automaton of every definition.
pub fn cmd_ppda(files: &[PathBuf], format: ExportFormat) -> Outcome {
    let (inputs, errors) = load(files);
    let stdout = match format {
        ExportFormat::Json if inputs.len() != 1 => {
            let all: Vec<Value> = inputs
                .iter()
                .map(|i| {
                    serde_json::from_str(&export(&translate(&i.def), ExportFormat::Json))
                        .expect("export emits valid JSON")
                })
                .collect();
            to_json_text(&Value::Array(all))
        }
        _ => inputs
            .iter()
            .map(|i| {
                let mut s = export(&translate(&i.def), format);
                if !s.ends_with('\n') {
                    s.push('\n');
                }
                s
            })
            .collect(),
    };
    finish(input_code(&errors), stdout, &errors)
}

fn solve_one(def: &Definition, flags: &Flags) -> (Value, String) {
    let p = translate(def);
    let (s, _) = clean(&build_system(&p));
    let kleene = kleene_solve(&s, flags.epsilon, flags.max_iter);
    let newton = newton_solve(&s, flags.epsilon);
    let classes = classify_heads(&s, &flags.classify());
    let states: Vec<String> = (0..p.states().len()).map(|i| p.state_name(i)).collect();
    let labels = |v| var_label(&states, v);

    let mut text = format!("{}:\n", def.name());
    let mut vars = Vec::new();
    for (i, v) in s.vars().iter().enumerate() {
        let class = &classes[&v.head()];
        text.push_str(&format!("  {} ≈ {:.6} {}\n", labels(*v), newton.values[i], class_text(v.head(), class)));
        vars.push(json!({
            "var": labels(*v),
            "kleene": kleene.values[i],
            "newton": newton.values[i],
        }));
    }
    for (h, c) in &classes {
        if s.head_vars(*h).is_empty() {
            text.push_str(&format!("  {} {}\n", head_name(&states, *h), class_text(*h, c)));
        }
    }
    let heads: Vec<Value> =
        classes.iter().map(|(&h, c)| class_json(&states, &labels, h, c)).collect();
    let report = json!({
        "name": def.name(),
        "variables": vars,
        "heads": heads,
        "kleeneIterations": kleene.iterations,
        "kleeneConverged": kleene.converged,
        "newtonIterations": newton.iterations,
    });
    (report, text)
}

/// `solve`: least fixed point bounds and head classes per definition.
pub fn cmd_solve(files: &[PathBuf], flags: &Flags) -> Outcome {
    let (inputs, errors) = load(files);
    let results = run_parallel(flags.jobs, &inputs, |i| solve_one(&i.def, flags));
    let mut reports = Vec::new();
    let mut text = String::new();
    for (input, (mut report, t)) in inputs.iter().zip(results) {
        report["file"] = json!(input.file);
        reports.push(report);
        text.push_str(&t);
    }
    let stdout = if flags.json {
        to_json_text(&json!({ "definitions": reports, "errors": errors }))
    } else {
        text
    };
    finish(input_code(&errors), stdout, &errors)
}

