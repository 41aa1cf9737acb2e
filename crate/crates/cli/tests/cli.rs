use std::path::PathBuf;
use std::process::Command;

use asp_cli::{
    cmd_check, cmd_measure, cmd_ppda, cmd_solve, Flags, EXIT_ASP, EXIT_INPUT, EXIT_NOT_ASP,
    EXIT_UNKNOWN,
};
use asp_core::ppda::ExportFormat;
use serde_json::Value;

fn data(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests/data").join(name)
}

fn asp(args: &[&str]) -> (i32, String, String) {
    let out = Command::new(env!("CARGO_BIN_EXE_asp")).args(args).output().unwrap();
    (
        out.status.code().unwrap(),
        String::from_utf8(out.stdout).unwrap(),
        String::from_utf8(out.stderr).unwrap(),
    )
}

fn path(name: &str) -> String {
    data(name).display().to_string()
}

#[test]
fn exit_codes_follow_the_verdicts() {
    let cases = [
        ("walk34.asp", EXIT_ASP, "walk34: ASP via Measure"),
        ("ones.asp", EXIT_ASP, "ones: ASP"),
        ("loop.asp", EXIT_NOT_ASP, "loop: NotASP via Exact"),
        ("walk14.asp", EXIT_NOT_ASP, "s: NotASP"),
        ("corpus.asp", EXIT_NOT_ASP, "e2: ASP via Exact"),
        ("undecided.asp", EXIT_UNKNOWN, "u: Unknown"),
        ("partial.asp", EXIT_INPUT, "s: ASP"),
    ];
    for (file, code, line) in cases {
        let (got, stdout, _) = asp(&["check", "--no-tier3", &path(file)]);
        assert_eq!(got, code, "{file}");
        assert!(stdout.contains(line), "{file}: {stdout}");
    }
}

#[test]
fn missing_files_are_input_errors() {
    let (code, stdout, stderr) = asp(&["check", "/no/such/file.asp", &path("ones.asp")]);
    assert_eq!(code, EXIT_INPUT);
    assert!(stderr.contains("/no/such/file.asp"));
    assert!(stdout.contains("ones: ASP"));
}

#[test]
fn parse_errors_carry_locations_and_keep_valid_definitions() {
    let out = cmd_check(&[data("partial.asp")], &Flags::default());
    assert_eq!(out.code, EXIT_INPUT);
    assert!(out.stderr.contains("partial.asp:2:18:"), "{}", out.stderr);
    assert!(out.stdout.contains("s: ASP via Measure"));
    assert!(out.stdout.contains("loop: NotASP via Exact"));

    let json = cmd_check(&[data("partial.asp")], &Flags { json: true, ..Flags::default() });
    let v: Value = serde_json::from_str(&json.stdout).unwrap();
    assert_eq!(v["exitCode"], 3);
    assert_eq!(v["errors"].as_array().unwrap().len(), 1);
    let names: Vec<&str> = v["definitions"].as_array().unwrap().iter().map(|d| d["name"].as_str().unwrap()).collect();
    assert_eq!(names, ["s", "loop"]);
}

#[test]
fn json_reports_are_deterministic() {
    let args = ["check", "--json", "--confirm", "--mc-runs", "20", "--mc-horizon", "2000"];
    let file = path("corpus.asp");
    let first = asp(&[&args[..], &[file.as_str()]].concat());
    for jobs in ["1", "3"] {
        let again = asp(&[&args[..], &["--jobs", jobs, file.as_str()]].concat());
        assert_eq!(first, again);
    }
    let v: Value = serde_json::from_str(&first.1).unwrap();
    let names: Vec<&str> = v["definitions"].as_array().unwrap().iter().map(|d| d["name"].as_str().unwrap()).collect();
    assert_eq!(names, ["walk34", "walk12", "walk14", "loop", "coin", "trap", "e1", "e2", "ones"]);
    assert!(v["definitions"][0].get("timingMs").is_none());
    let timed = asp(&["check", "--json", "--timing", "--no-tier3", &path("ones.asp")]);
    let v: Value = serde_json::from_str(&timed.1).unwrap();
    assert!(v["definitions"][0]["timingMs"].is_number());
}

#[test]
fn measure_lines() {
    let out = cmd_measure(&[data("trees.asp")], false);
    assert_eq!(out.code, EXIT_ASP);
    assert_eq!(out.stdout, "e1 1/2\ne2 -1/4\n");
    let (code, stdout, _) = asp(&["measure", &path("trees.asp")]);
    assert_eq!((code, stdout.as_str()), (0, "e1 1/2\ne2 -1/4\n"));
}

#[test]
fn ppda_export_shows_the_empty_stack_edge() {
    let out = cmd_ppda(&[data("ones.asp")], ExportFormat::Graphviz);
    assert_eq!(out.code, EXIT_ASP);
    assert!(out.stdout.starts_with("digraph"));
    assert!(out.stdout.contains("[label=\"⊥ / ε : 1\"]"), "{}", out.stdout);
    let json = cmd_ppda(&[data("ones.asp")], ExportFormat::Json);
    let v: Value = serde_json::from_str(&json.stdout).unwrap();
    assert_eq!(v["kind"], "stream");
}

#[test]
fn solve_prints_bounds_and_certificates() {
    let out = cmd_solve(&[data("walk14.asp")], &Flags::default());
    assert!(out.stdout.contains("[s, tl, s] ≈ 0.333333 SubReturn(cert 17/50)"), "{}", out.stdout);
    assert!(out.stdout.contains("[a : s, tl, s] ≈ 1.000000 AlmostSureReturn"));
    let out = cmd_solve(&[data("trees.asp")], &Flags::default());
    assert!(out.stdout.contains("AlmostSureReturn"));
    assert!(!out.stdout.contains("Unknown"));
}

#[test]
fn simulate_reports_statistics() {
    let (code, stdout, _) =
        asp(&["simulate", "--mc-runs", "20", "--mc-horizon", "1000", "--trace", "6", &path("walk14.asp")]);
    assert_eq!(code, 0);
    assert!(stdout.contains("20 runs x 1000 steps"));
    assert!(stdout.contains("trace: Out a"));
}

const SINGLES: [(&str, i32); 6] = [
    ("walk34.asp", EXIT_ASP),
    ("ones.asp", EXIT_ASP),
    ("loop.asp", EXIT_NOT_ASP),
    ("walk14.asp", EXIT_NOT_ASP),
    ("undecided.asp", EXIT_UNKNOWN),
    ("partial.asp", EXIT_INPUT),
];

fn combined(codes: &[i32]) -> i32 {
    [EXIT_INPUT, EXIT_NOT_ASP, EXIT_UNKNOWN].into_iter().find(|c| codes.contains(c)).unwrap_or(EXIT_ASP)
}

proptest::proptest! {
    #![proptest_config(proptest::prelude::ProptestConfig::with_cases(64))]

    #[test]
    fn exit_code_contract(picks in proptest::collection::vec(0..SINGLES.len(), 1..5)) {
        let files: Vec<PathBuf> = picks.iter().map(|&i| data(SINGLES[i].0)).collect();
        let codes: Vec<i32> = picks.iter().map(|&i| SINGLES[i].1).collect();
        let flags = Flags { no_tier3: true, ..Flags::default() };
        proptest::prop_assert_eq!(cmd_check(&files, &flags).code, combined(&codes));
    }
}
