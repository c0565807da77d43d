use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;
use tempfile::TempDir;

struct Workdir {
    dir: TempDir,
}

impl Workdir {
    fn new() -> Self {
        Self {
            dir: TempDir::new().unwrap(),
        }
    }

    fn file(&self, name: &str, body: &str) -> PathBuf {
        let path = self.dir.path().join(name);
        std::fs::write(&path, body).unwrap();
        path
    }

    fn path(&self, name: &str) -> PathBuf {
        self.dir.path().join(name)
    }
}

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_treeshift"))
        .args(args)
        .output()
        .unwrap()
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn stdout_json(out: &Output) -> Value {
    serde_json::from_slice(&out.stdout).unwrap_or_else(|e| {
        panic!("{e}: {}", String::from_utf8_lossy(&out.stdout));
    })
}

const BINARY: &str = r#"{"kind":"rooted","arity":{"period":[2]}}"#;
const ROOTED_LINE: &str = r#"{"kind":"rooted","arity":{"period":[1]}}"#;
const UNROOTED_LINE: &str = r#"{"kind":"unrooted","arity":{"period":[1]}}"#;
const UNROOTED_BINARY: &str = r#"{"kind":"unrooted","arity":{"period":[2]}}"#;

fn constant(value: f64) -> String {
    format!(r#"{{"mode":"constant","value":{value}}}"#)
}

fn classify(tree: &str, weights: &str, space: &str) -> (i32, Value) {
    let w = Workdir::new();
    let t = w.file("tree.json", tree);
    let l = w.file("weights.json", weights);
    let out = run(&[
        "classify",
        "--tree",
        s(&t),
        "--weights",
        s(&l),
        "--space",
        space,
    ]);
    (out.status.code().unwrap(), stdout_json(&out))
}

#[test]
fn classify_reports_verdicts() {
    let (code, v) = classify(BINARY, &constant(0.6), "c0");
    assert_eq!(code, 0);
    assert_eq!(v["verdict"], "ChainRecurrent");

    let (code, v) = classify(BINARY, &constant(0.4), "c0");
    assert_eq!(code, 0);
    assert_eq!(v["verdict"], "NotChainRecurrent");

    let (code, v) = classify(UNROOTED_LINE, &constant(1.0), "lp:2");
    assert_eq!(code, 0);
    assert_eq!(v["verdict"], "ChainRecurrent");
    assert_eq!(v["left_condition"]["verdict"], "Diverges");

    let (code, v) = classify(UNROOTED_LINE, &constant(2.0), "c0");
    assert_eq!(code, 0);
    assert_eq!(v["verdict"], "NotChainRecurrent");
}

#[test]
fn classify_csv_has_one_row() {
    let w = Workdir::new();
    let t = w.file("tree.json", BINARY);
    let l = w.file("weights.json", &constant(0.8));
    let out = run(&[
        "classify",
        "--tree",
        s(&t),
        "--weights",
        s(&l),
        "--space",
        "c0",
        "--format",
        "csv",
    ]);
    assert_eq!(out.status.code(), Some(0));
    let text = String::from_utf8(out.stdout).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines.len(), 2);
    assert!(lines[0].starts_with("vertex,space,verdict"));
    assert!(lines[1].contains("ChainRecurrent"));
}

#[test]
fn tight_truncation_exits_inconclusive() {
    let deep = format!("0:{}", ["0"; 10].join(","));
    let tree =
        format!(r#"{{"kind":"rooted","arity":{{"period":[2]}},"overrides":[["{deep}",3]]}}"#);
    let weights = format!(r#"{{"mode":"constant","value":0.6,"overrides":[["{deep}",1.7]]}}"#);
    let w = Workdir::new();
    let t = w.file("tree.json", &tree);
    let l = w.file("weights.json", &weights);
    let args = [
        "classify",
        "--tree",
        s(&t),
        "--weights",
        s(&l),
        "--space",
        "lp:2",
    ];
    let mut tight = args.to_vec();
    tight.extend(["--nmax", "4"]);
    let out = run(&tight);
    assert_eq!(out.status.code(), Some(2));
    assert_eq!(stdout_json(&out)["verdict"], "Inconclusive");

    let out = run(&args);
    assert_eq!(out.status.code(), Some(0));
    assert_eq!(stdout_json(&out)["verdict"], "NotChainRecurrent");
}

#[test]
fn malformed_input_exits_one() {
    let w = Workdir::new();
    let t = w.file("tree.json", r#"{"kind":"rooted","arity":{"period":[0]}}"#);
    let l = w.file("weights.json", &constant(1.0));
    let out = run(&[
        "classify",
        "--tree",
        s(&t),
        "--weights",
        s(&l),
        "--space",
        "l1",
    ]);
    assert_eq!(out.status.code(), Some(1));

    let t = w.file("tree.json", BINARY);
    let out = run(&[
        "classify",
        "--tree",
        s(&t),
        "--weights",
        s(&l),
        "--space",
        "lp:0.5",
    ]);
    assert_ne!(out.status.code(), Some(0));
}

#[test]
fn chain_from_zero_on_the_line() {
    let w = Workdir::new();
    let t = w.file("tree.json", ROOTED_LINE);
    let l = w.file("weights.json", &constant(1.0));
    let out = run(&[
        "chain",
        "--tree",
        s(&t),
        "--weights",
        s(&l),
        "--space",
        "lp:2",
        "--from-zero",
        "--delta",
        "0.6",
        "--margin",
        "1",
    ]);
    assert_eq!(
        out.status.code(),
        Some(0),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let chain = stdout_json(&out);
    assert_eq!(chain["vectors"].as_array().unwrap().len(), 4);
    assert_eq!(chain["kind"], "from-zero");
}

#[test]
fn chain_to_zero_fails_when_criterion_is_not_met() {
    let w = Workdir::new();
    let t = w.file("tree.json", UNROOTED_LINE);
    let l = w.file("weights.json", &constant(2.0));
    let out = run(&[
        "chain",
        "--tree",
        s(&t),
        "--weights",
        s(&l),
        "--space",
        "l1",
        "--to-zero",
        "--delta",
        "0.5",
        "--nmax",
        "20",
    ]);
    assert_eq!(out.status.code(), Some(3));
}

#[test]
fn large_delta_loop_has_two_steps() {
    let w = Workdir::new();
    let t = w.file("tree.json", UNROOTED_BINARY);
    let l = w.file("weights.json", &constant(1.0));
    let out = run(&[
        "chain",
        "--tree",
        s(&t),
        "--weights",
        s(&l),
        "--space",
        "c0",
        "--loop",
        "--delta",
        "2",
    ]);
    assert_eq!(out.status.code(), Some(0));
    let chain = stdout_json(&out);
    let vectors = chain["vectors"].as_array().unwrap();
    assert_eq!(vectors.len(), 3);
    assert_eq!(vectors.first(), vectors.last());
}

#[test]
fn verify_round_trip_and_tampering() {
    let w = Workdir::new();
    let t = w.file("tree.json", UNROOTED_BINARY);
    let l = w.file("weights.json", &constant(0.8));
    let chain_path = w.path("chain.json");
    let out = run(&[
        "chain",
        "--tree",
        s(&t),
        "--weights",
        s(&l),
        "--space",
        "lp:2",
        "--to-zero",
        "--delta",
        "0.5",
        "--out",
        s(&chain_path),
    ]);
    assert_eq!(
        out.status.code(),
        Some(0),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );

    let out = run(&[
        "verify",
        "--chain",
        s(&chain_path),
        "--tree",
        s(&t),
        "--weights",
        s(&l),
    ]);
    assert_eq!(out.status.code(), Some(0));
    assert_eq!(stdout_json(&out)["valid"], true);

    // a tighter δ than the chain was built for
    let out = run(&[
        "verify",
        "--chain",
        s(&chain_path),
        "--tree",
        s(&t),
        "--weights",
        s(&l),
        "--delta",
        "0.01",
    ]);
    assert_eq!(out.status.code(), Some(4));

    // push one intermediate vector far away
    let mut chain: Value =
        serde_json::from_str(&std::fs::read_to_string(&chain_path).unwrap()).unwrap();
    let entries = chain["vectors"][1].as_array_mut().unwrap();
    entries[0][1] = Value::from(entries[0][1].as_f64().unwrap() + 10.0);
    let tampered = w.file("tampered.json", &chain.to_string());
    let out = run(&[
        "verify",
        "--chain",
        s(&tampered),
        "--tree",
        s(&t),
        "--weights",
        s(&l),
    ]);
    assert_eq!(out.status.code(), Some(4));
    let report = stdout_json(&out);
    assert_eq!(report["valid"], false);
    assert!(!report["failing_steps"].as_array().unwrap().is_empty());

    // the chain moves above the root of a rooted tree
    let rooted = w.file("rooted.json", BINARY);
    let out = run(&[
        "verify",
        "--chain",
        s(&chain_path),
        "--tree",
        s(&rooted),
        "--weights",
        s(&l),
    ]);
    assert_eq!(out.status.code(), Some(1));
}

fn sweep(tree: &str, space: &str, lambdas: &str) -> (i32, String) {
    let w = Workdir::new();
    let t = w.file("tree.json", tree);
    let out = run(&[
        "sweep",
        "--tree",
        s(&t),
        "--space",
        space,
        "--lambdas",
        lambdas,
        "--format",
        "csv",
    ]);
    (
        out.status.code().unwrap(),
        String::from_utf8(out.stdout).unwrap(),
    )
}

fn verdicts(csv: &str) -> Vec<String> {
    csv.lines()
        .skip(1)
        .map(|l| l.split(',').nth(2).unwrap().to_string())
        .collect()
}

#[test]
fn sweep_crosses_the_threshold() {
    let (code, csv) = sweep(BINARY, "c0", "0.4,0.5,0.6");
    assert_eq!(code, 0);
    assert_eq!(
        verdicts(&csv),
        ["NotChainRecurrent", "ChainRecurrent", "ChainRecurrent"]
    );

    let (code, csv) = sweep(BINARY, "l1", "0.99,1.0");
    assert_eq!(code, 0);
    assert_eq!(verdicts(&csv), ["NotChainRecurrent", "ChainRecurrent"]);

    let (code, csv) = sweep(BINARY, "lp:2", "0.70,0.7072");
    assert_eq!(code, 0);
    assert_eq!(verdicts(&csv), ["NotChainRecurrent", "ChainRecurrent"]);
}

#[test]
fn sweep_output_is_deterministic() {
    let lambdas: Vec<String> = (1..40).map(|i| format!("{}", i as f64 * 0.05)).collect();
    let lambdas = lambdas.join(",");
    let (_, first) = sweep(UNROOTED_BINARY, "lp:3", &lambdas);
    let (_, second) = sweep(UNROOTED_BINARY, "lp:3", &lambdas);
    assert_eq!(first, second);
    let indices: Vec<usize> = first
        .lines()
        .skip(1)
        .map(|l| l.split(',').next().unwrap().parse().unwrap())
        .collect();
    assert_eq!(indices, (0..39).collect::<Vec<_>>());
}

#[test]
fn sweep_over_a_weight_grid() {
    let w = Workdir::new();
    let t = w.file("tree.json", UNROOTED_LINE);
    let grid = w.file(
        "grid.json",
        r#"[{"mode":"constant","value":[0.0,1.0]},
            {"mode":"per_generation","profile":{"period":[2,0.25]}}]"#,
    );
    let out = run(&[
        "sweep",
        "--tree",
        s(&t),
        "--space",
        "l1",
        "--weights-grid",
        s(&grid),
    ]);
    assert_eq!(
        out.status.code(),
        Some(0),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let rows = stdout_json(&out);
    assert_eq!(rows[0]["verdict"], "ChainRecurrent");
    assert_eq!(rows[1]["verdict"], "NotChainRecurrent");
}
