use std::process::{Command, Output};

use obddlab::harness::{load_program, Built};
use obddlab::{Acceptor, InputSelection, Mode};

fn obddlab(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_obddlab"))
        .args(args)
        .env("OBDDLAB_THREADS", "2")
        .output()
        .expect("binary runs")
}

#[test]
fn passing_demo_exits_zero_and_writes_json() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("eq.json");
    let run = obddlab(&[
        "--cmd",
        "eq-demo",
        "--q",
        "2",
        "--format",
        "json",
        "--out",
        out.to_str().unwrap(),
    ]);
    assert_eq!(run.status.code(), Some(0), "{}", String::from_utf8_lossy(&run.stderr));
    let report: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(&out).unwrap()).unwrap();
    assert_eq!(report["pass"], true);
    assert_eq!(report["rows"][0]["total"], 16);
    assert!(!dir.path().join("eq.json.tmp").exists());
}

#[test]
fn csv_header_is_stable() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("mod.csv");
    let run = obddlab(&[
        "--cmd",
        "mod-demo",
        "--p",
        "3",
        "--n",
        "6",
        "--out",
        out.to_str().unwrap(),
    ]);
    assert_eq!(run.status.code(), Some(0));
    let text = std::fs::read_to_string(&out).unwrap();
    assert_eq!(
        text.lines().next().unwrap(),
        "experiment,function,n,width_or_dim,min_accept,max_reject,agree,total,seed,runtime_ms"
    );
}

#[test]
fn failed_check_exits_one() {
    let run = obddlab(&["--cmd", "good-set", "--m", "2"]);
    assert_eq!(run.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&run.stderr).contains("FAIL"));
}

#[test]
fn bad_input_exits_two() {
    assert_eq!(obddlab(&["--cmd", "nope"]).status.code(), Some(2));
    assert_eq!(obddlab(&["--cmd", "eq-demo", "--q", "two"]).status.code(), Some(2));
    assert_eq!(
        obddlab(&["--cmd", "export", "--builder", "no-such-thing"])
            .status
            .code(),
        Some(2)
    );
}

#[test]
fn config_file_with_flag_override() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("cfg.json");
    std::fs::write(&cfg, r#"{"cmd": "eq-demo", "q": 5, "format": "json"}"#).unwrap();
    let out = dir.path().join("r.json");
    let run = obddlab(&[
        "--config",
        cfg.to_str().unwrap(),
        "--q",
        "1",
        "--out",
        out.to_str().unwrap(),
    ]);
    assert_eq!(run.status.code(), Some(0));
    let report: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(&out).unwrap()).unwrap();
    assert_eq!(report["rows"][0]["n"], 2);
}

#[test]
fn export_round_trips() {
    let dir = tempfile::tempdir().unwrap();
    for (builder, f) in [
        ("eq-qobdd:q=2", "eq:q=2"),
        ("swq-mod:p=3,n=5", "mod:p=3,n=5"),
        ("pj:k=1,m=2", "pj:k=1,m=2"),
    ] {
        let out = dir.path().join("prog.json");
        let run = obddlab(&["--cmd", "export", "--builder", builder, "--out", out.to_str().unwrap()]);
        assert_eq!(
            run.status.code(),
            Some(0),
            "{builder}: {}",
            String::from_utf8_lossy(&run.stderr)
        );
        let built = load_program(&std::fs::read_to_string(&out).unwrap()).unwrap();
        let oracle = obddlab::functions::parse_function(f).unwrap();
        let verdict = match &built {
            Built::Quantum(q) => q.represents_bounded_error(&oracle, 0.25, &InputSelection::Exhaustive),
            Built::Leveled(p) => p.represents(&oracle, Mode::Exact, &InputSelection::Exhaustive),
            Built::KLayer(p) => p.represents(&oracle, Mode::Exact, &InputSelection::Exhaustive),
        }
        .unwrap();
        assert!(verdict.pass, "{builder}");
        if let Built::Quantum(q) = &built {
            assert_eq!(q.arity(), oracle.arity());
        }
    }
}

#[test]
fn width_table_fixed_order() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("w.csv");
    let run = obddlab(&[
        "--cmd",
        "width-table",
        "--fn",
        "eq:q=2",
        "--mode",
        "fixed",
        "--order",
        "1 3 2 4",
        "--out",
        out.to_str().unwrap(),
    ]);
    assert_eq!(run.status.code(), Some(0), "{}", String::from_utf8_lossy(&run.stderr));
    let text = std::fs::read_to_string(&out).unwrap();
    let row = text.lines().nth(1).unwrap();
    assert_eq!(row.split(',').nth(3), Some("3"), "{row}");
}
