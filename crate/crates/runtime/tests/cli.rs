use std::net::TcpListener;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use intent_runtime::builtins;
use intent_runtime::trace::read_csv_trace;

fn intent(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_intent")).args(args).output().expect("run intent")
}

fn path_str(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn committed(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("scenarios").join(format!("{name}.toml"))
}

#[test]
fn replay_writes_one_row_per_sample() {
    let out = intent(&["replay", path_str(&committed("fig7_left")), "--deterministic"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let text = String::from_utf8(out.stdout).unwrap();
    let (header, records) = read_csv_trace(&text).unwrap();
    assert_eq!(records.len(), builtins::fig7_left().sample_count());
    assert!(header.iter().all(|(k, _)| k != "created_unix"));
    let columns = text.lines().find(|l| !l.starts_with('#')).unwrap();
    assert_eq!(columns, "t,cylinder,cube,sphere,p_unknown,p_irrational,argmax,phi,skipped");
}

#[test]
fn overrides_appear_in_header() {
    let out = intent(&["replay", "builtin:fig7_left", "--alpha", "0.25", "--beta", "0.04", "--m", "12", "--seed", "5"]);
    assert!(out.status.success());
    let (header, _) = read_csv_trace(&String::from_utf8(out.stdout).unwrap()).unwrap();
    let get = |key: &str| header.iter().find(|(k, _)| k == key).map(|(_, v)| v.clone()).unwrap();
    assert_eq!(get("alpha"), "0.25");
    assert_eq!(get("beta"), "0.04");
    assert_eq!(get("m"), "12");
    assert_eq!(get("seed"), "5");
    assert!(header.iter().any(|(k, _)| k == "created_unix"));
}

#[test]
fn malformed_inputs_exit_2() {
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.toml");
    std::fs::write(&bad, "schema = 1\nname = [unterminated").unwrap();
    assert_eq!(intent(&["replay", path_str(&bad)]).status.code(), Some(2));
    assert_eq!(intent(&["replay", path_str(&dir.path().join("missing.toml"))]).status.code(), Some(2));
    assert_eq!(intent(&["replay", "builtin:nope"]).status.code(), Some(2));
    // the constraint g*beta + gamma <= 1 is violated for three goals
    assert_eq!(intent(&["replay", "builtin:fig7_left", "--beta", "0.4"]).status.code(), Some(2));
}

#[test]
fn sweep_rejects_bad_parameter_and_empty_values() {
    let sc = path_str(&committed("sweep_base")).to_string();
    assert_eq!(intent(&["sweep", &sc, "--param", "omega", "--values", "0.1"]).status.code(), Some(2));
    assert_eq!(intent(&["sweep", &sc, "--param", "alpha", "--values"]).status.code(), Some(2));
    assert_eq!(intent(&["sweep", &sc, "--param", "alpha"]).status.code(), Some(2));
    assert_eq!(intent(&["sweep", &sc, "--param", "m", "--values", "2.5"]).status.code(), Some(2));
}

#[test]
fn sweep_emits_one_row_per_value_deterministically() {
    let sc = path_str(&committed("sweep_base")).to_string();
    let args = ["sweep", sc.as_str(), "--param", "beta", "--values", "0.01,0.05,0.2", "--deterministic"];
    let a = intent(&args);
    let b = intent(&args);
    assert!(a.status.success());
    assert_eq!(a.stdout, b.stdout);
    let text = String::from_utf8(a.stdout).unwrap();
    let rows: Vec<&str> = text.lines().filter(|l| !l.starts_with('#')).collect();
    assert_eq!(rows.len(), 4, "header plus three rows:\n{text}");
    for id in ["cylinder", "cube", "sphere"] {
        assert!(rows[0].contains(&format!("latency_{id}")));
    }

    let json = intent(&["sweep", sc.as_str(), "--param", "alpha", "--values", "0.3", "--format", "jsonl"]);
    let line = String::from_utf8(json.stdout).unwrap();
    let rows: Vec<serde_json::Value> = line.lines().map(|l| serde_json::from_str(l).unwrap()).collect();
    assert_eq!(rows.last().unwrap()["value"], 0.3);
}

#[test]
fn synth_then_replay_equals_direct_replay() {
    let dir = tempfile::tempdir().unwrap();
    let stream = dir.path().join("obs.jsonl");
    let sc = committed("fig7_middle");
    let out = intent(&["synth", path_str(&sc), "-o", path_str(&stream)]);
    assert!(out.status.success());
    let lines = std::fs::read_to_string(&stream).unwrap().lines().count();
    assert_eq!(lines, builtins::fig7_middle().sample_count());

    let direct = intent(&["replay", path_str(&sc), "--deterministic"]);
    let from_file = intent(&["replay", path_str(&sc), "--observations", path_str(&stream), "--deterministic"]);
    assert!(from_file.status.success());
    assert_eq!(direct.stdout, from_file.stdout);
}

#[test]
fn deterministic_jsonl_is_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    let runs: Vec<Vec<u8>> = (0..2)
        .map(|i| {
            let out = dir.path().join(format!("{i}.jsonl"));
            let status = intent(&["replay", "builtin:fig7_right", "--format", "jsonl", "--deterministic", "-o", path_str(&out)]);
            assert!(status.status.success());
            std::fs::read(out).unwrap()
        })
        .collect();
    assert_eq!(runs[0], runs[1]);
    let first: serde_json::Value = serde_json::from_slice(runs[0].split(|b| *b == b'\n').next().unwrap()).unwrap();
    assert_eq!(first["meta"]["scenario"], "fig7_right");
}

#[test]
fn serve_on_occupied_port_exits_3() {
    let taken = TcpListener::bind("127.0.0.1:0").unwrap();
    let addr = taken.local_addr().unwrap().to_string();
    let out = intent(&["serve", "--bind", &addr]);
    assert_eq!(out.status.code(), Some(3), "{}", String::from_utf8_lossy(&out.stderr));
}

#[test]
fn unwritable_output_exits_1() {
    let dir = tempfile::tempdir().unwrap();
    let target = dir.path().join("no/such/dir/trace.csv");
    assert_eq!(intent(&["replay", "builtin:fig7_left", "-o", path_str(&target)]).status.code(), Some(1));
}

#[test]
fn scenarios_export_matches_committed_files() {
    let dir = tempfile::tempdir().unwrap();
    assert!(intent(&["scenarios", "--export", path_str(dir.path())]).status.success());
    for name in builtins::NAMES {
        let exported = std::fs::read_to_string(dir.path().join(format!("{name}.toml"))).unwrap();
        assert_eq!(exported, std::fs::read_to_string(committed(name)).unwrap(), "{name}");
    }
    let listing = String::from_utf8(intent(&["scenarios"]).stdout).unwrap();
    assert_eq!(listing.lines().count(), builtins::NAMES.len());
}

#[test]
fn help_and_version_exit_0() {
    assert_eq!(intent(&["--help"]).status.code(), Some(0));
    assert_eq!(intent(&["--version"]).status.code(), Some(0));
    assert_eq!(intent(&[]).status.code(), Some(2));
}
