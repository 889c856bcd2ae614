use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;
use tempfile::TempDir;

fn combres(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_combres"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn ok(args: &[&str]) -> Output {
    let out = combres(args);
    assert!(
        out.status.success(),
        "combres {args:?} failed: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    out
}

fn json(path: &Path) -> Value {
    serde_json::from_str(&fs::read_to_string(path).unwrap()).unwrap()
}

fn stdout_json(out: &Output) -> Value {
    serde_json::from_slice(&out.stdout).unwrap()
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn build(dir: &TempDir, name: &str, spec: &str) -> PathBuf {
    let spec_path = dir.path().join(format!("{name}.spec.json"));
    fs::write(&spec_path, spec).unwrap();
    let out = dir.path().join(format!("{name}.json"));
    ok(&["build", s(&spec_path), "--out", s(&out)]);
    out
}

fn close(v: &Value, expected: f64, tol: f64) -> bool {
    (v.as_f64().unwrap() - expected).abs() < tol
}

#[test]
fn build_writes_the_counterexample_choi() {
    let dir = TempDir::new().unwrap();
    let p = build(&dir, "ce", r#"{"kind": "counterexample"}"#);
    let m = json(&p);
    let dims: Vec<u64> = m["legs"].as_array().unwrap().iter().map(|l| l[1].as_u64().unwrap()).collect();
    assert_eq!(dims, [2, 2, 2, 2]);
    assert_eq!(m["entries"].as_array().unwrap().len(), 16 * 16);
    assert!(dir.path().join("ce.slots.json").exists());
}

#[test]
fn malformed_input_exits_with_code_two() {
    let dir = TempDir::new().unwrap();
    let spec = dir.path().join("bad.json");
    let out = dir.path().join("out.json");
    for text in [r#"{"kind": "unheard_of"}"#, "{not json", r#"{"kind": "planted_unitary", "env_dim": 3}"#] {
        fs::write(&spec, text).unwrap();
        assert_eq!(combres(&["build", s(&spec), "--out", s(&out)]).status.code(), Some(2));
    }
    assert_eq!(combres(&["quantify", s(&dir.path().join("missing.json"))]).status.code(), Some(2));
}

#[test]
fn quantify_reproduces_the_counterexample() {
    let dir = TempDir::new().unwrap();
    let p = build(&dir, "ce", r#"{"kind": "counterexample"}"#);
    let plain = stdout_json(&ok(&["quantify", s(&p)]));
    assert!(close(&plain["quantifiers"]["total_info"], 1.0, 1e-8));
    assert!(plain["quantifiers"]["non_markovianity"].as_f64().unwrap() > 1e-3);
    let cg = stdout_json(&ok(&["quantify", s(&p), "--coarse-grain", "all"]));
    assert!(close(&cg["quantifiers"]["total_info"], 2.0, 1e-8));
    let named = stdout_json(&ok(&["quantify", s(&p), "--coarse-grain", "t_1"]));
    assert_eq!(named["quantifiers"], cg["quantifiers"]);
}

#[test]
fn quantify_markov_and_random_processes() {
    let dir = TempDir::new().unwrap();
    let markov = build(&dir, "markov", r#"{"kind": "markov_random", "n_slots": 2, "seed": 4}"#);
    let r = stdout_json(&ok(&["quantify", s(&markov)]));
    assert!(r["quantifiers"]["non_markovianity"].as_f64().unwrap().abs() < 1e-9);
    let haar = build(&dir, "haar", r#"{"kind": "haar_random_env", "n_slots": 2, "env_dim": 3, "seed": 9}"#);
    let r = stdout_json(&ok(&["quantify", s(&haar)]));
    assert!(r["quantifiers"]["identity_defect"].as_f64().unwrap() < 1e-8);
}

#[test]
fn optimize_reaches_the_ceiling_and_names_its_witness() {
    let dir = TempDir::new().unwrap();
    let p = build(&dir, "ce", r#"{"kind": "counterexample"}"#);
    let report = dir.path().join("opt.json");
    ok(&["optimize", s(&p), "--coarse-grain", "all", "--restarts", "4", "--seed", "1", "--out", s(&report)]);
    let r = json(&report);
    let best = &r["optimizations"][0];
    assert!(close(&best["best_value"], 2.0, 1e-6), "{best}");
    let witness = dir.path().join(best["witness_file"].as_str().unwrap());
    assert!(witness.exists());

    // Re-running from the witness alone recovers the value.
    let again = dir.path().join("again.json");
    ok(&[
        "optimize", s(&p), "--restarts", "0", "--warm-start", s(&witness), "--out", s(&again),
    ]);
    assert!(close(&json(&again)["optimizations"][0]["best_value"], 2.0, 1e-6));
}

#[test]
fn optimize_finds_nothing_in_uncorrelated_processes() {
    let dir = TempDir::new().unwrap();
    let p = build(&dir, "u", r#"{"kind": "uncorrelated_random", "n_slots": 1, "seed": 2}"#);
    let report = dir.path().join("opt.json");
    ok(&["optimize", s(&p), "--restarts", "2", "--out", s(&report)]);
    assert!(close(&json(&report)["optimizations"][0]["best_value"], 0.0, 1e-6));
}

#[test]
fn optimizer_flags_override_the_config_file() {
    let dir = TempDir::new().unwrap();
    let p = build(&dir, "ce", r#"{"kind": "counterexample"}"#);
    let cfg = dir.path().join("cfg.json");
    fs::write(&cfg, r#"{"restarts": 3, "seed": 7, "objective": "markov_info"}"#).unwrap();
    let report = dir.path().join("opt.json");
    ok(&["optimize", s(&p), "--config", s(&cfg), "--seed", "11", "--objective", "I", "--out", s(&report)]);
    let echo = &json(&report)["inputs"]["config"];
    assert_eq!(echo["restarts"], 3);
    assert_eq!(echo["seed"], 11);
    assert_eq!(echo["objective"], "total_info");

    let conflict = combres(&[
        "optimize", s(&p), "--resolution", "t_1", "--coarse-grain", "all", "--out", s(&report),
    ]);
    assert_eq!(conflict.status.code(), Some(2));
    fs::write(&cfg, r#"{"restarts": 3, "bogus": 1}"#).unwrap();
    let bad = combres(&["optimize", s(&p), "--config", s(&cfg), "--out", s(&report)]);
    assert_eq!(bad.status.code(), Some(2));
}

#[test]
fn compose_adds_information() {
    let dir = TempDir::new().unwrap();
    // Identity channel written by hand: |Φ⟩⟨Φ|/2 on (in_f, out_i).
    let mut entries = vec![[0.0, 0.0]; 16];
    for (i, j) in [(0, 0), (0, 3), (3, 0), (3, 3)] {
        entries[4 * i + j] = [0.5, 0.0];
    }
    let id = dir.path().join("id.json");
    let matrix = serde_json::json!({
        "schema_version": 1,
        "legs": [["in_f", 2], ["out_i", 2]],
        "entries": entries,
        "metadata": {},
    });
    fs::write(&id, matrix.to_string()).unwrap();
    let slots = serde_json::json!({
        "schema_version": 1,
        "slots": {"times": [
            {"name": "t_i", "input": null, "output": {"label": "out_i", "dim": 2}},
            {"name": "t_f", "input": {"label": "in_f", "dim": 2}, "output": null},
        ]},
    });
    fs::write(dir.path().join("id.slots.json"), slots.to_string()).unwrap();
    assert!(close(&stdout_json(&ok(&["quantify", s(&id)]))["quantifiers"]["total_info"], 2.0, 1e-12));

    let par = dir.path().join("par.json");
    ok(&["compose", s(&id), s(&id), "--mode", "par", "--out", s(&par)]);
    assert!(close(&stdout_json(&ok(&["quantify", s(&par)]))["quantifiers"]["total_info"], 4.0, 1e-10));

    let seq = dir.path().join("seq.json");
    ok(&["compose", s(&id), s(&id), "--mode", "seq", "--out", s(&seq)]);
    assert_eq!(json(&seq)["legs"].as_array().unwrap().len(), 4);
    assert!(close(&stdout_json(&ok(&["quantify", s(&seq)]))["quantifiers"]["total_info"], 4.0, 1e-10));
}

#[test]
fn random_pairs_compose_additively() {
    let dir = TempDir::new().unwrap();
    let a = build(&dir, "a", r#"{"kind": "haar_random_env", "n_slots": 1, "seed": 1}"#);
    let b = build(&dir, "b", r#"{"kind": "haar_random_env", "n_slots": 1, "env_dim": 3, "seed": 2}"#);
    let ab = dir.path().join("ab.json");
    ok(&["compose", s(&a), s(&b), "--mode", "seq", "--out", s(&ab)]);
    let i = |p: &Path| stdout_json(&ok(&["quantify", s(p)]))["quantifiers"]["total_info"].as_f64().unwrap();
    assert!((i(&ab) - i(&a) - i(&b)).abs() < 1e-8);
}

#[test]
fn builds_are_reproducible() {
    let dir = TempDir::new().unwrap();
    let spec = r#"{"kind": "haar_random_env", "n_slots": 2, "seed": 5}"#;
    let a = build(&dir, "a", spec);
    let b = build(&dir, "b", spec);
    let (ma, mb) = (json(&a), json(&b));
    assert_eq!(ma["entries"], mb["entries"]);
    assert_eq!(ma["legs"], mb["legs"]);
    let spec_path = dir.path().join("a.spec.json");
    let c = dir.path().join("c.json");
    ok(&["build", s(&spec_path), "--seed", "6", "--out", s(&c)]);
    assert_ne!(json(&c)["entries"], ma["entries"]);
}

#[test]
fn planted_comb_is_written_and_reaches_the_bound() {
    let dir = TempDir::new().unwrap();
    let spec = dir.path().join("planted.spec.json");
    fs::write(&spec, r#"{"kind": "planted_unitary", "n_slots": 1}"#).unwrap();
    let p = dir.path().join("planted.json");
    let z = dir.path().join("planted.comb.json");
    ok(&["build", s(&spec), "--out", s(&p), "--comb-out", s(&z)]);
    let report = dir.path().join("opt.json");
    ok(&["optimize", s(&p), "--restarts", "2", "--warm-start", s(&z), "--out", s(&report)]);
    assert!(json(&report)["optimizations"][0]["best_value"].as_f64().unwrap() >= 2.0 - 1e-4);
}

#[test]
fn divergence_and_report() {
    let dir = TempDir::new().unwrap();
    let p = build(&dir, "ce", r#"{"kind": "counterexample"}"#);
    let d = dir.path().join("div.json");
    ok(&["divergence", s(&p), "--restarts", "3", "--out", s(&d)]);
    let div = &json(&d)["divergences"][0];
    assert!(div["value"].as_f64().unwrap() >= 2.0 - 1e-6, "{div}");
    assert!(dir.path().join(div["witness_file"].as_str().unwrap()).exists());
    let bad = combres(&["divergence", s(&p), "--resolution", "t_1", "--out", s(&d)]);
    assert_eq!(bad.status.code(), Some(2));

    let r = dir.path().join("report.json");
    ok(&["report", s(&p), "--restarts", "3", "--out", s(&r)]);
    let r = json(&r);
    assert_eq!(r["optimizations"].as_array().unwrap().len(), 3);
    for o in r["optimizations"].as_array().unwrap() {
        assert!(dir.path().join(o["witness_file"].as_str().unwrap()).exists());
    }
    assert!(r["witness_checks"].as_array().unwrap().iter().all(|w| w["holds"] == true));
}

#[test]
fn verify_suites_pass() {
    for suite in ["identity", "markov", "counterexample", "composition"] {
        let v = stdout_json(&ok(&["verify", suite]));
        assert_eq!(v["passed"], true, "{suite}: {v}");
    }
    assert_eq!(combres(&["verify", "nonsense"]).status.code(), Some(2));
}
