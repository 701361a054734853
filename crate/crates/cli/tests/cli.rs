use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;
use tempfile::TempDir;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_flicforq"))
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("binary runs")
}

fn code(out: &Output) -> i32 {
    out.status.code().expect("exit code")
}

fn json(out: &Output) -> Value {
    serde_json::from_slice(&out.stdout).expect("stdout is JSON")
}

fn write(dir: &TempDir, name: &str, text: &str) -> PathBuf {
    let path = dir.path().join(name);
    fs::write(&path, text).unwrap();
    path
}

fn params(dir: &TempDir) -> PathBuf {
    write(dir, "params.json", r#"{"w1z": 1.05, "w2z": 0.95, "wxx": 0.01}"#)
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn compiled(dir: &TempDir, gate: &str) -> PathBuf {
    let p = params(dir);
    let out = run(&["compile", gate, "--params", s(&p)]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let path = dir.path().join(format!("{gate}.json"));
    fs::write(&path, &out.stdout).unwrap();
    path
}

#[test]
fn compile_cnot_has_four_segments_and_one_virtual_z() {
    let dir = TempDir::new().unwrap();
    let p = params(&dir);
    let v = json(&run(&["compile", "cnot", "--params", s(&p)]));
    assert_eq!(v["segments"].as_array().unwrap().len(), 4);
    assert_eq!(v["virtual_z"].as_array().unwrap().len(), 1);
}

#[test]
fn compile_d_is_one_segment_at_half_detuning() {
    let dir = TempDir::new().unwrap();
    let p = params(&dir);
    let v = json(&run(&["compile", "d", "--params", s(&p)]));
    let segs = v["segments"].as_array().unwrap();
    assert_eq!(segs.len(), 1);
    for q in ["q1", "q2"] {
        let y = segs[0][q]["y"].as_f64().unwrap();
        assert!((y.abs() - 0.05).abs() < 1e-12, "{q}.y = {y}");
    }
}

#[test]
fn missing_params_file_exits_2() {
    let out = run(&["compile", "d", "--params", "/nonexistent/params.json"]);
    assert_eq!(code(&out), 2);
    assert!(out.stdout.is_empty());
}

#[test]
fn simulated_cnot_flips_target_when_control_is_set() {
    let dir = TempDir::new().unwrap();
    let seq = compiled(&dir, "cnot");
    let csv = dir.path().join("traj.csv");
    let out = run(&["simulate", s(&seq), "--state", "10", "--out", s(&csv)]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let v = json(&out);
    let b2: Vec<f64> = v["bloch2"].as_array().unwrap().iter().map(|x| x.as_f64().unwrap()).collect();
    assert!(b2[2] < -0.99, "bloch2 = {b2:?}");
    assert!(b2[0].hypot(b2[1]) < 0.15, "bloch2 = {b2:?}");
    let text = fs::read_to_string(&csv).unwrap();
    assert_eq!(text.lines().next().unwrap(), "t,frame,cx1,cy1,cz1,cx2,cy2,cz2");
}

#[test]
fn empty_sequence_stays_put_in_rotating_frame() {
    let dir = TempDir::new().unwrap();
    let seq = write(
        &dir,
        "idle.json",
        r#"{"w1z": 1.05, "w2z": 0.95, "wxx": 0.01, "segments": [], "total_time": 62.83185307179586}"#,
    );
    let out = run(&["simulate", s(&seq), "--state", "00"]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let text = String::from_utf8(out.stdout).unwrap();
    let rows: Vec<&str> = text.lines().skip(1).collect();
    assert!(rows.len() > 2);
    // Coupling drift bound: components move by at most wxx·t.
    for row in rows {
        let f: Vec<f64> = row.split(',').skip(2).map(|x| x.parse().unwrap()).collect();
        let t: f64 = row.split(',').next().unwrap().parse().unwrap();
        let moved = (f[2] - 1.0).abs().max((f[5] - 1.0).abs());
        assert!(moved <= 0.01 * t + 1e-9, "t={t}: {row}");
    }
}

#[test]
fn unwritable_csv_path_exits_4() {
    let dir = TempDir::new().unwrap();
    let seq = compiled(&dir, "d");
    let out = run(&["simulate", s(&seq), "--out", "/nonexistent/dir/traj.csv"]);
    assert_eq!(code(&out), 4);
    assert!(!out.stderr.is_empty());
}

#[test]
fn fidelity_gates_on_min() {
    let dir = TempDir::new().unwrap();
    let seq = compiled(&dir, "cnot");
    let word = "X2^1/2 Y1^1/2 X1X2^1/2 Y1^-1/2 Z1^1/2";
    let out = run(&["fidelity", s(&seq), word, "--min", "0.98"]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let v = json(&out);
    assert!(v["process"].as_f64().unwrap() >= 0.98);
    assert_eq!(v["per_state"].as_object().unwrap().len(), 4);
    assert_eq!(v["alignment"].as_array().unwrap().len(), 4);

    let strict = run(&["fidelity", s(&seq), word, "--min", "0.999"]);
    assert_eq!(code(&strict), 5);
}

#[test]
fn fidelity_of_empty_sequence_against_empty_word_is_one() {
    let dir = TempDir::new().unwrap();
    let seq = write(&dir, "empty.json", r#"{"w1z": 1.05, "w2z": 0.95, "wxx": 0.01, "segments": []}"#);
    let v = json(&run(&["fidelity", s(&seq), ""]));
    assert!((v["process"].as_f64().unwrap() - 1.0).abs() < 1e-12);
}

#[test]
fn bad_token_exits_2() {
    let dir = TempDir::new().unwrap();
    let seq = compiled(&dir, "d");
    assert_eq!(code(&run(&["fidelity", s(&seq), "Q1^1/2"])), 2);
}

#[test]
fn sweep_keeps_grid_order() {
    let dir = TempDir::new().unwrap();
    let grid = write(
        &dir,
        "grid.json",
        r#"[{"delta": 0.1, "wxx": 0.01}, {"delta": 0.05, "wxx": 0.01}]"#,
    );
    let out = run(&["sweep", s(&grid), "--metric", "one-qubit-error", "--jobs", "2"]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let text = String::from_utf8(out.stdout).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], "delta,wxx,metric");
    assert!(lines[1].starts_with("0.1,0.01,"));
    assert!(lines[2].starts_with("0.05,0.01,"));
    let metric = |l: &str| l.rsplit(',').next().unwrap().parse::<f64>().unwrap();
    assert!(metric(lines[2]) > metric(lines[1]));
}

#[test]
fn sweep_single_point_and_failures() {
    let dir = TempDir::new().unwrap();
    let one = write(&dir, "one.json", r#"[{"delta": 0.1, "wxx": 0.01}]"#);
    let out = run(&["sweep", s(&one), "--metric", "d-concurrence"]);
    assert_eq!(code(&out), 0);
    assert_eq!(String::from_utf8(out.stdout).unwrap().lines().count(), 2);

    let bad = write(&dir, "bad.json", r#"[{"delta": 0.1, "wxx": 0.01}, {"delta": -1.0, "wxx": 0.01}]"#);
    let out = run(&["sweep", s(&bad), "--metric", "d-concurrence"]);
    assert_eq!(code(&out), 4);
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.lines().nth(2).unwrap().ends_with(",nan"));
}

#[test]
fn resonance_examples() {
    let dir = TempDir::new().unwrap();
    let p = params(&dir);
    let gap = |extra: &[&str]| {
        let mut args = vec!["resonance", "--params", s(&p)];
        args.extend_from_slice(extra);
        let v = json(&run(&args));
        (v["gap"].as_f64().unwrap(), v["resonant"].as_bool().unwrap())
    };
    let (g, ok) = gap(&[]);
    assert!(g.abs() < 1e-12 && ok);
    let (g, ok) = gap(&["--amps", "0,0"]);
    assert!((g - 0.1).abs() < 1e-12 && !ok);
    let (g, ok) = gap(&["--amps", "0.06,0.04"]);
    assert!(g.abs() < 1e-12 && ok);
}

#[test]
fn outputs_are_deterministic() {
    let dir = TempDir::new().unwrap();
    let seq = compiled(&dir, "xx-half");
    let a = run(&["simulate", s(&seq), "--state", "bloch:1,0,0;0,0,1"]);
    let b = run(&["simulate", s(&seq), "--state", "bloch:1,0,0;0,0,1"]);
    assert_eq!(code(&a), 0);
    assert_eq!(a.stdout, b.stdout);
}
