use ceflux::io::PairFile;
use serde_json::Value;
use std::path::Path;
use std::process::Command;

fn ceflux(args: &[&str], threads: Option<&str>) -> (i32, String) {
    let mut c = Command::new(env!("CARGO_BIN_EXE_ceflux"));
    c.args(args);
    if let Some(t) = threads {
        c.env("RAYON_NUM_THREADS", t);
    }
    let out = c.output().expect("binary runs");
    (out.status.code().unwrap_or(-1), String::from_utf8_lossy(&out.stderr).into_owned())
}

fn json(path: &Path) -> Value {
    serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap()
}

#[test]
fn ce_verify_example() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("ce.json");
    let (code, err) = ceflux(&["ce-verify", "--example", "7.1", "--basis-grid", "16", "--out", out.to_str().unwrap()], None);
    assert_eq!(code, 0, "{err}");
    let v = json(&out);
    assert!(v["discretized"]["max_abs"].as_f64().unwrap() <= 1e-3);
    assert_eq!(v["pass"], Value::Bool(true));
}

#[test]
fn failing_check_exits_one_and_still_writes() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("ce.json");
    let (code, _) = ceflux(&["ce-verify", "--example", "7.1", "--tol", "1e-9", "--out", out.to_str().unwrap()], None);
    assert_eq!(code, 1);
    assert_eq!(json(&out)["pass"], Value::Bool(false));
}

#[test]
fn roundtrip_command() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("rt.json");
    let (code, err) = ceflux(&["roundtrip", "--n", "100", "--seed", "42", "--out", out.to_str().unwrap()], None);
    assert_eq!(code, 0, "{err}");
    assert!(json(&out)["stats"]["lip_roundtrip"].as_f64().unwrap() <= 1e-9);
}

#[test]
fn minimal_flux_circle() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("mf.json");
    let (code, err) = ceflux(&["minimal-flux", "--example", "7.2", "--out", out.to_str().unwrap()], None);
    assert_eq!(code, 0, "{err}");
    assert!(json(&out)["objective"].as_f64().unwrap() <= 1e-6);
}

#[test]
fn usage_and_input_errors_exit_two() {
    assert_eq!(ceflux(&["frobnicate"], None).0, 2);
    assert_eq!(ceflux(&["ce-verify"], None).0, 2);
    assert_eq!(ceflux(&["ce-verify", "--example", "7.1", "--tol", "-1"], None).0, 2);
    assert_eq!(ceflux(&["example", "--id", "9.9", "--emit", "/tmp"], None).0, 2);
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.json");
    std::fs::write(&bad, "{\"mu\": [1, 2").unwrap();
    let (code, err) = ceflux(&["ce-verify", "--input", bad.to_str().unwrap()], None);
    assert_eq!(code, 2);
    assert!(err.contains("error"), "{err}");
}

#[test]
fn emitted_example_reloads() {
    let dir = tempfile::tempdir().unwrap();
    let (code, _) = ceflux(&["example", "--id", "7.1", "--curves", "50", "--emit", dir.path().to_str().unwrap()], None);
    assert_eq!(code, 0);
    let pair: PairFile = serde_json::from_str(&std::fs::read_to_string(dir.path().join("7.1_pair.json")).unwrap()).unwrap();
    pair.validate().unwrap();
    let fx = dir.path().join("7.1_pair.json");
    let eta = dir.path().join("7.1_eta.json");
    let (code, err) = ceflux(
        &["superpose", "--input", fx.to_str().unwrap(), "--ensemble", eta.to_str().unwrap(), "--out", dir.path().join("s.json").to_str().unwrap()],
        None,
    );
    assert_eq!(code, 0, "{err}");
}

#[test]
fn lift_is_deterministic_across_threads() {
    let dir = tempfile::tempdir().unwrap();
    let run = |threads: &str, name: &str| {
        let out = dir.path().join(name);
        let args = [
            "lift", "--example", "7.1", "--grid", "0.02", "--ds", "2e-3", "--starts", "40", "--seed", "7", "--out",
            out.to_str().unwrap(),
        ];
        ceflux(&args, Some(threads));
        std::fs::read(out).unwrap()
    };
    let a = run("1", "a.json");
    let b = run("4", "b.json");
    assert!(!a.is_empty());
    assert_eq!(a, b);
}
