use std::path::PathBuf;
use std::process::{Command, Output};

fn bin(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_spraymetric")).args(args).output().unwrap()
}

fn scenario(name: &str) -> String {
    let p: PathBuf = [env!("CARGO_MANIFEST_DIR"), "..", "core", "scenarios", name].iter().collect();
    p.to_string_lossy().into_owned()
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

#[test]
fn examples_lists_the_registry() {
    let o = bin(&["examples"]);
    assert_eq!(o.status.code(), Some(0));
    let text = stdout(&o);
    for name in ["flat", "klein", "positive_cc", "numata", "affine2d_g", "degenerate2d", "nonmetrizable2d", "shen_ricciflat"] {
        assert!(text.lines().any(|l| l.starts_with(name)), "{name}");
    }
    let json: serde_json::Value = serde_json::from_slice(&bin(&["examples", "--json"]).stdout).unwrap();
    assert_eq!(json.as_array().unwrap().len(), 10);
}

#[test]
fn example_writes_the_report() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("klein.json");
    let o = bin(&["example", "klein", "--variant", "3d", "--out", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let v: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(&out).unwrap()).unwrap();
    assert_eq!(v["verdict"], "MetrizableConstant");
    assert_eq!(v["scenario"]["n"], 3);
}

#[test]
fn check_reports_to_stdout() {
    let o = bin(&["check", &scenario("nonmetrizable2d.json"), "--samples", "50", "--seed", "3"]);
    assert_eq!(o.status.code(), Some(0));
    let v: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(v["verdict"], "FailsConditionIII");
    assert_eq!(v["scenario"]["samples"]["count"], 50);
    assert!(v.get("reconstruction").is_none());
}

#[test]
fn reconstruct_compares_against_expected() {
    let o = bin(&["reconstruct", &scenario("affine2d_g_square.json")]);
    assert_eq!(o.status.code(), Some(0));
    let v: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert!(v["comparison"]["kappa_max_rel_err"].as_f64().unwrap() < 1e-6);
}

#[test]
fn loose_tolerance_turns_into_a_mismatch() {
    let o = bin(&["check", &scenario("nonmetrizable2d.json"), "--tol", "10"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stderr).contains("MISMATCH"));
}

#[test]
fn input_errors_exit_with_two() {
    assert_eq!(bin(&["check", "/no/such/file.json"]).status.code(), Some(2));
    assert_eq!(bin(&["example", "nope"]).status.code(), Some(2));
    assert_eq!(bin(&["example", "klein", "--variant", "7d"]).status.code(), Some(2));
    assert_eq!(bin(&["reconstruct", &scenario("flat.json")]).status.code(), Some(2));
    assert_eq!(bin(&["check", &scenario("flat.json"), "--samples", "0"]).status.code(), Some(2));
    assert_eq!(bin(&["frobnicate"]).status.code(), Some(2));

    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.json");
    std::fs::write(&bad, r#"{"n": 2, "mode": "spray", "G": ["0", "y1 +"], "domain": {"x_box": [0, 1], "y_box": [0, 1]}}"#).unwrap();
    let o = bin(&["check", bad.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("G[1]"));
}

#[test]
fn numeric_failures_exit_with_three() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("ln.json");
    std::fs::write(&path, r#"{"n": 2, "mode": "spray", "G": ["ln(x1)*y1^2", "0"], "domain": {"x_box": [-1, 1], "y_box": [-1, 1]}}"#).unwrap();
    assert_eq!(bin(&["check", path.to_str().unwrap()]).status.code(), Some(3));
}

#[test]
fn grid_writes_csv() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("grid.csv");
    let o = bin(&["grid", "--example", "degenerate2d", "--out", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0));
    let text = std::fs::read_to_string(&out).unwrap();
    assert_eq!(text.lines().next().unwrap(), "x1,x2,y1,y2,rho,F,kappa,res_ii,res_iii,detV");
    assert!(text.lines().count() > 10);
}
