use std::process::{Command, Output};

fn opspace(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_opspace")).args(args).output().expect("binary runs")
}

fn json(out: &Output) -> serde_json::Value {
    serde_json::from_slice(&out.stdout).expect("stdout is JSON")
}

#[test]
fn opnorm_p2_is_singular_value() {
    let out = opspace(&["opnorm", "[[3, 0], [0, [0, -2]]]", "--p", "2"]);
    assert!(out.status.success());
    let v = json(&out);
    assert!((v["lower"].as_f64().unwrap() - 3.0).abs() < 1e-9);
    assert!((v["upper"].as_f64().unwrap() - 3.0).abs() < 1e-9);
}

#[test]
fn space_and_matrix_norms() {
    let v = json(&opspace(&["space-norm", r#"{"kind":"l1","dim":3}"#, "[1, -2, [0, 3]]"]));
    assert_eq!(v["upper"].as_f64().unwrap(), 6.0);
    let out = opspace(&[
        "matnorm",
        r#"{"kind":"min","p":3,"space":{"kind":"linf","dim":2}}"#,
        r#"{"entries":[[[[1,0],[-4,0]]]]}"#,
    ]);
    assert!(out.status.success());
    assert_eq!(json(&out)["upper"].as_f64().unwrap(), 4.0);
}

#[test]
fn tensor_l1_projective_is_entry_sum() {
    let l1 = r#"{"kind":"l1","dim":2}"#;
    let v = json(&opspace(&["tensor", "proj", l1, l1, "[[1, -2], [0.5, 1]]", "--starts", "4"]));
    assert!((v["upper"].as_f64().unwrap() - 4.5).abs() < 1e-6);
    assert!((v["lower"].as_f64().unwrap() - 4.5).abs() < 1e-6);
}

#[test]
fn verify_writes_report_and_exit_code() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("report.json");
    let out = opspace(&["verify", "commutant", "--k", "3", "--samples", "2", "--out", path.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0));
    let r: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(&path).unwrap()).unwrap();
    assert!(r["checks"].as_array().unwrap().iter().all(|c| c["status"] == "pass"));
    assert_eq!(r["meta"]["params"]["k"], 3);
    assert_eq!(r["digest"].as_str().unwrap().len(), 64);
}

#[test]
fn verify_from_spec_file() {
    let dir = tempfile::tempdir().unwrap();
    let spec = dir.path().join("spec.json");
    std::fs::write(&spec, r#"{"suite":"linfty","n":2,"k":2,"p":2.0,"samples":3,"seed":4}"#).unwrap();
    let arg = format!("@{}", spec.display());
    let out = opspace(&["verify", &arg]);
    assert_eq!(out.status.code(), Some(0));
    let r = json(&out);
    assert_eq!(r["meta"]["params"]["p"], 2.0);
    assert_eq!(r["checks"].as_array().unwrap().len(), 3);
}

#[test]
fn same_seed_same_digest() {
    let a = json(&opspace(&["report", "--suites", "axioms,cross-norm", "--samples", "2", "--seed", "9"]));
    let b = json(&opspace(&["report", "--suites", "axioms,cross-norm", "--samples", "2", "--seed", "9"]));
    assert_eq!(a["digest"], b["digest"]);
    assert_eq!(a["checks"], b["checks"]);
}

#[test]
fn bad_input_exits_with_error() {
    assert_eq!(opspace(&["verify", "no-such-suite"]).status.code(), Some(2));
    assert_eq!(opspace(&["opnorm", "[[1]]", "--p", "0.5"]).status.code(), Some(2));
    assert_eq!(opspace(&["opnorm", "not json"]).status.code(), Some(2));
}
