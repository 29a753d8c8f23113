use std::process::Command;

use infmeasure::cli::{Request, ResultEnvelope, RunConfig};
use serde_json::{json, Value};

const ONE: &str = r#"{"constant":{"rho":1}}"#;

fn run(args: &[&str]) -> (i32, String, String) {
    let out = Command::new(env!("CARGO_BIN_EXE_infmeasure")).args(args).output().expect("binary runs");
    (out.status.code().unwrap_or(-1), String::from_utf8(out.stdout).unwrap(), String::from_utf8(out.stderr).unwrap())
}

fn envelope(args: &[&str]) -> ResultEnvelope {
    let (code, stdout, stderr) = run(args);
    assert_eq!(code, 0, "{stderr}");
    serde_json::from_str(&stdout).unwrap()
}

#[test]
fn documented_examples() {
    assert_eq!(envelope(&["moment", "--cov", ONE, "--vectors", "e1,e1,e1,e1"]).payload, json!(3.0));
    let e = envelope(&["equivalence", "--cov-a", ONE, "--cov-b", r#"{"constant":{"rho":2}}"#]);
    assert_eq!(e.payload, json!("Singular"));
    assert!(e.details["evidence"]["hs_series"].is_object());
    let k = envelope(&["kernel", "--spec", r#"{"massive_free_1d":{"m":1}}"#, "--at", "0"]);
    assert_eq!(k.payload, json!(0.5));
    assert!(!k.provenance.is_empty());
}

#[test]
fn exit_codes() {
    assert_eq!(run(&["--tol", "-1", "selftest"]).0, 2);
    assert_eq!(run(&["sample", "--cov", ONE, "--truncation", "4"]).0, 2);
    assert_eq!(run(&["selftest", "--level", "full"]).0, 2);
    assert_eq!(run(&["bohr", "--freqs", "1,2"]).0, 2);
    let (code, _, stderr) = run(&["--tol", "1e-30", "kernel", "--spec", r#"{"massive_free_1d":{"m":1}}"#, "--at", "2"]);
    assert_eq!(code, 3, "{stderr}");
    let err: Value = serde_json::from_str(&stderr).unwrap();
    assert_eq!(err["error"]["kind"], "tolerance_unreached");
}

#[test]
fn schema_errors_name_the_key() {
    let (code, _, stderr) = run(&["support", "--cov", ONE, "--weights", r#"{"power":{"c":1,"p":1,"extra":0}}"#]);
    assert_eq!(code, 2);
    assert!(stderr.contains("--weights") && stderr.contains("extra"), "{stderr}");
    let (code, _, stderr) = run(&[
        "product",
        "--spec",
        r#"{"identical":{"uniform":{"a":0,"b":1}}}"#,
        "--cylinder",
        r#"{"base":[{"index":1,"boxes":[[0,"x"]]}]}"#,
    ]);
    assert_eq!(code, 2);
    assert!(stderr.contains("base[0]"), "{stderr}");
}

#[test]
fn quick_selftest_passes() {
    let (code, stdout, stderr) = run(&["--out", "csv", "selftest"]);
    assert_eq!(code, 0, "{stderr}");
    assert_eq!(stdout.lines().count(), 12);
    assert!(stdout.lines().skip(1).all(|l| l.contains(",true,")));
}

#[test]
fn stochastic_payloads_are_reproducible() {
    let args = ["--seed", "99", "moment", "--cov", ONE, "--vectors", "e1,e2,e1,e2", "--mc", "20000"];
    let a = envelope(&args);
    let b = envelope(&args);
    assert_eq!(a.details.to_string(), b.details.to_string());
    assert_eq!(a.inputs_digest, b.inputs_digest);
    let s1 = run(&["--seed", "5", "sample", "--cov", ONE, "--truncation", "32"]).1;
    let s2 = run(&["--seed", "5", "sample", "--cov", ONE, "--truncation", "32"]).1;
    let p = |s: &str| serde_json::from_str::<ResultEnvelope>(s).unwrap().payload.to_string();
    assert_eq!(p(&s1), p(&s2));
    let s3 = run(&["--seed", "6", "sample", "--cov", ONE, "--truncation", "32"]).1;
    assert_ne!(p(&s1), p(&s3));
}

#[test]
fn inputs_from_files() {
    let dir = std::env::temp_dir().join(format!("infmeasure-cli-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    let path = dir.join("cov.json");
    std::fs::write(&path, r#"{"power": {"c": 1, "p": 2}}"#).unwrap();
    let e = envelope(&["chi", "--cov", path.to_str().unwrap(), "--vector", "e2"]);
    assert!((e.payload.as_f64().unwrap() - (-0.125f64).exp()).abs() < 1e-15);
    assert_eq!(run(&["chi", "--cov", dir.join("missing.json").to_str().unwrap(), "--vector", "e1"]).0, 2);
    std::fs::remove_dir_all(dir).unwrap();
}

#[test]
fn envelopes_round_trip_to_the_same_run() {
    let cases: Vec<Vec<&str>> = vec![
        vec!["rn-density", "--cov", ONE, "--shift", "1:0.5;3:-1", "--x", "0.1,-0.4,2"],
        vec!["shift-admissible", "--cov", ONE, "--shift", r#"{"power":{"c":1,"p":1}}"#],
        vec!["hs-check", "--weights", r#"{"geometric":{"c":1,"q":0.9}}"#],
        vec!["--seed", "3", "support", "--cov", ONE, "--weights", r#"{"power":{"c":1,"p":1}}"#, "--mc", "200", "100"],
        vec!["kernel", "--spec", r#"{"white_noise":{"sigma":2}}"#, "--regularity"],
        vec!["bohr", "--freqs", "1,1.5", "--check-independence", "4", "--integral", "cos2:2", "--points", "8"],
        vec!["--seed", "8", "bohr", "--freqs", "1", "--integral", "char:1", "--mc", "1000"],
        vec![
            "product",
            "--spec",
            r#"{"identical":{"gaussian":{"rho":1}}}"#,
            "--cylinder",
            r#"{"base":[{"index":2,"boxes":[["-inf",0]]}]}"#,
        ],
        vec!["consistency", "--tables", r#"[{"indices":[1],"cuts":[[0]],"probs":[0.5,0.5]}]"#],
    ];
    for args in cases {
        let e = envelope(&args);
        let request: Request = serde_json::from_value(json!({"subcommand": e.subcommand, "inputs": e.inputs})).unwrap();
        let config = RunConfig { request, seed: e.seed, tol: e.tol, out: Default::default() };
        assert_eq!(config.digest(), e.inputs_digest, "{args:?}");
        let (again, _) = infmeasure::cli::run(&config).unwrap();
        assert_eq!(again.payload, e.payload, "{args:?}");
    }
}

#[test]
fn tabular_output() {
    let (code, stdout, _) =
        run(&["--seed", "1", "--out", "csv", "support", "--cov", ONE, "--weights", ONE, "--mc", "400", "100"]);
    assert_eq!(code, 0);
    assert!(stdout.starts_with("n,mean,standard_error\n"));
    let (code, stdout, _) =
        run(&["--out", "csv", "kernel", "--spec", r#"{"massive_free_1d":{"m":2}}"#, "--at", "-1,0,1"]);
    assert_eq!(code, 0);
    assert_eq!(stdout.lines().count(), 4);
    assert_eq!(run(&["--out", "csv", "equivalence", "--cov-a", ONE, "--cov-b", ONE]).0, 2);
}
