use std::path::PathBuf;
use std::process::Command;

use serde_json::Value;

fn fixture(name: &str) -> String {
    let p: PathBuf = [env!("CARGO_MANIFEST_DIR"), "tests", "fixtures", name].iter().collect();
    p.display().to_string()
}

struct Run {
    code: i32,
    stdout: String,
    stderr: String,
}

fn bimod(args: &[&str]) -> Run {
    let out = Command::new(env!("CARGO_BIN_EXE_bimod")).args(args).output().expect("binary runs");
    Run {
        code: out.status.code().expect("exit code"),
        stdout: String::from_utf8(out.stdout).unwrap(),
        stderr: String::from_utf8(out.stderr).unwrap(),
    }
}

fn json(r: &Run) -> Value {
    serde_json::from_str(&r.stdout).unwrap_or_else(|e| panic!("bad report ({e}): {}", r.stdout))
}

/// One passing invocation per command.
fn cases() -> Vec<(&'static str, Vec<String>)> {
    vec![
        ("validate", vec![fixture("random_bimodule.json")]),
        ("index", vec![fixture("hilbert_T.json")]),
        ("conjugate", vec![fixture("random_bimodule.json")]),
        ("verify", vec![fixture("hilbert_I2.json"), fixture("good_solution.json")]),
        ("mindim", vec![fixture("hilbert_T.json")]),
        ("basic", vec![fixture("random_bimodule.json")]),
        ("fibers", vec![fixture("hilbert_I2.json")]),
        ("morita", vec![fixture("mn_bimodule.json")]),
        ("tensor", vec![fixture("random_bimodule.json"), fixture("pair_y.json")]),
        ("graph", vec![fixture("graph_cycle.json")]),
        ("expectation", vec![fixture("expectation.json")]),
        ("hilbert", vec![fixture("hilbert_T.json")]),
    ]
}

#[test]
fn every_command_passes_on_its_fixture() {
    for (cmd, files) in cases() {
        let mut args = vec![cmd];
        args.extend(files.iter().map(String::as_str));
        let r = bimod(&args);
        assert_eq!(r.code, 0, "{cmd}: {}{}", r.stdout, r.stderr);
        let v = json(&r);
        assert_eq!(v["schema"], "bimod-report/1");
        assert_eq!(v["command"], cmd);
        assert_eq!(v["pass"], true);
        assert!(v["wall_time_ms"].is_number());
        assert_eq!(v["inputs"].as_array().unwrap().len(), files.len());
    }
}

#[test]
fn reports_are_reproducible() {
    for (cmd, files) in cases() {
        let mut args = vec![cmd, "--no-timing", "--seed", "7"];
        args.extend(files.iter().map(String::as_str));
        let a = bimod(&args);
        let b = bimod(&args);
        assert_eq!(a.stdout, b.stdout, "{cmd}");
        assert!(json(&a)["wall_time_ms"].is_null());
    }
}

#[test]
fn index_of_a_hilbert_space() {
    let v = json(&bimod(&["index", &fixture("hilbert_T.json")]));
    let r = &v["result"];
    assert!((r["r_num"].as_f64().unwrap() - 3.0).abs() < 1e-12);
    assert!((r["l_num"].as_f64().unwrap() - 1.5).abs() < 1e-12);
    assert!(v["inputs"][0]["sha256"].as_str().unwrap().len() == 64);
}

#[test]
fn matrix_algebra_morita_equivalence() {
    let v = json(&bimod(&["morita", &fixture("mn_bimodule.json")]));
    let r = &v["result"];
    assert_eq!(r["imprimitivity"], true);
    assert_eq!(r["trivial_indices"], true);
    assert_eq!(r["theta_r_ind"], serde_json::json!([1.0]));
    assert!((r["theta_l_ind"][0].as_f64().unwrap() - 1.0).abs() < 1e-12);
    assert!((r["min_dim"].as_f64().unwrap() - 1.0).abs() < 1e-6);
}

#[test]
fn scaled_solution_fails_verification() {
    let r = bimod(&["verify", &fixture("hilbert_I2.json"), &fixture("bad_solution.json")]);
    assert_eq!(r.code, 1);
    let v = json(&r);
    assert_eq!(v["pass"], false);
    let res = v["result"]["verification"]["residual_x"].as_f64().unwrap();
    assert!((res - 1.0).abs() < 1e-10);
}

#[test]
fn input_errors_exit_with_two() {
    let r = bimod(&["graph", &fixture("negative_weight.json")]);
    assert_eq!(r.code, 2);
    assert!(r.stderr.contains("v2->v1"), "{}", r.stderr);
    assert!(json(&r)["error"].is_string());

    let r = bimod(&["index", &fixture("malformed.json")]);
    assert_eq!(r.code, 2);
    assert!(r.stderr.contains("malformed.json:5:1"), "{}", r.stderr);

    // Wrong file kind, wrong arity, missing file, unknown command.
    assert_eq!(bimod(&["graph", &fixture("hilbert_T.json")]).code, 2);
    assert_eq!(bimod(&["verify", &fixture("hilbert_T.json")]).code, 2);
    assert_eq!(bimod(&["index", "no/such/file.json"]).code, 2);
    assert_eq!(bimod(&["frobnicate", &fixture("hilbert_T.json")]).code, 2);
    // Right-only data cannot be indexed.
    assert_eq!(bimod(&["index", &fixture("algebra.json")]).code, 2);
    assert_eq!(bimod(&["index", &fixture("hilbert_T.json"), "--tol", "-1"]).code, 2);
}

#[test]
fn output_file_and_text_format() {
    let dir = std::env::temp_dir().join(format!("bimod-cli-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    let out = dir.join("report.json");
    let r = bimod(&["hilbert", &fixture("hilbert_T.json"), "--out", out.to_str().unwrap()]);
    assert_eq!(r.code, 0);
    assert!(r.stdout.is_empty());
    let v: Value = serde_json::from_str(&std::fs::read_to_string(&out).unwrap()).unwrap();
    assert_eq!(v["result"]["trace_t"], 3.0);

    let r = bimod(&["graph", &fixture("graph_cycle.json"), "--format", "text"]);
    assert_eq!(r.code, 0);
    assert!(r.stdout.contains("PASS  right_index_closed_form"));
    assert!(r.stdout.contains("overall: PASS"));
    std::fs::remove_dir_all(&dir).unwrap();
}

#[test]
fn budget_and_seed_reach_the_optimizer() {
    let r = json(&bimod(&["mindim", &fixture("random_bimodule.json"), "--budget", "300", "--seed", "3"]));
    assert!(r["result"]["evaluations"].as_u64().unwrap() <= 300);
    assert_eq!(r["options"]["seed"], 3);
    assert_eq!(r["options"]["budget"], 300);
}
