use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;

fn data(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("data").join(name)
}

fn qudit(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_qudit"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn json(out: &Output) -> Value {
    serde_json::from_slice(&out.stdout).expect("stdout is JSON")
}

fn path_str(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn gen_basis_c2_d2() {
    let out = qudit(&["gen-basis", "--dim", "2", "--basis", "c2"]);
    assert_eq!(out.status.code(), Some(0));
    let v = json(&out);
    let r = std::f64::consts::FRAC_1_SQRT_2;
    let expected = [[r, -r], [r, r]];
    for (j, row) in expected.iter().enumerate() {
        for (k, want) in row.iter().enumerate() {
            let got = &v["rows"][j][k];
            assert!((got[0].as_f64().unwrap() - want).abs() < 1e-15);
            assert_eq!(got[1].as_f64(), Some(0.0));
        }
    }
    assert_eq!(v["provenance"]["version"], env!("CARGO_PKG_VERSION"));
}

#[test]
fn povm_fallback_on_failing_support() {
    let out = qudit(&["reconstruct-povm", "--state", path_str(&data("d4_fail.json"))]);
    assert_eq!(out.status.code(), Some(0));
    let v = json(&out);
    assert_eq!(v["path"], "fallback");
    assert_eq!(v["support"], serde_json::json!([0, 2]));
    assert!(v["fidelity"].as_f64().unwrap() > 1.0 - 1e-9);
    assert!(v["povm"].is_null());
}

#[test]
fn povm_star_mode_reports_spec() {
    let out = qudit(&[
        "reconstruct-povm",
        "--state",
        path_str(&data("d5_star.json")),
        "--mode",
        "star",
    ]);
    assert_eq!(out.status.code(), Some(0));
    let v = json(&out);
    assert_eq!(v["path"], "normal");
    assert_eq!(v["povm"]["mode"], "star");
    assert_eq!(v["povm"]["backtracks"], 0);
    // one element per pair plus the remainder
    assert_eq!(v["povm"]["elements"].as_array().unwrap().len(), 4);
    assert!(v["fidelity"].as_f64().unwrap() > 1.0 - 1e-9);
}

#[test]
fn povm_finite_shots_is_seeded() {
    let state = data("d3_generic.json");
    let args = [
        "reconstruct-povm",
        "--state",
        path_str(&state),
        "--shots",
        "20000",
        "--seed",
        "5",
    ];
    let a = qudit(&args);
    let b = qudit(&args);
    assert_eq!(a.status.code(), Some(0));
    assert_eq!(a.stdout, b.stdout);
    let f = json(&a)["fidelity"].as_f64().unwrap();
    assert!(f > 0.95 && f < 1.0, "fidelity {f}");
}

#[test]
fn simulate_then_reconstruct_c2() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path().join("p.json");
    let q = dir.path().join("q.json");
    let state = data("d3_generic.json");
    for (basis, out) in [("position", &p), ("c2", &q)] {
        let o = qudit(&[
            "simulate",
            "--state",
            path_str(&state),
            "--basis",
            basis,
            "--out",
            path_str(out),
        ]);
        assert_eq!(o.status.code(), Some(0));
        assert!(o.stdout.is_empty());
    }
    let out = qudit(&[
        "reconstruct-c2",
        "--pos",
        path_str(&p),
        "--c2dist",
        path_str(&q),
        "--prune",
    ]);
    assert_eq!(out.status.code(), Some(0));
    let v = json(&out);
    assert!(v["failed"].is_null());
    let n = v["candidates"].as_array().unwrap().len();
    assert!((1..=4).contains(&n));
    assert_eq!(v["bound"], 4);
}

#[test]
fn chain_break_is_a_domain_error() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path().join("p.json");
    let q = dir.path().join("q.json");
    let state = data("d3_broken.json");
    for (basis, out) in [("position", &p), ("c2", &q)] {
        let o = qudit(&[
            "simulate",
            "--state",
            path_str(&state),
            "--renormalize",
            "--basis",
            basis,
            "--out",
            path_str(out),
        ]);
        assert_eq!(o.status.code(), Some(0));
    }
    let out = qudit(&[
        "reconstruct-c2",
        "--pos",
        path_str(&p),
        "--c2dist",
        path_str(&q),
        "--tol",
        "1e-6",
    ]);
    assert_eq!(out.status.code(), Some(1));
    let v = json(&out);
    assert_eq!(v["error"], "ChainBroken");
    assert_eq!(v["failed"]["site"], 2);
}

#[test]
fn inconsistent_distributions_exit_one() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path().join("p.json");
    let q = dir.path().join("q.json");
    std::fs::write(&p, r#"{"dim": 2, "source": "position", "probs": [0.5, 0.5]}"#).unwrap();
    std::fs::write(&q, r#"{"dim": 2, "source": "c2", "probs": [0.1, 0.9]}"#).unwrap();
    let ok = qudit(&["reconstruct-c2", "--pos", path_str(&p), "--c2dist", path_str(&q)]);
    assert_eq!(ok.status.code(), Some(0));
    // a = (0.9, 0.1) cannot produce an even split in the C2 basis
    std::fs::write(&p, r#"{"dim": 2, "source": "position", "probs": [0.99, 0.01]}"#).unwrap();
    std::fs::write(&q, r#"{"dim": 2, "source": "c2", "probs": [0.0, 1.0]}"#).unwrap();
    let out = qudit(&["reconstruct-c2", "--pos", path_str(&p), "--c2dist", path_str(&q)]);
    assert_eq!(out.status.code(), Some(1));
    assert_eq!(json(&out)["error"], "InconsistentDistributions");
}

#[test]
fn measure_zero_report() {
    let out = qudit(&[
        "check-measure-zero",
        "--state",
        path_str(&data("d3_broken.json")),
        "--renormalize",
    ]);
    assert_eq!(out.status.code(), Some(0));
    let v = json(&out);
    assert_eq!(v["in_set"], true);
    assert_eq!(v["failing_index"], 1);

    let out = qudit(&["check-measure-zero", "--state", path_str(&data("d3_generic.json"))]);
    let v = json(&out);
    assert_eq!(v["in_set"], false);
    assert!(v["margin"].as_f64().unwrap() > 0.0);
}

#[test]
fn unnormalized_state_needs_flag() {
    let out = qudit(&["check-measure-zero", "--state", path_str(&data("d3_broken.json"))]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("--renormalize"));
}

#[test]
fn usage_errors_exit_two() {
    let out = qudit(&["gen-basis", "--dim", "2", "--basis", "c2", "--bogus"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("Usage"));
    assert_eq!(qudit(&["frobnicate"]).status.code(), Some(2));
    assert_eq!(
        qudit(&["simulate", "--state", "/no/such/file.json", "--basis", "c2"])
            .status
            .code(),
        Some(2)
    );
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.json");
    std::fs::write(&bad, "{not json").unwrap();
    assert_eq!(
        qudit(&["simulate", "--state", path_str(&bad), "--basis", "c2"])
            .status
            .code(),
        Some(2)
    );
    assert_eq!(qudit(&["--help"]).status.code(), Some(0));
}

#[test]
fn benchmark_csv_shape() {
    let out = qudit(&["benchmark", "--dim", "2,3", "--trials", "20", "--seed", "1"]);
    assert_eq!(out.status.code(), Some(0));
    let text = String::from_utf8(out.stdout).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(
        lines[0],
        "d,strategy,trials,successes,max_candidates,mean_candidates,measure_zero_hits,mean_fidelity,seconds"
    );
    assert_eq!(lines.len(), 5);
    assert!(lines[1].starts_with("2,c2,20,20,"));
    assert!(lines[4].starts_with("3,povm,20,20,"));
}

#[test]
fn same_seed_same_bytes() {
    for args in [
        &[
            "simulate",
            "--state",
            path_str(&data("d3_generic.json")),
            "--basis",
            "fourier",
            "--shots",
            "500",
            "--seed",
            "9",
        ][..],
        &["benchmark", "--dim", "3", "--trials", "50", "--seed", "3"][..],
    ] {
        assert_eq!(qudit(args).stdout, qudit(args).stdout);
    }
}
