use std::path::PathBuf;
use std::process::{Command, Output};

use serde_json::Value;

fn ots(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_ots")).args(args).output().expect("binary runs")
}

fn json(args: &[&str]) -> Value {
    let out = ots(args);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    serde_json::from_slice(&out.stdout).expect("JSON on stdout")
}

fn config(name: &str) -> String {
    let root = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../configs").join(name);
    root.to_string_lossy().into_owned()
}

fn scratch(name: &str) -> PathBuf {
    std::env::temp_dir().join(format!("ots-cli-{}-{name}", std::process::id()))
}

#[test]
fn rigidity_sweep_csv() {
    let out = ots(&["rigidity-sweep", "--n", "2", "--theta-grid", "0.2,0,0.05", "--format", "csv"]);
    assert!(out.status.success());
    let mut rdr = csv::Reader::from_reader(out.stdout.as_slice());
    let header: Vec<String> = rdr.headers().unwrap().iter().map(String::from).collect();
    assert_eq!(header[0], "theta");
    assert_eq!(header.len(), 8);
    let rows: Vec<Vec<f64>> =
        rdr.records().map(|r| r.unwrap().iter().map(|c| c.parse().unwrap()).collect()).collect();
    assert_eq!(rows.iter().map(|r| r[0]).collect::<Vec<_>>(), vec![0.0, 0.05, 0.2]);
    assert!(rows[0][1..].iter().all(|&v| v == 0.0));
    for col in 1..header.len() {
        assert!(rows.windows(2).all(|w| w[0][col] <= w[1][col]), "{} not monotone", header[col]);
    }
}

#[test]
fn energy_demo_agrees() {
    let v = json(&["energy-demo", "--config", &config("energy_demo.json"), "--rounds", "20000"]);
    assert!(v["delta_exact_formula"].as_f64().unwrap().abs() <= 1e-9);
    assert!(v["delta_exact_semi_honest"].as_f64().unwrap().abs() <= 1e-9);
    assert_eq!(v["monte_carlo_within_3_sigma"], true);
    let v = json(&["energy-demo", "--hamiltonian", "h3", "--p", "0", "--rounds", "1000"]);
    assert_eq!(v["exact_value"], 1.0);
}

#[test]
fn energy_demo_promise_path() {
    let v = json(&["energy-demo", "--config", &config("energy_demo_promise.json"), "--rounds", "1000"]);
    assert_eq!(v["p_source"], "default_p");
    assert!(v["p"].as_f64().unwrap() > 0.0);
}

#[test]
fn zk_audit_passes_with_labels() {
    let v = json(&["zk-audit", "--config", &config("zk_audit.json")]);
    assert_eq!(v["all_pass"], true);
    let policies = v["policies"].as_array().unwrap();
    assert_eq!(policies.len(), 6);
    let mut labels: Vec<&str> =
        policies.iter().flat_map(|p| p["cases"].as_array().unwrap().iter().map(|c| c.as_str().unwrap())).collect();
    labels.sort();
    labels.dedup();
    assert_eq!(labels, vec!["alice-first-energy", "bob-first-energy", "both-pauli"]);
    assert_eq!(policies[0]["distance"], 0.0);
}

#[test]
fn gap_demo_separates() {
    let v = json(&["gap-demo", "--config", &config("gap_demo.json")]);
    assert_eq!(v["m"], 25);
    assert_eq!(v["separated"], true);
    assert!(v["separation"].as_f64().unwrap() > 0.25);
    assert_eq!(v["promise_holds"], true);
}

#[test]
fn gh_round_exact_row() {
    let v = json(&["gh-round", "--n", "2", "--theta-grid", "0"]);
    let row = &v["rows"][0];
    assert_eq!(row["defect"], 0.0);
    assert_eq!(row["max_residual"], 0.0);
    assert_eq!(row["retained"].as_array().unwrap().len(), 1);
}

#[test]
fn device_spec_menu() {
    let v = json(&["device-spec", "--n", "2"]);
    assert_eq!(v["menu"].as_array().unwrap().len(), 10);
    assert_eq!(v["pairs"], 2);
}

#[test]
fn outputs_are_byte_identical() {
    for args in [
        vec!["gh-round", "--seed", "9"],
        vec!["energy-demo", "--p", "0.4", "--rounds", "5000", "--seed", "3"],
        vec!["rigidity-sweep", "--format", "csv"],
    ] {
        let (a, b) = (scratch(&format!("{}-a", args[0])), scratch(&format!("{}-b", args[0])));
        for path in [&a, &b] {
            let mut full = args.clone();
            let p = path.to_string_lossy().into_owned();
            full.extend(["--out", &p]);
            assert!(ots(&full).status.success());
        }
        assert_eq!(std::fs::read(&a).unwrap(), std::fs::read(&b).unwrap());
        let _ = std::fs::remove_file(a);
        let _ = std::fs::remove_file(b);
    }
}

#[test]
fn seed_changes_sampling() {
    let a = json(&["energy-demo", "--p", "0.4", "--rounds", "5000", "--seed", "1"]);
    let b = json(&["energy-demo", "--p", "0.4", "--rounds", "5000", "--seed", "2"]);
    assert_eq!(a["exact_value"], b["exact_value"]);
    assert_ne!(a["monte_carlo_frequency"], b["monte_carlo_frequency"]);
}

#[test]
fn guard_violations_exit_nonzero_with_json() {
    for args in [
        vec!["rigidity-sweep", "--n", "5"],
        vec!["zk-audit", "--circuit", "toffoli"],
        vec!["energy-demo", "--p", "0.2", "--alpha", "-1", "--beta", "1"],
        vec!["energy-demo", "--hamiltonian", "no-such-thing", "--p", "0.2"],
        vec!["device-spec", "--n", "0"],
        vec!["gap-demo", "--p", "0.5"],
    ] {
        let out = ots(&args);
        assert!(!out.status.success(), "{args:?}");
        let err: Value = serde_json::from_slice(&out.stderr).expect("structured error");
        assert_eq!(err["error"]["command"], args[0]);
        assert!(!err["error"]["message"].as_str().unwrap().is_empty());
    }
}

#[test]
fn config_command_mismatch() {
    let out = ots(&["gh-round", "--config", &config("gap_demo.json")]);
    assert!(!out.status.success());
}
