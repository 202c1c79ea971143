use serde_json::Value;
use std::process::{Command, Output};

fn fba(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_fba")).args(args).output().expect("binary runs")
}

fn json(out: &Output) -> Value {
    serde_json::from_slice(&out.stdout).expect("valid JSON on stdout")
}

#[test]
fn verify_identities_passes() {
    let out = fba(&["verify-identities", "--q", "0.2", "--s", "0.5", "--nodes", "512"]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let doc = json(&out);
    assert_eq!(doc["schema"], "fba-spec-1");
    assert_eq!(doc["command"], "verify-identities");
    let names: Vec<&str> = doc["result"]["checks"].as_array().unwrap().iter().map(|c| c["name"].as_str().unwrap()).collect();
    for n in ["sigma_shift", "sigma_reflection", "j_e_ratio", "pentagon", "sixj", "inversion"] {
        assert!(names.contains(&n), "missing {n}");
    }
}

#[test]
fn solve_ground_document() {
    let out = fba(&["solve-ground", "--n", "2", "--q", "0.1", "--s", "0.5"]);
    assert_eq!(out.status.code(), Some(0));
    let sol = &json(&out)["result"]["solution"];
    for key in ["n", "q", "s", "m", "v", "t", "w", "C", "residuals", "wronskian_const", "certificates"] {
        assert!(!sol[key].is_null(), "missing {key}");
    }
    let cert = &sol["certificates"];
    assert!(cert["baxter_grid_residual"].as_f64().unwrap() < 1e-9);
    assert_eq!(cert["pole_residuals"].as_array().unwrap().len(), 2);
    assert_eq!(sol["t"].as_array().unwrap().len(), 3);
}

#[test]
fn tropical_seed_even() {
    let out = fba(&["tropical-seed", "--n", "4", "--m", "1", "--subset", "0,2", "--branch", "1"]);
    assert_eq!(out.status.code(), Some(0));
    let doc = json(&out);
    assert_eq!(doc["result"]["seed"]["sector"], "dual-q^{m/2}");
    assert_eq!(doc["result"]["report"]["passed"], true);
    for key in ["H0", "H0_down", "H0_up", "K", "Kprime", "k_branch", "subset", "T0", "W0"] {
        assert!(doc["result"]["seed"].get(key).is_some(), "missing {key}");
    }
}

#[test]
fn output_is_deterministic() {
    let a = fba(&["verify-identities", "--points", "10", "--sets", "1", "--nodes", "256", "--seed", "7"]);
    let b = fba(&["verify-identities", "--points", "10", "--sets", "1", "--nodes", "256", "--seed", "7"]);
    assert_eq!(a.stdout, b.stdout);
}

#[test]
fn density_csv_header() {
    let out = fba(&["density", "--format", "csv", "--points", "8", "--roots-n", "32"]);
    assert_eq!(out.status.code(), Some(0));
    let text = String::from_utf8(out.stdout).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("phi,P_series,P_tropical,P_empirical"));
    assert_eq!(lines.count(), 8);
}

#[test]
fn failed_check_exits_one() {
    // four roots at s = 0.8 are far too few for the 0.15 spacing tolerance
    let out = fba(&["density", "--s", "0.8", "--roots-n", "4"]);
    assert_eq!(out.status.code(), Some(1));
    assert_eq!(json(&out)["passed"], false);
}

#[test]
fn usage_errors_exit_two() {
    assert_eq!(fba(&["solve-ground", "--bogus"]).status.code(), Some(2));
    assert_eq!(fba(&["solve-ground", "--format", "csv"]).status.code(), Some(2));
    assert_eq!(fba(&["solve-ground", "--sweep", "n=2,3"]).status.code(), Some(2));
    assert_eq!(fba(&["tropical-seed", "--n", "4", "--subset", "0,1", "--m", "1", "--branch", "x"]).status.code(), Some(2));
}

#[test]
fn sweep_keeps_order() {
    let out = Command::new(env!("CARGO_BIN_EXE_fba"))
        .args(["solve-ground", "--n", "2", "--sweep", "q=0.1,0.05,-0.15"])
        .env("FBA_THREADS", "3")
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(0));
    let doc = json(&out);
    let qs: Vec<f64> = doc["result"]["entries"].as_array().unwrap().iter().map(|e| e["q"][0].as_f64().unwrap()).collect();
    assert_eq!(qs, vec![0.1, 0.05, -0.15]);
}

#[test]
fn out_flag_writes_file() {
    let dir = std::env::temp_dir().join(format!("fba-cli-test-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    let path = dir.join("partition.csv");
    let out = fba(&["partition", "--format", "csv", "--points", "4", "--out", path.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0));
    let text = std::fs::read_to_string(&path).unwrap();
    assert!(text.starts_with("phi,series_re,series_im,integral_re,integral_im"));
    std::fs::remove_dir_all(&dir).ok();
}
