//! Exit-code contract and report determinism of the command-line front end.

use std::path::PathBuf;
use std::process::Command;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_sasakigeo"))
}

fn tmp_dir(name: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("sasakigeo-cli-{name}-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    dir
}

#[test]
fn verify_model_passes_and_writes_report() {
    let dir = tmp_dir("vm");
    let out = dir.join("report.json");
    let status = bin()
        .args([
            "verify-model",
            "--model",
            "heisenberg",
            "--n",
            "1",
            "--points",
            "15",
            "--seed",
            "42",
            "--out",
        ])
        .arg(&out)
        .status()
        .unwrap();
    assert_eq!(status.code(), Some(0));
    let report: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(&out).unwrap()).unwrap();
    assert_eq!(report["schema_version"], 1);
    assert!(report["checks"].as_array().unwrap().len() >= 4);
}

#[test]
fn invalid_parameters_exit_2() {
    let status = bin()
        .args(["verify-model", "--model", "deformed_sphere", "--a", "-1"])
        .status()
        .unwrap();
    assert_eq!(status.code(), Some(2));

    let status = bin()
        .args(["theorem2", "--c", "-7", "--h", "0.1"])
        .status()
        .unwrap();
    assert_eq!(status.code(), Some(2), "infeasible (c, h) must exit 2");

    let status = bin()
        .args(["helix", "--model", "heisenberg", "--curvatures", "1,-2"])
        .status()
        .unwrap();
    assert_eq!(status.code(), Some(2));

    let status = bin()
        .args([
            "surface",
            "--model",
            "heisenberg",
            "--n",
            "1",
            "--immersion",
            "u; v; 3*q",
        ])
        .status()
        .unwrap();
    assert_eq!(status.code(), Some(2), "expression parse failure exits 2");
}

#[test]
fn perturbed_model_fails_with_exit_1_and_report() {
    let dir = tmp_dir("perturb");
    let out = dir.join("report.json");
    let status = bin()
        .args([
            "verify-model",
            "--model",
            "heisenberg",
            "--n",
            "1",
            "--points",
            "10",
            "--perturb",
            "1e-3",
            "--out",
        ])
        .arg(&out)
        .status()
        .unwrap();
    assert_eq!(status.code(), Some(1));
    // report is still written on failure
    let report: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(&out).unwrap()).unwrap();
    let failed = report["checks"]
        .as_array()
        .unwrap()
        .iter()
        .any(|c| c["pass"] == serde_json::json!(false));
    assert!(failed);
}

#[test]
fn theorem5_scan_passes() {
    let dir = tmp_dir("t5");
    let status = bin()
        .args([
            "theorem5-scan",
            "--c-min",
            "-50",
            "--c-max",
            "0.999",
            "--c-steps",
            "50",
            "--t-steps",
            "200",
            "--out",
        ])
        .arg(dir.join("scan.json"))
        .status()
        .unwrap();
    assert_eq!(status.code(), Some(0));
}

#[test]
fn reports_are_deterministic_for_fixed_seed() {
    let dir = tmp_dir("det");
    let mut jsons = Vec::new();
    for run in 0..2 {
        let out = dir.join(format!("report{run}.json"));
        let status = bin()
            .args([
                "verify-model",
                "--model",
                "deformed_sphere",
                "--a",
                "2",
                "--n",
                "1",
                "--points",
                "12",
                "--seed",
                "7",
                "--out",
            ])
            .arg(&out)
            .status()
            .unwrap();
        assert_eq!(status.code(), Some(0));
        let mut v: serde_json::Value =
            serde_json::from_str(&std::fs::read_to_string(&out).unwrap()).unwrap();
        v["elapsed_ms"] = serde_json::Value::Null;
        jsons.push(serde_json::to_string(&v).unwrap());
    }
    assert_eq!(jsons[0], jsons[1], "reports differ between identical runs");
}

#[test]
fn coarse_theorem2_flags_convergence_caveat() {
    let dir = tmp_dir("t2coarse");
    let status = bin()
        .args([
            "theorem2", "--c", "-3", "--h", "1", "--grid", "16", "--extent", "0.8", "--out-dir",
        ])
        .arg(&dir)
        .status()
        .unwrap();
    assert_eq!(status.code(), Some(0));
    let report: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.join("theorem2.json")).unwrap())
            .unwrap();
    let notes = report["notes"].as_array().unwrap();
    assert!(
        notes
            .iter()
            .any(|n| n.as_str().unwrap_or("").contains("convergence")),
        "coarse grid should flag the convergence caveat"
    );
    for file in ["gamma1.csv", "gamma2.csv", "q_forms.csv", "geometry.csv"] {
        let body = std::fs::read_to_string(dir.join(file)).unwrap();
        assert!(body.lines().count() > 2, "{file} should carry a grid");
        assert!(body.lines().next().unwrap().contains(','), "{file} header");
    }
}
