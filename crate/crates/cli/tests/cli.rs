//! End-to-end tests of the `conslaw` binary: exit codes, artifact layout,
//! schema errors, and byte-level determinism.

use std::fs;
use std::path::PathBuf;
use std::process::{Command, Output};

fn bin() -> &'static str {
    env!("CARGO_BIN_EXE_conslaw")
}

fn workspace(name: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("conslaw-cli-{}-{}", name, std::process::id()));
    let _ = fs::remove_dir_all(&dir);
    fs::create_dir_all(&dir).unwrap();
    dir
}

fn run(cmd: &str, dir: &PathBuf, manifest: &str) -> Output {
    let path = dir.join("manifest.json");
    fs::write(&path, manifest).unwrap();
    Command::new(bin())
        .arg(cmd)
        .arg("--manifest")
        .arg(&path)
        .arg("--out")
        .arg(dir.join("out"))
        .output()
        .expect("binary runs")
}

fn artifact_dir(dir: &PathBuf) -> PathBuf {
    let out = dir.join("out");
    let mut entries = fs::read_dir(&out).unwrap();
    entries.next().unwrap().unwrap().path()
}

#[test]
fn solve_minimal_manifest_produces_artifacts() {
    let dir = workspace("solve");
    let out = run(
        "solve",
        &dir,
        r#"{ "command": "solve", "flux": "burgers1d", "dim": 1, "N": 512, "cfl": 0.45, "t_end": 20.0 }"#,
    );
    assert!(
        out.status.success(),
        "stderr: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    let adir = artifact_dir(&dir);
    for name in [
        "manifest.json",
        "series.csv",
        "u0.csv",
        "u_final.csv",
        "pi_marginal.csv",
        "defect.json",
        "decay.json",
        "summary.json",
    ] {
        assert!(adir.join(name).exists(), "missing {}", name);
    }
    let series = fs::read_to_string(adir.join("series.csv")).unwrap();
    assert!(series.starts_with("t,l1_to_mean,linf,tv,mass\n"));
    let defect: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(adir.join("defect.json")).unwrap()).unwrap();
    assert!(defect["bounds"]["pointwise"]["holds"].as_bool().unwrap());
}

#[test]
fn degeneracy_linear_flux_reports_degenerate() {
    let dir = workspace("degeneracy");
    let out = run(
        "degeneracy",
        &dir,
        r#"{ "command": "degeneracy", "flux": "linear", "c": [1.0], "T": 10.0, "E": [0.0, 1.0], "n_max": 2, "q": 64 }"#,
    );
    assert!(out.status.success());
    let adir = artifact_dir(&dir);
    let verdict: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(adir.join("verdict.json")).unwrap()).unwrap();
    assert_eq!(verdict["verdict"], "degenerate");
    assert_eq!(verdict["sup_value"], 1.0);
    let report: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(adir.join("degeneracy.json")).unwrap()).unwrap();
    assert_eq!(report["T"], 10.0);
    assert_eq!(report["E"][0], 0.0);
    assert!(report["modes"].as_array().unwrap().len() == 4);
}

#[test]
fn invalid_cfl_names_the_key() {
    let dir = workspace("badcfl");
    let out = run(
        "solve",
        &dir,
        r#"{ "command": "solve", "flux": "burgers1d", "dim": 1, "N": 512, "cfl": 1.5, "t_end": 20.0 }"#,
    );
    assert_eq!(out.status.code(), Some(2));
    let stderr = String::from_utf8_lossy(&out.stderr);
    assert!(stderr.contains("cfl"), "stderr: {}", stderr);
}

#[test]
fn unknown_key_is_rejected() {
    let dir = workspace("unknown");
    let out = run(
        "solve",
        &dir,
        r#"{ "command": "solve", "flux": "burgers1d", "dim": 1, "N": 64, "cfl": 0.45, "t_end": 1.0, "cfI": 3 }"#,
    );
    assert_eq!(out.status.code(), Some(2));
    let stderr = String::from_utf8_lossy(&out.stderr);
    assert!(stderr.contains("cfI"), "stderr: {}", stderr);
}

#[test]
fn command_mismatch_is_rejected() {
    let dir = workspace("mismatch");
    let out = run(
        "transport",
        &dir,
        r#"{ "command": "solve", "flux": "burgers1d", "dim": 1, "N": 64, "cfl": 0.45, "t_end": 1.0 }"#,
    );
    assert_eq!(out.status.code(), Some(2));
    let stderr = String::from_utf8_lossy(&out.stderr);
    assert!(stderr.contains("command"), "stderr: {}", stderr);
}

#[test]
fn identical_manifest_and_seed_give_identical_bytes() {
    let manifest = r#"{ "command": "solve", "flux": "burgers1d", "dim": 1, "N": 64, "cfl": 0.45, "t_end": 2.0, "seed": 11, "initial": { "kind": "random", "lo": -0.5, "hi": 0.5 } }"#;
    let dir_a = workspace("det-a");
    let dir_b = workspace("det-b");
    let out_a = run("solve", &dir_a, manifest);
    let out_b = run("solve", &dir_b, manifest);
    assert!(out_a.status.success() && out_b.status.success());
    for name in ["series.csv", "u0.csv", "u_final.csv", "pi_marginal.csv"] {
        let a = fs::read(artifact_dir(&dir_a).join(name)).unwrap();
        let b = fs::read(artifact_dir(&dir_b).join(name)).unwrap();
        assert_eq!(a, b, "artifact {} differs between identical runs", name);
    }
}

#[test]
fn transport_cosine_inequality_holds() {
    let dir = workspace("transport");
    let out = run(
        "transport",
        &dir,
        r#"{ "command": "transport", "flux": "burgers1d", "N": 128, "bins": 64, "E": [0.0, 1.0], "T": 10.0, "steps": 32, "n_max": 2, "q": 128, "f0": { "kind": "cosine" } }"#,
    );
    assert!(out.status.success());
    let adir = artifact_dir(&dir);
    let report: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(adir.join("transport.json")).unwrap()).unwrap();
    assert!(report["slack"].as_f64().unwrap() > 0.0);
    for key in ["T", "E", "lhs", "rhs", "slack", "steps", "n_max", "q"] {
        assert!(report.get(key).is_some(), "missing key {}", key);
    }
}

#[test]
fn ndloc_sweep_passes() {
    let dir = workspace("ndloc");
    let out = run(
        "ndloc",
        &dir,
        r#"{ "command": "ndloc", "N": 128, "R": 1.0, "e_frac": 0.4, "n_fields": 25, "n_deltas": 4, "seed": 5 }"#,
    );
    assert!(out.status.success());
    let adir = artifact_dir(&dir);
    let report: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(adir.join("ndloc.json")).unwrap()).unwrap();
    assert_eq!(report["pairs"], 100);
    assert_eq!(report["violations"], 0);
}

#[test]
fn counterexample_run_passes_checks() {
    let dir = workspace("counterexample");
    let out = run(
        "counterexample",
        &dir,
        r#"{ "command": "counterexample", "alpha": 0.6180339887498949, "N": 32, "levels": 2, "q_max": 4 }"#,
    );
    assert!(
        out.status.success(),
        "stderr: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    let adir = artifact_dir(&dir);
    let report: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(adir.join("counterexample.json")).unwrap())
            .unwrap();
    assert_eq!(report["p"], 2);
    assert_eq!(report["q"], 3);
}
