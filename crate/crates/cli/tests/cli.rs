use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn merminlab(args: &[&str]) -> Output {
    merminlab_in(args, None, &[])
}

fn merminlab_in(args: &[&str], dir: Option<&Path>, env: &[(&str, &str)]) -> Output {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_merminlab"));
    cmd.args(args).env_remove("MERMINLAB_SEED");
    if let Some(d) = dir {
        cmd.current_dir(d);
    }
    for (k, v) in env {
        cmd.env(k, v);
    }
    cmd.output().expect("binary runs")
}

fn stdout(out: &Output) -> String {
    assert!(
        out.status.success(),
        "exit {:?}: {}",
        out.status,
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8(out.stdout.clone()).unwrap()
}

#[test]
fn build_op_csv_and_json() {
    let text = stdout(&merminlab(&["build-op", "--n", "2"]));
    assert_eq!(
        text,
        "operator,term,coeff\nM,XX,1\nM,XY,1\nM,YX,1\nM,YY,-1\nM',XX,-1\nM',XY,1\nM',YX,1\nM',YY,1\n"
    );
    let json: Value =
        serde_json::from_str(&stdout(&merminlab(&["build-op", "--n", "5", "--format", "json"])))
            .unwrap();
    assert_eq!(json["recursion_scale"], 4.0);
    assert_eq!(json["m"]["arity"], 5);
}

#[test]
fn lhv_bound_rows() {
    let text = stdout(&merminlab(&["lhv-bound", "--n", "2"]));
    let row = text.lines().nth(1).unwrap();
    assert!(row.starts_with("2,2.0,2.0,"), "{row}");
    let out = merminlab(&["lhv-bound", "--n", "7"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn enumerate_chains_counts() {
    let text = stdout(&merminlab(&["enumerate-chains", "--n", "2"]));
    assert_eq!(text.lines().count(), 59);
    let text = stdout(&merminlab(&["enumerate-chains", "--n", "3"]));
    assert_eq!(text.lines().count(), 76);
    let issues: Value = serde_json::from_str(&stdout(&merminlab(&[
        "enumerate-chains",
        "--n",
        "3",
        "--path-check",
        "--format",
        "json",
    ])))
    .unwrap();
    assert_eq!(issues.as_array().unwrap().len(), 1);
    assert_eq!(issues[0]["chain"], "34-40-41");
}

#[test]
fn custom_topology_and_extension() {
    let dir = tempfile::tempdir().unwrap();
    fs::write(dir.path().join("line.edges"), "# path\n0 1\n1 2\n2 3\n").unwrap();
    let text = stdout(&merminlab_in(
        &["enumerate-chains", "--n", "3", "--topology", "line.edges"],
        Some(dir.path()),
        &[],
    ));
    assert_eq!(text, "chain\n0-1-2\n1-2-3\n");

    let run = stdout(&merminlab_in(
        &[
            "run", "--n", "2", "--chains", "1-2", "--mode", "exact", "--topology", "line.edges",
            "--format", "json",
        ],
        Some(dir.path()),
        &[],
    ));
    fs::write(dir.path().join("run.json"), run).unwrap();
    let text = stdout(&merminlab_in(
        &["enumerate-chains", "--extend-from", "run.json", "--topology", "line.edges"],
        Some(dir.path()),
        &[],
    ));
    assert_eq!(text, "chain\n0-1-2\n1-2-3\n");

    fs::write(dir.path().join("bad.edges"), "0 1\n1 1\n").unwrap();
    let out = merminlab_in(
        &["enumerate-chains", "--n", "2", "--topology", "bad.edges"],
        Some(dir.path()),
        &[],
    );
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn run_rejects_non_path_chain() {
    let out = merminlab(&["run", "--n", "3", "--chains", "34-40-41"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("34-40-41"));
}

#[test]
fn run_exact_matches_maximum() {
    let text = stdout(&merminlab(&["run", "--n", "4", "--chains", "7-16-19-20", "--mode", "exact"]));
    let fields: Vec<&str> = text.lines().nth(1).unwrap().split(',').collect();
    let m_norm: f64 = fields[3].parse().unwrap();
    assert!((m_norm - 2.0 * 2f64.sqrt()).abs() < 1e-9);
}

#[test]
fn seed_precedence() {
    let args = ["run", "--n", "2", "--chains", "29-36", "--repeats", "1"];
    let flag = stdout(&merminlab(&[&args[..], &["--seed", "5"]].concat()));
    let env = stdout(&merminlab_in(&args, None, &[("MERMINLAB_SEED", "5")]));
    let other = stdout(&merminlab_in(&args, None, &[("MERMINLAB_SEED", "6")]));
    assert_eq!(flag, env);
    assert_ne!(flag, other);
    let both = stdout(&merminlab_in(
        &[&args[..], &["--seed", "5"]].concat(),
        None,
        &[("MERMINLAB_SEED", "6")],
    ));
    assert_eq!(both, flag);
    let out = merminlab_in(&args, None, &[("MERMINLAB_SEED", "x")]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn config_file_mirrors_flags() {
    let dir = tempfile::tempdir().unwrap();
    fs::write(
        dir.path().join("noise.json"),
        r#"{"theta": null, "depol_p": 0.01, "readout_eps": 0.02}"#,
    )
    .unwrap();
    fs::write(
        dir.path().join("config.json"),
        r#"{"seed": 11, "shots": 256, "repeats": 3, "noise": "noise.json", "format": "json",
            "n": 3, "chains": ["16-19-20"], "trajectories": 16}"#,
    )
    .unwrap();
    let from_config = stdout(&merminlab_in(&["run", "--config", "config.json"], Some(dir.path()), &[]));
    let from_flags = stdout(&merminlab_in(
        &[
            "run", "--seed", "11", "--shots", "256", "--repeats", "3", "--noise", "noise.json",
            "--format", "json", "--n", "3", "--chains", "16-19-20", "--trajectories", "16",
        ],
        Some(dir.path()),
        &[],
    ));
    assert_eq!(from_config, from_flags);
    let json: Value = serde_json::from_str(&from_config).unwrap();
    assert_eq!(json["config"]["shots"], 256);
    assert_eq!(json["config"]["noise"]["depol_p"], 0.01);
    assert_eq!(json["results"][0]["records"].as_array().unwrap().len(), 3);

    fs::write(dir.path().join("typo.json"), r#"{"shot": 5}"#).unwrap();
    let out = merminlab_in(&["run", "--config", "typo.json"], Some(dir.path()), &[]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn report_from_run_output() {
    let dir = tempfile::tempdir().unwrap();
    let out = merminlab_in(
        &[
            "run", "--n", "2", "--seed", "3", "--format", "json", "--output", "run.json",
        ],
        Some(dir.path()),
        &[],
    );
    assert!(out.status.success());
    let text = stdout(&merminlab_in(
        &["report", "--input", "run.json", "--reference", "builtin", "--circle", "1.41"],
        Some(dir.path()),
        &[],
    ));
    let mut lines = text.lines();
    assert!(lines.next().unwrap().ends_with(",ref_m_mean,ref_m_prime_mean,delta"));
    let means: Vec<f64> = lines
        .map(|l| l.split(',').nth(7).unwrap().parse().unwrap())
        .collect();
    assert_eq!(means.len(), 58);
    assert!(means.windows(2).all(|w| w[0] >= w[1]));

    let json: Value = serde_json::from_str(&stdout(&merminlab_in(
        &["report", "--input", "run.json", "--format", "json", "--circle", "1.41"],
        Some(dir.path()),
        &[],
    )))
    .unwrap();
    assert_eq!(json["annotations"]["lr_square"], 1.0);
    assert_eq!(json["annotations"]["circles"][0], 1.41);
}

#[test]
fn sweep_phase_exact() {
    let json: Value = serde_json::from_str(&stdout(&merminlab(&[
        "sweep-phase", "--n", "3", "--mode", "exact", "--points", "8", "--format", "json",
    ])))
    .unwrap();
    let rows = json.as_array().unwrap();
    assert_eq!(rows.len(), 8);
    for r in rows {
        let m = r["m"].as_f64().unwrap();
        let a = r["analytic_m"].as_f64().unwrap();
        assert!((m - a).abs() < 1e-9);
    }
}

#[test]
fn missing_qubit_count_is_an_error() {
    let out = merminlab(&["run"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("--n"));
}
