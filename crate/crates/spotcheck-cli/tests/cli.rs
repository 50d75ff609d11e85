//! End-to-end tests of the `spotcheck` binary: the calibrate → construct →
//! analyze pipeline against the library, the exit-code contract, config
//! merging, and output-file behavior.

use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;
use spotcheck::analytic::tightness_ef_bounded;
use spotcheck::core::{confidence_bound, TrialRecord};

fn spotcheck_cmd() -> Command {
    Command::new(env!("CARGO_BIN_EXE_spotcheck"))
}

fn run(args: &[&str], dir: &Path) -> Output {
    spotcheck_cmd()
        .args(args)
        .current_dir(dir)
        .output()
        .expect("binary runs")
}

fn json_stdout(out: &Output) -> Value {
    assert!(
        out.status.success(),
        "command failed: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    serde_json::from_slice(&out.stdout).expect("stdout is JSON")
}

fn num(v: &Value) -> f64 {
    v.as_f64().expect("numeric field")
}

#[test]
fn pipeline_matches_library() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();

    // calibrate: pooled mean/variance of a six-sample file.
    fs::write(d.join("cal.txt"), "1.0\n2.0\n4.0\n3.0\n2.5\n1.5\n").unwrap();
    let cal = json_stdout(&run(&["calibrate", "--input", "cal.txt"], d));
    assert!((num(&cal["theta_e"]) - 7.0 / 3.0).abs() < 1e-14);
    assert!((num(&cal["sigma2_e"]) - 7.0 / 6.0).abs() < 1e-14);
    assert_eq!(cal["n_used"], 6);

    // construct: the fixed bounded-range method matches the library.
    let construct = run(
        &[
            "construct", "--method", "fixed", "--u", "1", "--omega", "0.1",
            "--epsilon", "0.01", "--n", "10000", "--output", "ef.json",
        ],
        d,
    );
    assert!(construct.status.success());
    let ef_json: Value =
        serde_json::from_str(&fs::read_to_string(d.join("ef.json")).unwrap()).unwrap();
    let ef = tightness_ef_bounded(1.0, 0.1, 0.01, 10_000).unwrap();
    assert!((num(&ef_json["beta"]) - ef.beta).abs() <= 1e-16 * ef.beta);
    assert!((num(&ef_json["t"]) - ef.t).abs() <= 1e-15 * ef.t);

    // analyze: the bound equals the library's on the same records.
    fs::write(d.join("recs.csv"), "i,y,x\n1,0,0.5\n2,1,\n3,1,\n4,0,0.75\n").unwrap();
    let analyze = json_stdout(&run(
        &["analyze", "--records", "recs.csv", "--ef", "ef.json", "--epsilon", "0.01"],
        d,
    ));
    let records = vec![
        TrialRecord::checked(1, 0.5),
        TrialRecord::unchecked(2),
        TrialRecord::unchecked(3),
        TrialRecord::checked(4, 0.75),
    ];
    let report = confidence_bound(&records, &vec![ef; 4], 0.01).unwrap();
    assert!((num(&analyze["s_lb"]) - report.s_lb).abs() <= 1e-10 * report.s_lb.abs());
    assert_eq!(analyze["c_n"], 2);
}

#[test]
fn plan_early_stop_oracle() {
    let dir = tempfile::tempdir().unwrap();
    let gamma = format!("{}", (1e6f64).ln());
    let out = json_stdout(&run(
        &["plan", "early-stop", "--m", "1000", "--omega", "0.1", "--gamma", &gamma],
        dir.path(),
    ));
    assert_eq!(out["n"], 1213);
}

#[test]
fn missing_records_file_exits_2_and_names_path() {
    let dir = tempfile::tempdir().unwrap();
    fs::write(dir.path().join("ef.json"), "{}").unwrap();
    let out = run(
        &["analyze", "--records", "nope.csv", "--ef", "ef.json", "--epsilon", "0.01"],
        dir.path(),
    );
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("nope.csv"));
}

#[test]
fn infeasible_construction_exits_3() {
    let dir = tempfile::tempdir().unwrap();
    // n far below the moment-method threshold ñ_th.
    let out = run(
        &[
            "construct", "--method", "moments", "--theta-e", "0.5", "--sigma2-e",
            "0.25", "--omega", "0.1", "--epsilon", "0.01", "--n", "10",
        ],
        dir.path(),
    );
    assert_eq!(out.status.code(), Some(3));
    assert!(String::from_utf8_lossy(&out.stderr).contains("BelowThreshold"));
}

#[test]
fn expect_beta_mismatch_exits_4() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    let construct = run(
        &[
            "construct", "--method", "fixed", "--u", "1", "--omega", "0.1",
            "--epsilon", "0.01", "--n", "10000", "--output", "ef.json",
        ],
        d,
    );
    assert!(construct.status.success());
    fs::write(d.join("recs.csv"), "i,y,x\n1,1,\n").unwrap();
    let out = run(
        &[
            "analyze", "--records", "recs.csv", "--ef", "ef.json",
            "--epsilon", "0.01", "--expect-beta", "0.5",
        ],
        d,
    );
    assert_eq!(out.status.code(), Some(4));
}

#[test]
fn unknown_method_exits_2() {
    let dir = tempfile::tempdir().unwrap();
    let out = run(&["construct", "--method", "bogus"], dir.path());
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn config_file_merges_and_flags_override() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    fs::write(
        d.join("run.conf"),
        "# shared experiment settings\nmethod = fixed\nu = 1\nomega = 0.2\nepsilon = 0.05\nn = 1000\n",
    )
    .unwrap();
    let from_config = json_stdout(&run(&["--config", "run.conf", "construct"], d));
    assert!((num(&from_config["inputs"]["omega"]) - 0.2).abs() < 1e-15);

    let overridden = json_stdout(&run(
        &["--config", "run.conf", "construct", "--omega", "0.3"],
        d,
    ));
    assert!((num(&overridden["inputs"]["omega"]) - 0.3).abs() < 1e-15);
    assert_ne!(num(&from_config["beta"]), num(&overridden["beta"]));
}

#[test]
fn seed_env_matches_seed_flag() {
    let dir_env = tempfile::tempdir().unwrap();
    let dir_flag = tempfile::tempdir().unwrap();
    let flag = spotcheck_cmd()
        .args(["simulate", "fig1", "--n", "200", "--reps", "2", "--seed", "7"])
        .env_remove("SPOTCHECK_SEED")
        .current_dir(dir_flag.path())
        .output()
        .unwrap();
    assert!(flag.status.success());
    let env = spotcheck_cmd()
        .args(["simulate", "fig1", "--n", "200", "--reps", "2"])
        .env("SPOTCHECK_SEED", "7")
        .current_dir(dir_env.path())
        .output()
        .unwrap();
    assert!(env.status.success());
    for name in ["fig1_figure1.csv", "fig1_summary.csv"] {
        let a = fs::read(dir_flag.path().join(name)).unwrap();
        let b = fs::read(dir_env.path().join(name)).unwrap();
        assert_eq!(a, b, "{name} differs between --seed and SPOTCHECK_SEED");
    }
}
