use std::path::Path;
use std::process::{Command, Output};

use agnostic_control::performance::analytic_regret;
use agnostic_control::performance::RegretMode;
use agnostic_control::{gains, GaussianPrior, ProblemSpec};
use serde_json::Value;

fn acl(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_acl"))
        .args(args)
        .env_remove("ACL_THREADS")
        .env("SOURCE_DATE_EPOCH", "1700000000")
        .output()
        .expect("acl runs")
}

fn json(out: &Output) -> Value {
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    serde_json::from_slice(&out.stdout).expect("stdout is JSON")
}

fn keys(v: &Value) -> Vec<String> {
    v.as_object().unwrap().keys().cloned().collect()
}

fn stderr(out: &Output) -> String {
    String::from_utf8_lossy(&out.stderr).into_owned()
}

fn read_csv(path: &Path) -> (String, Vec<Vec<Option<f64>>>) {
    let text = std::fs::read_to_string(path).unwrap();
    let mut lines = text.lines();
    let header = lines.next().unwrap().to_string();
    let rows = lines
        .map(|l| l.split(',').map(|c| c.parse().ok()).collect())
        .collect();
    (header, rows)
}

#[test]
fn gains_schema_and_values() {
    let v = json(&acl(&["gains", "--T", "2", "--t", "0", "--lambda", "4"]));
    let mut k = keys(&v);
    k.sort();
    assert_eq!(k, ["E0", "E1", "E2", "Esharp"]);
    let g = gains(0.0, &ProblemSpec::new(0.0, 2.0, 4.0).unwrap()).unwrap();
    assert_eq!(v["E2"].as_f64().unwrap(), g.e2);
    assert_eq!(v["E1"].as_f64().unwrap(), g.e1);
    assert_eq!(v["E0"].as_f64().unwrap(), g.e0);
    assert_eq!(v["Esharp"].as_f64().unwrap(), g.e_sharp);

    let z = json(&acl(&["gains", "--T", "1", "--t", "1"]));
    for key in ["E2", "E1", "E0", "Esharp"] {
        assert_eq!(z[key].as_f64().unwrap(), 0.0);
    }
}

#[test]
fn domain_and_usage_errors_exit_two() {
    let out = acl(&["gains", "--T", "1", "--t", "2"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr(&out).contains("t must lie in"));
    assert_eq!(
        acl(&["gains", "--T", "1", "--lambda", "0.5"]).status.code(),
        Some(2)
    );
    assert_eq!(acl(&["gains"]).status.code(), Some(2));
    assert_eq!(acl(&["frobnicate"]).status.code(), Some(2));
    let bad_threads = Command::new(env!("CARGO_BIN_EXE_acl"))
        .args(["gains", "--T", "1"])
        .env("ACL_THREADS", "0")
        .output()
        .unwrap();
    assert_eq!(bad_threads.status.code(), Some(2));
}

#[test]
fn simulate_schema_and_z_scores() {
    let v = json(&acl(&[
        "simulate",
        "--strategy",
        "known_a",
        "--a",
        "1",
        "--T",
        "1",
        "--paths",
        "4000",
    ]));
    assert_eq!(
        keys(&v),
        ["analytic_reference", "mean", "n_paths", "stderr", "z_score"]
    );
    assert_eq!(v["n_paths"].as_u64(), Some(4000));
    assert!((v["analytic_reference"].as_f64().unwrap() - 0.672_186_674_527_262_3).abs() < 1e-12);
    assert!(v["z_score"].as_f64().unwrap().abs() <= 3.0);

    let b = json(&acl(&[
        "simulate",
        "--strategy",
        "bayes",
        "--sigma",
        "1",
        "--a",
        "0",
        "--paths",
        "4000",
    ]));
    assert!(b["z_score"].as_f64().unwrap().abs() <= 3.0);
}

#[test]
fn simulate_rejects_bad_combinations() {
    let out = acl(&[
        "simulate",
        "--strategy",
        "bayes",
        "--sigma",
        "improper",
        "--T0",
        "0",
    ]);
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr(&out).contains("singularity"));
    assert_eq!(
        acl(&["simulate", "--strategy", "bayes"]).status.code(),
        Some(2)
    );
    assert_eq!(
        acl(&["simulate", "--strategy", "zero", "--sigma", "1"])
            .status
            .code(),
        Some(2)
    );
    assert_eq!(
        acl(&["simulate", "--strategy", "zero", "--dt", "0.3"])
            .status
            .code(),
        Some(2)
    );
    let budget = acl(&[
        "simulate",
        "--strategy",
        "zero",
        "--paths",
        "2000",
        "--budget",
        "1000",
    ]);
    assert_eq!(budget.status.code(), Some(3));
}

#[test]
fn simulate_writes_manifest_and_paths() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path().to_str().unwrap();
    let out = acl(&[
        "simulate",
        "--strategy",
        "bayes",
        "--sigma",
        "auto",
        "--a",
        "-0.5",
        "--paths",
        "50",
        "--dt",
        "0.01",
        "--out",
        d,
        "--dump-paths",
        "2",
    ]);
    assert!(out.status.success());
    let saved = std::fs::read(dir.path().join("simulate.json")).unwrap();
    assert_eq!(saved, out.stdout);
    let m: Value =
        serde_json::from_slice(&std::fs::read(dir.path().join("simulate.manifest.json")).unwrap())
            .unwrap();
    assert_eq!(m["subcommand"], "simulate");
    assert_eq!(m["timestamp"], 1_700_000_000u64);
    assert_eq!(m["params"]["T"], 1.0);
    assert_eq!(m["resolved"]["steps"], 100);
    assert_eq!(m["outputs"].as_array().unwrap().len(), 3);
    let (header, rows) = read_csv(&dir.path().join("path_1.csv"));
    assert_eq!(header, "t,q,xi,u");
    assert_eq!(rows.len(), 101);
}

#[test]
fn regret_multiplicative_auto_is_flat() {
    let v = json(&acl(&[
        "regret",
        "--mode",
        "multiplicative",
        "--T",
        "2",
        "--sigma",
        "auto",
    ]));
    assert!(v["spread"].as_f64().unwrap() <= 1e-6);
    assert!(v["sigma"].as_f64().unwrap() > 0.0);
    assert!(v["lambda"].is_null());
    for key in [
        "mode",
        "prior",
        "spec",
        "rows",
        "ratio_limit",
        "worst_additive",
        "worst_ratio",
        "spread",
    ] {
        assert!(v.get(key).is_some(), "missing {key}");
    }
    assert_eq!(v["rows"].as_array().unwrap().len(), 13);
}

#[test]
fn regret_additive_matches_library() {
    let dir = tempfile::tempdir().unwrap();
    let v = json(&acl(&[
        "regret",
        "--mode",
        "additive",
        "--T0",
        "0.5",
        "--T",
        "2",
        "--sigma",
        "improper",
        "--a-grid",
        "-2,0,1,3",
        "--out",
        dir.path().to_str().unwrap(),
    ]));
    let spec = ProblemSpec::new(0.5, 2.0, 1.0).unwrap();
    let lib = analytic_regret(
        RegretMode::Additive,
        &GaussianPrior::Improper,
        &spec,
        &[-2.0, 0.0, 1.0, 3.0],
    )
    .unwrap();
    assert_eq!(v["spread"].as_f64().unwrap(), 0.0);
    let rows = v["rows"].as_array().unwrap();
    for (r, l) in rows.iter().zip(&lib.rows) {
        assert_eq!(r["additive"].as_f64().unwrap(), l.additive);
        assert_eq!(r["our_cost"].as_f64().unwrap(), l.our_cost);
    }
    let (header, csv) = read_csv(&dir.path().join("regret.csv"));
    assert_eq!(header, "a,our_cost,opponent_cost,additive,ratio");
    assert_eq!(csv[1][3], Some(lib.rows[1].additive));
    assert!(dir.path().join("regret.manifest.json").exists());
}

#[test]
fn regret_fueltax_auto_solves_lambda() {
    let v = json(&acl(&["regret", "--mode", "fueltax", "--T", "2"]));
    let lambda = v["lambda"].as_f64().unwrap();
    assert!((1.25..=1.35).contains(&lambda));
    assert!((v["worst_ratio"].as_f64().unwrap() - 1.0).abs() <= 1e-6);
}

#[test]
fn regret_rejects_bad_modes() {
    assert_eq!(
        acl(&["regret", "--mode", "additive", "--T", "2"])
            .status
            .code(),
        Some(2)
    );
    assert_eq!(
        acl(&[
            "regret",
            "--mode",
            "multiplicative",
            "--T",
            "2",
            "--T0",
            "0.5"
        ])
        .status
        .code(),
        Some(2)
    );
    assert_eq!(
        acl(&["regret", "--mode", "fueltax", "--T", "2", "--sigma", "1"])
            .status
            .code(),
        Some(2)
    );
    assert_eq!(
        acl(&[
            "regret",
            "--mode",
            "multiplicative",
            "--T",
            "2",
            "--lambda",
            "2"
        ])
        .status
        .code(),
        Some(2)
    );
}

#[test]
fn figures_headers_and_shapes() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path().to_str().unwrap();
    let out = acl(&["figures", "--grid", "0.5,1,2,3,6,12", "--out", d]);
    assert!(out.status.success(), "{}", stderr(&out));

    let (h1, fig1) = read_csv(&dir.path().join("fig1.csv"));
    assert_eq!(h1, "T,sigma_star");
    let sigma: Vec<f64> = fig1.iter().map(|r| r[1].unwrap()).collect();
    assert!(sigma.windows(2).all(|w| w[1] < w[0]));

    let (h2, fig2) = read_csv(&dir.path().join("fig2.csv"));
    assert_eq!(h2, "T,mr_star_optimal,mr_star_fixed_sigma");
    for r in &fig2 {
        assert!(r[1].unwrap() <= 1.17);
        assert!(r[2].unwrap() >= r[1].unwrap() - 1e-9);
    }

    let (h3, fig3) = read_csv(&dir.path().join("fig3.csv"));
    assert_eq!(h3, "T,sigma_ft,lambda_star");
    let at_two = fig3.iter().find(|r| r[0] == Some(2.0)).unwrap()[2].unwrap();
    assert!((1.25..=1.35).contains(&at_two));

    for stem in ["fig1", "fig2", "fig3"] {
        let m: Value = serde_json::from_slice(
            &std::fs::read(dir.path().join(format!("{stem}.manifest.json"))).unwrap(),
        )
        .unwrap();
        assert_eq!(m["outputs"][0], format!("{stem}.csv"));
        assert_eq!(m["resolved"]["grid"].as_array().unwrap().len(), 6);
    }
}

#[test]
fn figures_report_failed_points() {
    let dir = tempfile::tempdir().unwrap();
    let out = acl(&[
        "figures",
        "--which",
        "1",
        "--grid",
        "1e-7,0.1,1",
        "--out",
        dir.path().to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(4));
    assert!(stderr(&out).contains("warning"));
    let (_, rows) = read_csv(&dir.path().join("fig1.csv"));
    assert_eq!(rows[0][1], None);
    assert!(rows[1][1].is_some());
    assert_eq!(
        acl(&[
            "figures",
            "--grid",
            "3,1",
            "--out",
            dir.path().to_str().unwrap()
        ])
        .status
        .code(),
        Some(2)
    );
    assert_eq!(
        acl(&[
            "figures",
            "--grid",
            "1:2",
            "--out",
            dir.path().to_str().unwrap()
        ])
        .status
        .code(),
        Some(2)
    );
}

#[test]
fn manifests_are_reproducible() {
    let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    for d in [&a, &b] {
        let out = acl(&[
            "figures",
            "--which",
            "3",
            "--grid",
            "1,2",
            "--out",
            d.path().to_str().unwrap(),
        ]);
        assert!(out.status.success());
    }
    let read = |d: &tempfile::TempDir, f: &str| std::fs::read(d.path().join(f)).unwrap();
    assert_eq!(read(&a, "fig3.csv"), read(&b, "fig3.csv"));
    // manifests differ only in the output directory they record
    let ma: Value = serde_json::from_slice(&read(&a, "fig3.manifest.json")).unwrap();
    let mb: Value = serde_json::from_slice(&read(&b, "fig3.manifest.json")).unwrap();
    assert_eq!(ma["resolved"], mb["resolved"]);
    assert_eq!(ma["timestamp"], mb["timestamp"]);
}
