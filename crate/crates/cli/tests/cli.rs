//! End-to-end tests of the `domtest` binary.

use std::path::Path;
use std::process::{Command, Output};

use domtest_core::data_model::write_samples_csv;
use domtest_core::validation::{generate, ScenarioSpec};

fn domtest() -> Command {
    Command::new(env!("CARGO_BIN_EXE_domtest"))
}

fn write_two_arm_csv(path: &Path, n: usize, seed: u64) {
    let spec = ScenarioSpec::figure1_replica(n);
    let (a, b) = generate(&spec, seed).unwrap();
    let file = std::fs::File::create(path).unwrap();
    write_samples_csv(&a, &b, file).unwrap();
}

fn run_ok(cmd: &mut Command) -> Output {
    let out = cmd.output().unwrap();
    assert!(
        out.status.success(),
        "stdout: {}\nstderr: {}",
        String::from_utf8_lossy(&out.stdout),
        String::from_utf8_lossy(&out.stderr)
    );
    out
}

fn normalized_report(path: &Path) -> String {
    let mut v: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap();
    v["timing_seconds"] = serde_json::json!(0.0);
    serde_json::to_string_pretty(&v).unwrap()
}

#[test]
fn run_all_criteria_both_directions() {
    let dir = tempfile::tempdir().unwrap();
    let input = dir.path().join("data.csv");
    let out = dir.path().join("report.json");
    write_two_arm_csv(&input, 80, 3);

    run_ok(domtest().args([
        "run",
        "--input",
        input.to_str().unwrap(),
        "--criteria",
        "all",
        "--direction",
        "both",
        "--seed",
        "7",
        "--reps",
        "49",
        "--grid-x",
        "12",
        "--grid-z",
        "8",
        "--out",
        out.to_str().unwrap(),
    ]));

    let report: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(&out).unwrap()).unwrap();
    assert_eq!(report["results"].as_array().unwrap().len(), 14);
    assert_eq!(report["tool"], "domtest");
    assert!(report["input_digest"]
        .as_str()
        .unwrap()
        .starts_with("sha256:"));
    for r in report["results"].as_array().unwrap() {
        let p = r["p_value"].as_f64().unwrap();
        assert!((0.0..=1.0).contains(&p));
    }
}

#[test]
fn repeated_runs_identical_modulo_timing() {
    let dir = tempfile::tempdir().unwrap();
    let input = dir.path().join("data.csv");
    write_two_arm_csv(&input, 60, 11);
    let out1 = dir.path().join("r1.json");
    let out2 = dir.path().join("r2.json");
    for out in [&out1, &out2] {
        run_ok(domtest().args([
            "run",
            "--input",
            input.to_str().unwrap(),
            "--criteria",
            "lasbd,iasd2",
            "--seed",
            "5",
            "--reps",
            "39",
            "--grid-x",
            "10",
            "--grid-z",
            "6",
            "--out",
            out.to_str().unwrap(),
        ]));
    }
    assert_eq!(normalized_report(&out1), normalized_report(&out2));
}

#[test]
fn split_input_files() {
    let dir = tempfile::tempdir().unwrap();
    let spec = ScenarioSpec::figure1_replica(50);
    let (a, b) = generate(&spec, 2).unwrap();
    let pa = dir.path().join("a.csv");
    let pb = dir.path().join("b.csv");
    for (path, sample) in [(&pa, &a), (&pb, &b)] {
        let mut text = String::from("x,z\n");
        for o in sample.observations() {
            text.push_str(&format!("{},{}\n", o.x, o.z));
        }
        std::fs::write(path, text).unwrap();
    }
    let out = dir.path().join("report.json");
    run_ok(domtest().args([
        "run",
        "--input-a",
        pa.to_str().unwrap(),
        "--input-b",
        pb.to_str().unwrap(),
        "--criteria",
        "kr",
        "--reps",
        "19",
        "--grid-x",
        "8",
        "--grid-z",
        "6",
        "--out",
        out.to_str().unwrap(),
    ]));
    let report: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(&out).unwrap()).unwrap();
    assert_eq!(report["label_a"], "A");
    assert_eq!(report["n_a"], 50);
}

#[test]
fn usage_errors_exit_2() {
    // Unknown flag.
    let out = domtest().args(["run", "--nonsense"]).output().unwrap();
    assert_eq!(out.status.code(), Some(2));
    // Unknown criterion value.
    let dir = tempfile::tempdir().unwrap();
    let input = dir.path().join("data.csv");
    write_two_arm_csv(&input, 30, 1);
    let out = domtest()
        .args([
            "run",
            "--input",
            input.to_str().unwrap(),
            "--criteria",
            "bogus",
        ])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2));
    // Missing input entirely.
    let out = domtest().args(["run"]).output().unwrap();
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn data_errors_exit_3() {
    let dir = tempfile::tempdir().unwrap();
    // Unreadable file.
    let out = domtest()
        .args(["run", "--input", dir.path().join("nope.csv").to_str().unwrap()])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(3));
    // One treatment label only.
    let single = dir.path().join("single.csv");
    std::fs::write(&single, "treatment,x,z\nA,1,2\nA,2,3\n").unwrap();
    let out = domtest()
        .args(["run", "--input", single.to_str().unwrap()])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(3));
    let msg = String::from_utf8_lossy(&out.stderr);
    assert!(msg.contains("exactly two treatments"), "stderr: {msg}");
}

#[test]
fn emitted_grids_have_documented_shapes() {
    let dir = tempfile::tempdir().unwrap();
    let input = dir.path().join("data.csv");
    // Identical arms: every emitted value column must be exactly zero.
    let spec = ScenarioSpec::figure1_replica(40);
    let (a, _) = generate(&spec, 4).unwrap();
    let file = std::fs::File::create(&input).unwrap();
    let mut b = a.clone();
    b = domtest_core::PolicySample::new("B", b.observations().to_vec()).unwrap();
    write_samples_csv(&a, &b, file).unwrap();

    let prefix = dir.path().join("g").to_str().unwrap().to_string();
    let (g_x, g_z) = (10usize, 7usize);
    run_ok(domtest().args([
        "run",
        "--input",
        input.to_str().unwrap(),
        "--criteria",
        "lasbd",
        "--reps",
        "9",
        "--grid-x",
        &g_x.to_string(),
        "--grid-z",
        &g_z.to_string(),
        "--out",
        dir.path().join("r.json").to_str().unwrap(),
        "--emit-grids",
        &prefix,
    ]));

    let check = |suffix: &str, expect_rows: usize, expect_cols: usize| {
        let text = std::fs::read_to_string(format!("{prefix}_lasbd_{suffix}.csv")).unwrap();
        let mut lines = text.lines();
        let header = lines.next().unwrap();
        assert_eq!(header.split(',').count(), expect_cols, "{suffix}");
        let rows: Vec<&str> = lines.collect();
        assert_eq!(rows.len(), expect_rows, "{suffix}");
        for row in rows {
            let value: f64 = row.split(',').last().unwrap().parse().unwrap();
            assert_eq!(value, 0.0, "{suffix}");
        }
    };
    check("f2", g_z, 2);
    check("f1_neg", g_x, 2);
    check("f1_sym", g_x, 2);
    check("f_neg", (g_x - 1) * (g_z - 1), 3);
    check("f_pos", (g_x - 1) * (g_z - 1), 3);
}

#[test]
fn mc_subcommand_runs_scenario() {
    let dir = tempfile::tempdir().unwrap();
    let scenario = dir.path().join("scenario.json");
    std::fs::write(
        &scenario,
        r#"{
            "generator": "null_identical",
            "n_a": 40, "n_b": 40,
            "mc_replications": 4,
            "bootstrap_reps": 19,
            "criteria": ["lasbd"],
            "grid_x": 8, "grid_z": 6
        }"#,
    )
    .unwrap();
    let out_csv = dir.path().join("rates.csv");
    run_ok(domtest().args([
        "mc",
        "--scenario",
        scenario.to_str().unwrap(),
        "--seed",
        "3",
        "--out",
        out_csv.to_str().unwrap(),
    ]));
    let text = std::fs::read_to_string(&out_csv).unwrap();
    let mut lines = text.lines();
    assert_eq!(
        lines.next().unwrap(),
        "criterion,direction,n,rejection_rate,mc_se"
    );
    assert_eq!(lines.count(), 2);
}

#[test]
fn report_roundtrip_and_unknown_fields() {
    let dir = tempfile::tempdir().unwrap();
    let input = dir.path().join("data.csv");
    write_two_arm_csv(&input, 40, 9);
    let out = dir.path().join("report.json");
    run_ok(domtest().args([
        "run",
        "--input",
        input.to_str().unwrap(),
        "--criteria",
        "liasd",
        "--reps",
        "19",
        "--grid-x",
        "8",
        "--grid-z",
        "6",
        "--out",
        out.to_str().unwrap(),
    ]));
    let text = std::fs::read_to_string(&out).unwrap();
    // Lossless round-trip: every value (floats included) survives
    // parse → serialize → parse unchanged.
    let v1: serde_json::Value = serde_json::from_str(&text).unwrap();
    let v2: serde_json::Value =
        serde_json::from_str(&serde_json::to_string(&v1).unwrap()).unwrap();
    assert_eq!(v1, v2);
    let t_n = v1["results"][0]["t_n"].as_f64().unwrap();
    let reparsed: f64 = t_n.to_string().parse().unwrap();
    assert_eq!(t_n.to_bits(), reparsed.to_bits());
    // Tolerant of unknown fields added by future versions.
    let mut extended: serde_json::Value = serde_json::from_str(&text).unwrap();
    extended["future_field"] = serde_json::json!({"nested": true});
    let reparsed: Result<serde_json::Value, _> =
        serde_json::from_str(&serde_json::to_string(&extended).unwrap());
    assert!(reparsed.is_ok());
}
