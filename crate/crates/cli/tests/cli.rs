mod common;

use std::collections::BTreeSet;
use std::fs;

use common::*;
use tempfile::tempdir;

use twophase_core::parabolic::{solve_parabolic, StepperConfig};
use twophase_core::problem::{REFERENCE_NODES, REFERENCE_STEPS};

fn records(path: &std::path::Path) -> Vec<csv::StringRecord> {
    csv::Reader::from_path(path)
        .unwrap()
        .records()
        .map(|r| r.unwrap())
        .collect()
}

#[test]
fn headers_match_golden_file() {
    let work = tempdir().unwrap();
    assert_eq!(rendered_headers(work.path()), golden_headers());
}

#[test]
fn fig1_trace_covers_the_reference_grid() {
    let work = tempdir().unwrap();
    let cfg = write_config(
        work.path(),
        "fig1.json",
        r#"{"problem": {"builtin": "fig1"}, "solver": {"snapshot_stride": 1},
            "output": {"emit": ["solution", "diagnostics"]}}"#,
    );
    let out = work.path().join("out");
    let o = run(&["solve-parabolic", "--config", cfg.to_str().unwrap(), "--out", out.to_str().unwrap()]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    assert!(!out.join("signs.csv").exists());
    let rows = records(&out.join("solution.csv"));
    assert_eq!(rows.len(), (REFERENCE_STEPS + 1) * REFERENCE_NODES);
    let times: BTreeSet<&str> = rows.iter().map(|r| r.get(0).unwrap()).collect();
    assert_eq!(times.len(), REFERENCE_STEPS + 1);
    assert_eq!(records(&out.join("diagnostics.csv")).len(), REFERENCE_STEPS);
}

#[test]
fn csv_rows_round_trip_to_solver_values() {
    let work = tempdir().unwrap();
    let cfg = write_config(work.path(), "p.json", SMALL_PARABOLIC_1D);
    let out = work.path().join("out");
    assert_eq!(code(&run(&["solve-parabolic", "--config", cfg.to_str().unwrap(), "--out", out.to_str().unwrap()])), 0);

    let problem = twophase_core::ProblemSpec::builder(twophase_core::GridSpec::line(0.0, 1.0, 21).unwrap())
        .time(twophase_core::TimeGrid::new(0.2, 40).unwrap())
        .lambda_plus(twophase_core::Coefficient::field(|p| 2.0 + p.x))
        .lambda_minus(1.0)
        .initial(|p| 16.0 * p.x - 8.0)
        .boundary(|t, p| 16.0 * p.x - 8.0 + t)
        .build()
        .unwrap();
    let trace = solve_parabolic(&problem, &StepperConfig::implicit().with_stride(4)).unwrap();
    let rows = records(&out.join("solution.csv"));
    let mut expected = Vec::new();
    for snap in &trace.snapshots {
        for node in 0..problem.grid().len() {
            expected.push((snap.t, problem.grid().point(node).x, snap.u[node]));
        }
    }
    assert_eq!(rows.len(), expected.len());
    for (row, (t, x, u)) in rows.iter().zip(expected) {
        assert_eq!(row.len(), 3);
        let parsed: Vec<f64> = row.iter().map(|f| f.parse().unwrap()).collect();
        assert_eq!(parsed, [t, x, u]);
    }

    for row in records(&out.join("signs.csv")) {
        assert!(matches!(row.get(2).unwrap(), "-1" | "0" | "1"));
    }
    for row in records(&out.join("diagnostics.csv")) {
        row.get(0).unwrap().parse::<usize>().unwrap();
        for f in row.iter().skip(1).take(3) {
            assert!(f.parse::<f64>().unwrap().is_finite());
        }
        row.get(4).unwrap().parse::<usize>().unwrap();
    }
}

#[test]
fn repeated_runs_are_byte_identical() {
    let work = tempdir().unwrap();
    for (command, json) in [("solve-parabolic", SMALL_PARABOLIC_2D), ("solve-elliptic", SMALL_ELLIPTIC_1D)] {
        let cfg = write_config(work.path(), "c.json", json);
        let runs: Vec<_> = ["a", "b"]
            .iter()
            .map(|name| {
                let out = work.path().join(format!("{command}-{name}"));
                let o = run(&[command, "--config", cfg.to_str().unwrap(), "--out", out.to_str().unwrap(), "--seed", "7"]);
                assert_eq!(code(&o), 0, "{}", stderr(&o));
                assert!(out.join("timing.json").exists());
                deterministic_files(&out)
            })
            .collect();
        assert!(runs[0].iter().any(|(n, _)| n == "manifest.json"));
        assert_eq!(runs[0], runs[1], "{command}");
    }
}

#[test]
fn manifest_echoes_resolved_config() {
    let work = tempdir().unwrap();
    let cfg = write_config(work.path(), "c.json", SMALL_PARABOLIC_2D);
    let out = work.path().join("out");
    let o = run(&["solve-parabolic", "--config", cfg.to_str().unwrap(), "--out", out.to_str().unwrap(), "--seed", "11"]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let m: serde_json::Value = serde_json::from_str(&fs::read_to_string(out.join("manifest.json")).unwrap()).unwrap();
    assert_eq!(m["seed"], 11);
    assert_eq!(m["command"], "solve-parabolic");
    assert_eq!(m["config"]["solver"]["mode"], "explicit");
    assert_eq!(m["config"]["problem"]["initial"], "4*(x - y)");
    let dt = m["config"]["problem"]["dt"].as_f64().unwrap();
    assert!(dt / (0.125 * 0.125) <= 0.25);
    assert_eq!(m["files"].as_array().unwrap().len(), 4);
}

#[test]
fn missing_lambda_minus_is_a_config_error() {
    let work = tempdir().unwrap();
    let cfg = write_config(
        work.path(),
        "c.json",
        r#"{"problem": {"bounds": [[0, 1]], "nodes": 11, "horizon": 1, "steps": 10,
            "lambda_plus": 1, "initial": "x", "boundary": "x"}}"#,
    );
    let o = run(&["solve-parabolic", "--config", cfg.to_str().unwrap(), "--out", work.path().join("o").to_str().unwrap()]);
    assert_eq!(code(&o), 2);
    assert!(stderr(&o).contains("lambda_minus"), "{}", stderr(&o));
}

#[test]
fn explicit_mode_at_reference_resolution_violates_cfl() {
    let work = tempdir().unwrap();
    let cfg = write_config(work.path(), "c.json", r#"{"problem": {"builtin": "fig1"}}"#);
    let o = run(&[
        "solve-parabolic",
        "--config",
        cfg.to_str().unwrap(),
        "--out",
        work.path().join("o").to_str().unwrap(),
        "--mode",
        "explicit",
    ]);
    assert_eq!(code(&o), 1);
    let err = stderr(&o);
    assert!(err.contains("1/2") && err.contains("160"), "{err}");
}

#[test]
fn config_syntax_and_schema_errors_exit_2() {
    let work = tempdir().unwrap();
    let cases = [
        ("{\n  \"problem\": {\"builtin\": \"fig1\",}\n}", "line 2"),
        ("{\"problem\": {\"builtin\": \"fig1\"},\n \"solvr\": {}}", "solvr"),
        (r#"{"problem": {"builtin": "fig1", "initial": "16*x - "}}"#, "problem.initial"),
        (r#"{"problem": {"builtin": "fig1", "initial": "cos(x)"}}"#, "cos"),
        (r#"{"problem": {"builtin": "fig1", "steps": 0}}"#, "steps"),
    ];
    for (i, (json, needle)) in cases.iter().enumerate() {
        let cfg = write_config(work.path(), &format!("c{i}.json"), json);
        let o = run(&["solve-parabolic", "--config", cfg.to_str().unwrap(), "--out", work.path().join("o").to_str().unwrap()]);
        assert_eq!(code(&o), 2, "{json}: {}", stderr(&o));
        assert!(stderr(&o).contains(needle), "{json}: {}", stderr(&o));
    }
    let o = run(&["solve-parabolic", "--config", work.path().join("absent.json").to_str().unwrap()]);
    assert_eq!(code(&o), 2);
}

#[test]
fn zero_boundary_gives_zero_solution() {
    let work = tempdir().unwrap();
    let cfg = write_config(
        work.path(),
        "c.json",
        r#"{"problem": {"bounds": [[0, 2]], "nodes": 31, "lambda_plus": 1, "lambda_minus": 1, "boundary": 0}}"#,
    );
    let out = work.path().join("out");
    let o = run(&["solve-elliptic", "--config", cfg.to_str().unwrap(), "--out", out.to_str().unwrap()]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let rows = records(&out.join("solution.csv"));
    assert_eq!(rows.len(), 31);
    assert!(rows.iter().all(|r| r.get(1).unwrap() == "0"));
    assert_eq!(records(&out.join("free_boundary.csv")).len(), 0);
}

#[test]
fn fig1_boundary_data_gives_two_phases() {
    let work = tempdir().unwrap();
    let cfg = write_config(
        work.path(),
        "c.json",
        r#"{"problem": {"builtin": "fig1", "nodes": 101}, "output": {"emit": ["signs", "free_boundary"]}}"#,
    );
    let out = work.path().join("out");
    let o = run(&["solve-elliptic", "--config", cfg.to_str().unwrap(), "--out", out.to_str().unwrap()]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let classes: Vec<i8> = records(&out.join("signs.csv"))
        .iter()
        .map(|r| r.get(1).unwrap().parse().unwrap())
        .collect();
    assert_eq!(classes[1], -1);
    assert_eq!(classes[99], 1);
    let first_pos = classes.iter().position(|&c| c == 1).unwrap();
    let last_neg = classes.iter().rposition(|&c| c == -1).unwrap();
    assert!(last_neg < first_pos);
    assert!(!records(&out.join("free_boundary.csv")).is_empty());
}

#[test]
fn elliptic_non_convergence_exits_1_with_report() {
    let work = tempdir().unwrap();
    let cfg = write_config(
        work.path(),
        "c.json",
        r#"{"problem": {"builtin": "fig2", "nodes": 51}, "solver": {"max_iterations": 1}}"#,
    );
    let out = work.path().join("out");
    let o = run(&["solve-elliptic", "--config", cfg.to_str().unwrap(), "--out", out.to_str().unwrap()]);
    assert_eq!(code(&o), 1);
    let err = stderr(&o);
    assert!(err.contains("\"converged\":false") && err.contains("\"iterations\":1"), "{err}");
    let report: serde_json::Value = serde_json::from_str(&fs::read_to_string(out.join("report.json")).unwrap()).unwrap();
    assert_eq!(report["converged"], false);
}

#[test]
fn studies_report_orders_and_reject_short_sequences() {
    let work = tempdir().unwrap();
    let cfg = write_config(
        work.path(),
        "heat.json",
        r#"{"study": {"kind": "heat_space", "levels": [10, 20, 40, 80]}}"#,
    );
    let out = work.path().join("heat");
    let o = run(&["convergence-study", "--config", cfg.to_str().unwrap(), "--out", out.to_str().unwrap()]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    assert_eq!(header(&out.join("study.csv")), "level,spacing,error");
    let study: serde_json::Value = serde_json::from_str(&fs::read_to_string(out.join("study.json")).unwrap()).unwrap();
    let slope = study["estimate"]["slope"].as_f64().unwrap();
    assert!((slope - 2.0).abs() < 0.2, "{slope}");
    assert_eq!(study["spacing"], "dx");

    let cfg = write_config(
        work.path(),
        "probe.json",
        r#"{"study": {"kind": "probe", "probe": "exp_sin", "operator": "parabolic", "point": [0.5], "t": 0.5,
            "levels": [16, 32, 64]}}"#,
    );
    let out = work.path().join("probe");
    let o = run(&["convergence-study", "--config", cfg.to_str().unwrap(), "--out", out.to_str().unwrap()]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let study: serde_json::Value = serde_json::from_str(&fs::read_to_string(out.join("study.json")).unwrap()).unwrap();
    assert!((study["estimate"]["slope"].as_f64().unwrap() - 1.0).abs() < 0.2);

    for json in [
        r#"{"study": {"kind": "heat_space", "levels": [10, 20]}}"#,
        r#"{"study": {"kind": "heat_time", "intervals": 20, "steps": [10]}}"#,
        r#"{"study": {"kind": "probe", "probe": "sin_pi", "operator": "elliptic", "point": [0.5], "levels": [8, 16]}}"#,
        r#"{"study": {"kind": "probe", "probe": "sin_pi", "operator": "elliptic", "point": [0.5, 0.5], "levels": [8, 16, 32]}}"#,
        r#"{"problem": {"builtin": "fig1"}}"#,
    ] {
        let cfg = write_config(work.path(), "bad.json", json);
        let o = run(&["convergence-study", "--config", cfg.to_str().unwrap(), "--out", work.path().join("bad").to_str().unwrap()]);
        assert_eq!(code(&o), 2, "{json}: {}", stderr(&o));
    }
}

#[test]
fn verify_passes_fails_on_injection_and_is_deterministic() {
    let work = tempdir().unwrap();
    let small = [
        "--explicit-trials", "40", "--fuzz-trials", "200", "--elliptic-trials", "100", "--oracle-trials", "5",
        "--comparison-trials", "5", "--band-nodes", "41", "--seed", "42",
    ];
    let mut reports = Vec::new();
    for name in ["a", "b"] {
        let out = work.path().join(name);
        let mut args = vec!["verify", "--out", out.to_str().unwrap()];
        args.extend(small);
        let o = run(&args);
        assert_eq!(code(&o), 0, "{}", stderr(&o));
        reports.push(fs::read(out.join("verify_report.json")).unwrap());
    }
    assert_eq!(reports[0], reports[1]);
    let report: serde_json::Value = serde_json::from_slice(&reports[0]).unwrap();
    assert_eq!(report["passed"], true);
    let checks = report["checks"].as_array().unwrap();
    assert!(checks.iter().any(|c| c["name"] == "monotonicity_parabolic_1d" && c["trials"] == 200));
    assert!(checks.iter().any(|c| c["name"] == "oracle_equivalence" && c["trials"] == 5));

    let out = work.path().join("injected");
    let mut args = vec!["verify", "--out", out.to_str().unwrap(), "--inject-cfl-violation"];
    args.extend(small);
    let o = run(&args);
    assert_eq!(code(&o), 1);
    assert!(stderr(&o).contains("FAIL injected_cfl_violation"), "{}", stderr(&o));
    let report: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(out.join("verify_report.json")).unwrap()).unwrap();
    assert_eq!(report["passed"], false);
    let injected = checks_named(&report, "injected_cfl_violation");
    assert_eq!(injected["passed"], false);
    assert!(!injected["failing_seeds"].as_array().unwrap().is_empty());
    assert_eq!(checks_named(&report, "monotonicity_parabolic_1d")["passed"], true);
}

fn checks_named<'a>(report: &'a serde_json::Value, name: &str) -> &'a serde_json::Value {
    report["checks"].as_array().unwrap().iter().find(|c| c["name"] == name).unwrap()
}
