//! End-to-end tests that spawn the real binary: artifact emission and
//! re-parsing, flag/config merging, exit-code classification, and
//! determinism of everything but the timing block.

use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;
use tempfile::TempDir;

fn bin() -> Command {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_quantgraph"));
    // Tests control the pool size explicitly where it matters.
    cmd.env_remove("QUANTGRAPH_THREADS");
    cmd
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("binary spawns")
}

fn assert_success(output: &Output) {
    assert!(
        output.status.success(),
        "expected success, got {:?}\nstderr: {}",
        output.status.code(),
        String::from_utf8_lossy(&output.stderr)
    );
}

fn exit_code(output: &Output) -> i32 {
    output.status.code().expect("process exits normally")
}

fn read_json(path: &Path) -> Value {
    let text = std::fs::read_to_string(path)
        .unwrap_or_else(|e| panic!("reading {}: {e}", path.display()));
    serde_json::from_str(&text).unwrap_or_else(|e| panic!("parsing {}: {e}", path.display()))
}

fn read_csv(path: &Path) -> (Vec<String>, Vec<Vec<String>>) {
    let mut reader = csv::Reader::from_path(path)
        .unwrap_or_else(|e| panic!("opening {}: {e}", path.display()));
    let header = reader
        .headers()
        .expect("csv header")
        .iter()
        .map(str::to_string)
        .collect();
    let rows = reader
        .records()
        .map(|r| r.expect("csv row").iter().map(str::to_string).collect())
        .collect();
    (header, rows)
}

#[test]
fn static_graph_emits_reparseable_artifacts_with_the_known_optimum() {
    let dir = TempDir::new().unwrap();
    let out = dir.path().to_str().unwrap();
    let output = run(&["static-graph", "--runs", "5", "--seed", "3", "--out", out]);
    assert_success(&output);

    let summary = read_json(&dir.path().join("static-graph-summary.json"));
    assert_eq!(summary["schema_version"], 1);
    assert_eq!(summary["benchmark"], "static-graph");
    assert_eq!(summary["config"]["runs"], 5);
    assert_eq!(summary["config"]["seed"], 3);
    let runs = summary["runs"].as_array().unwrap();
    assert_eq!(runs.len(), 5);
    let best = runs
        .iter()
        .map(|r| r["cost"].as_f64().unwrap())
        .fold(f64::INFINITY, f64::min);
    assert_eq!(best, 18.0);
    for r in runs {
        assert_eq!(r["optimal_cost"], 18.0);
        assert_eq!(r["warm_cost"], 23.0);
        assert_eq!(r["pruned_fraction"], 0.6);
        assert_eq!(r["qubits"], 3);
    }
    // Seeds ladder up from the base.
    let seeds: Vec<u64> = runs.iter().map(|r| r["seed"].as_u64().unwrap()).collect();
    assert_eq!(seeds, vec![3, 4, 5, 6, 7]);
    // The timing block exists and is the last key.
    let text = std::fs::read_to_string(dir.path().join("static-graph-summary.json")).unwrap();
    let last_key = ["schema_version", "solver_version", "benchmark", "config", "runs", "timings"]
        .iter()
        .max_by_key(|k| text.find(&format!("\"{k}\"")).unwrap())
        .unwrap();
    assert_eq!(*last_key, "timings");

    let stats = read_json(&dir.path().join("static-graph-stats.json"));
    assert!(stats["quantum"]["mean_cost"].as_f64().unwrap() >= 18.0);
    assert!(stats["quantum"]["success_rate"].as_f64().unwrap() <= 1.0);

    let (header, rows) = read_csv(&dir.path().join("static-graph-runs.csv"));
    assert_eq!(header[0], "seed");
    assert!(header.contains(&"pruned_fraction".to_string()));
    assert_eq!(rows.len(), 5);
}

#[test]
fn double_integrator_compare_classical_reports_both_solvers() {
    let dir = TempDir::new().unwrap();
    let out = dir.path().to_str().unwrap();
    let output = run(&[
        "double-integrator",
        "--runs",
        "2",
        "--compare-classical",
        "--out",
        out,
    ]);
    assert_success(&output);

    let stats = read_json(&dir.path().join("double-integrator-stats.json"));
    let quantum_mean = stats["quantum"]["mean_cost"].as_f64().unwrap();
    let classical_mean = stats["classical"]["mean_cost"].as_f64().unwrap();
    assert!(quantum_mean.is_finite() && classical_mean.is_finite());
    // The exhaustive baseline can never be beaten on the same task.
    assert!(quantum_mean >= classical_mean - 1e-9);
    assert_eq!(stats["classical"]["mean_quantum_queries"], 0.0);

    // Each seed gets a trajectory table whose cumulative-cost column ends
    // at the run's reported cost.
    let summary = read_json(&dir.path().join("double-integrator-summary.json"));
    for record in summary["runs"].as_array().unwrap() {
        let seed = record["seed"].as_u64().unwrap();
        let cost = record["cost"].as_f64().unwrap();
        let (header, rows) =
            read_csv(&dir.path().join(format!("double-integrator-run-{seed}.csv")));
        assert_eq!(header, vec!["t", "x0", "x1", "u0", "running_cost"]);
        assert_eq!(rows.len(), 31); // 30 steps + terminal row
        let last = rows.last().unwrap();
        assert!(last[3].is_empty(), "terminal row has no control");
        let final_running: f64 = last[4].parse().unwrap();
        assert!((final_running - cost).abs() <= 1e-9 * cost.abs().max(1.0));
    }
}

#[test]
fn cartpole_requires_the_cold_start_flag() {
    let dir = TempDir::new().unwrap();
    let out = dir.path().to_str().unwrap();

    let refused = run(&["cartpole", "--runs", "1", "--out", out]);
    assert_eq!(exit_code(&refused), 2);
    let stderr = String::from_utf8_lossy(&refused.stderr);
    assert!(
        stderr.contains("--no-local-stage"),
        "error must name the flag that fixes it: {stderr}"
    );

    // With the flag (and a short horizon to keep the test fast) it runs.
    let accepted = run(&[
        "cartpole",
        "--runs",
        "1",
        "--no-local-stage",
        "--horizon",
        "6",
        "--out",
        out,
    ]);
    assert_success(&accepted);
    let summary = read_json(&dir.path().join("cartpole-summary.json"));
    assert_eq!(summary["config"]["local_stage"], false);
    assert_eq!(summary["config"]["horizon"], 6);
    assert!(summary["runs"][0]["warm_start_cost"].is_null());
}

#[test]
fn qubo_file_runs_find_the_brute_force_minimum() {
    let dir = TempDir::new().unwrap();
    let out = dir.path().to_str().unwrap();
    let problem = dir.path().join("problem.json");
    std::fs::write(
        &problem,
        serde_json::json!({
            "n": 4,
            "Q": [[0.0, 2.0, 0.0, -1.0],
                  [0.0, 0.0, 1.0, 0.0],
                  [0.0, 0.0, 0.0, -2.0],
                  [0.0, 0.0, 0.0, 0.0]],
            "q": [0.5, -1.0, 0.25, -0.75],
            "c": 1.0
        })
        .to_string(),
    )
    .unwrap();

    let output = run(&[
        "qubo-file",
        problem.to_str().unwrap(),
        "--runs",
        "4",
        "--compare-classical",
        "--out",
        out,
    ]);
    assert_success(&output);

    let summary = read_json(&dir.path().join("qubo-file-summary.json"));
    let runs = summary["runs"].as_array().unwrap();
    assert_eq!(runs.len(), 4);
    for r in runs {
        assert_eq!(r["qubits"], 4);
        // Optimality here is exact: the oracle scans all 16 candidates.
        assert_eq!(r["optimal_cost"], r["optimal_cost"].as_f64().unwrap());
    }
    let stats = read_json(&dir.path().join("qubo-file-stats.json"));
    assert_eq!(stats["classical"]["mean_classical_queries"], 16.0);

    let (header, rows) = read_csv(&dir.path().join("qubo-file-runs.csv"));
    assert!(header.contains(&"best_index".to_string()));
    assert_eq!(rows.len(), 4);
}

#[test]
fn sweep_runs_complexity_grids_and_accepts_empty_ones() {
    let dir = TempDir::new().unwrap();
    let out = dir.path().to_str().unwrap();
    let grid = dir.path().join("grid.json");
    std::fs::write(
        &grid,
        serde_json::json!({
            "schema_version": 1,
            "kind": "complexity",
            "benchmark": "double-integrator",
            "cells": [
                {"total_steps": 6, "n_c": 2, "bits": 2},
                {"total_steps": 10, "n_c": 2, "bits": 2}
            ],
            "runs": 2,
            "seed": 0
        })
        .to_string(),
    )
    .unwrap();
    let output = run(&["sweep", grid.to_str().unwrap(), "--out", out]);
    assert_success(&output);

    let (header, rows) = read_csv(&dir.path().join("sweep-complexity.csv"));
    assert_eq!(header[0], "total_steps");
    assert_eq!(rows.len(), 2);
    // Longer tasks cost more queries at fixed window geometry.
    let q6: f64 = rows[0][4].parse().unwrap();
    let q10: f64 = rows[1][4].parse().unwrap();
    assert!(q10 > q6, "queries must grow with task length: {q6} vs {q10}");
    let document = read_json(&dir.path().join("sweep-complexity.json"));
    assert_eq!(document["rows"].as_array().unwrap().len(), 2);

    // An empty grid is a valid request for an empty table.
    std::fs::write(
        &grid,
        r#"{ "schema_version": 1, "kind": "complexity", "cells": [] }"#,
    )
    .unwrap();
    let output = run(&["sweep", grid.to_str().unwrap(), "--out", out]);
    assert_success(&output);
    let (_, rows) = read_csv(&dir.path().join("sweep-complexity.csv"));
    assert!(rows.is_empty());
}

#[test]
fn sweep_precision_table_doubles_the_bit_depth() {
    let dir = TempDir::new().unwrap();
    let out = dir.path().to_str().unwrap();
    let grid = dir.path().join("grid.json");
    std::fs::write(
        &grid,
        r#"{ "schema_version": 1, "kind": "precision", "budgets": [65536], "horizons": [4] }"#,
    )
    .unwrap();
    let output = run(&["sweep", grid.to_str().unwrap(), "--out", out]);
    assert_success(&output);

    let (header, rows) = read_csv(&dir.path().join("sweep-precision.csv"));
    assert_eq!(header[2], "classical_bits");
    assert_eq!(rows, vec![vec![
        "65536".to_string(),
        "4".to_string(),
        "4".to_string(),
        "8".to_string(),
        "0.0625".to_string(),
        "0.00390625".to_string(),
        "true".to_string(),
    ]]);
}

#[test]
fn report_tabulates_summaries_on_stdout() {
    let dir = TempDir::new().unwrap();
    let out = dir.path().to_str().unwrap();
    assert_success(&run(&["static-graph", "--runs", "3", "--out", out]));
    let summary = dir.path().join("static-graph-summary.json");

    let output = run(&["report", summary.to_str().unwrap()]);
    assert_success(&output);
    let stdout = String::from_utf8_lossy(&output.stdout);
    let lines: Vec<&str> = stdout.lines().collect();
    assert_eq!(lines.len(), 2, "header plus one row: {stdout}");
    assert!(lines[0].starts_with("file"));
    assert!(lines[1].contains("static-graph"));
    assert!(lines[1].contains("100%"));
}

#[test]
fn exit_codes_distinguish_configuration_file_and_solver_failures() {
    let dir = TempDir::new().unwrap();
    let out = dir.path().to_str().unwrap();

    // Missing input file: file error.
    let missing = run(&["qubo-file", "/nonexistent/problem.json", "--out", out]);
    assert_eq!(exit_code(&missing), 3);

    // Malformed problem file: configuration error.
    let bad = dir.path().join("bad.json");
    std::fs::write(&bad, "{ not json").unwrap();
    let malformed = run(&["qubo-file", bad.to_str().unwrap(), "--out", out]);
    assert_eq!(exit_code(&malformed), 2);

    // A cyclic graph is structurally invalid: configuration error.
    let cyclic = dir.path().join("cyclic.json");
    std::fs::write(
        &cyclic,
        serde_json::json!({
            "nodes": ["a", "b"],
            "edges": [["a", "b", 1.0], ["b", "a", 1.0]],
            "source": "a",
            "sink": "b"
        })
        .to_string(),
    )
    .unwrap();
    let graph = run(&["static-graph", cyclic.to_str().unwrap(), "--out", out]);
    assert_eq!(exit_code(&graph), 2);

    // Finite coefficients that overflow when summed: the objective turns
    // non-finite mid-search, which is a solver error.
    let overflow = dir.path().join("overflow.json");
    std::fs::write(
        &overflow,
        serde_json::json!({
            "n": 2,
            "Q": [[1e308, 1e308], [0.0, 1e308]],
            "q": [0.0, 0.0],
            "c": 0.0
        })
        .to_string(),
    )
    .unwrap();
    let solver = run(&["qubo-file", overflow.to_str().unwrap(), "--out", out]);
    assert_eq!(
        exit_code(&solver),
        4,
        "stderr: {}",
        String::from_utf8_lossy(&solver.stderr)
    );

    // Zero repetitions is a configuration error.
    let zero = run(&["double-integrator", "--runs", "0", "--out", out]);
    assert_eq!(exit_code(&zero), 2);
}

#[test]
fn threads_env_var_overrides_the_flag_and_rejects_garbage() {
    let dir = TempDir::new().unwrap();
    let out = dir.path().to_str().unwrap();

    let output = bin()
        .args(["static-graph", "--runs", "2", "--threads", "4", "--out", out])
        .env("QUANTGRAPH_THREADS", "1")
        .output()
        .unwrap();
    assert_success(&output);

    let garbage = bin()
        .args(["static-graph", "--runs", "2", "--out", out])
        .env("QUANTGRAPH_THREADS", "plenty")
        .output()
        .unwrap();
    assert_eq!(exit_code(&garbage), 2);
}

#[test]
fn config_file_defaults_lose_to_flags_and_must_name_the_right_benchmark() {
    let dir = TempDir::new().unwrap();
    let out = dir.path().to_str().unwrap();
    let config = dir.path().join("config.json");
    std::fs::write(
        &config,
        serde_json::json!({
            "schema_version": 1,
            "benchmark": "double-integrator",
            "runs": 7,
            "seed": 100,
            "out": "ignored-by-flag"
        })
        .to_string(),
    )
    .unwrap();

    // --runs beats the file; the file's seed applies.
    let output = run(&[
        "double-integrator",
        "--config",
        config.to_str().unwrap(),
        "--runs",
        "2",
        "--out",
        out,
    ]);
    assert_success(&output);
    let summary = read_json(&dir.path().join("double-integrator-summary.json"));
    assert_eq!(summary["config"]["runs"], 2);
    assert_eq!(summary["config"]["seed"], 100);

    // The config file names a different benchmark: refused.
    let mismatch = run(&["cartpole", "--config", config.to_str().unwrap(), "--out", out]);
    assert_eq!(exit_code(&mismatch), 2);

    // Unknown keys are refused, not silently ignored.
    std::fs::write(&config, r#"{ "schema_version": 1, "rnus": 7 }"#).unwrap();
    let typo = run(&["double-integrator", "--config", config.to_str().unwrap(), "--out", out]);
    assert_eq!(exit_code(&typo), 2);

    // Unsupported schema versions are refused.
    std::fs::write(&config, r#"{ "schema_version": 99 }"#).unwrap();
    let unsupported =
        run(&["double-integrator", "--config", config.to_str().unwrap(), "--out", out]);
    assert_eq!(exit_code(&unsupported), 2);

    // A config file can enable the warm-start stage — which the cart-pole
    // then rejects for its nonlinear dynamics.
    std::fs::write(
        &config,
        r#"{ "schema_version": 1, "benchmark": "cartpole", "local_stage": true }"#,
    )
    .unwrap();
    let warm_cartpole =
        run(&["cartpole", "--config", config.to_str().unwrap(), "--out", out]);
    assert_eq!(exit_code(&warm_cartpole), 2);
}

#[test]
fn summaries_are_byte_identical_across_reruns_once_timings_are_stripped() {
    let dir1 = TempDir::new().unwrap();
    let dir2 = TempDir::new().unwrap();
    let problem = dir1.path().join("problem.json");
    std::fs::write(
        &problem,
        serde_json::json!({
            "n": 5,
            "Q": [[0.0, 1.0, 0.0, 0.0, -1.5],
                  [0.0, 0.0, 2.0, 0.0, 0.0],
                  [0.0, 0.0, 0.0, -0.5, 0.0],
                  [0.0, 0.0, 0.0, 0.0, 1.0],
                  [0.0, 0.0, 0.0, 0.0, 0.0]],
            "q": [0.3, -0.8, 0.1, -0.4, 0.6],
            "c": 0.25
        })
        .to_string(),
    )
    .unwrap();
    for (dir, threads) in [(&dir1, "1"), (&dir2, "2")] {
        let output = bin()
            .args([
                "qubo-file",
                problem.to_str().unwrap(),
                "--runs",
                "3",
                "--seed",
                "11",
                "--out",
                dir.path().to_str().unwrap(),
            ])
            .env("QUANTGRAPH_THREADS", threads)
            .output()
            .unwrap();
        assert_success(&output);
    }
    let strip = |dir: &TempDir| {
        let mut value = read_json(&dir.path().join("qubo-file-summary.json"));
        let timings = value
            .as_object_mut()
            .unwrap()
            .remove("timings")
            .expect("summaries carry a timing block");
        assert!(timings.get("total_seconds").is_some());
        serde_json::to_string(&value).unwrap()
    };
    assert_eq!(strip(&dir1), strip(&dir2));

    let csv1 = std::fs::read(dir1.path().join("qubo-file-runs.csv")).unwrap();
    let csv2 = std::fs::read(dir2.path().join("qubo-file-runs.csv")).unwrap();
    assert_eq!(csv1, csv2, "run tables carry no timing data at all");
}
