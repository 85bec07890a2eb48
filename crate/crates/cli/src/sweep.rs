//! Grid sweeps: query-scaling measurements over (T, N_c, bits) cells and
//! budget/horizon precision tables.
//!
//! A sweep is described by a JSON grid file with a `kind` selector:
//!
//! ```json
//! { "schema_version": 1, "kind": "complexity",
//!   "benchmark": "double-integrator",
//!   "cells": [ { "total_steps": 10, "n_c": 2, "bits": 2 } ],
//!   "runs": 50, "seed": 0 }
//! ```
//!
//! ```json
//! { "schema_version": 1, "kind": "precision",
//!   "budgets": [65536], "horizons": [4] }
//! ```
//!
//! Cells run in parallel; rows are emitted in grid order regardless.
//! `--runs` and `--seed` on the command line override the grid file.

use std::path::Path;

use quantgraph_core::benchmarks::Benchmark;
use quantgraph_core::classical::{complexity_probe, precision_report, PrecisionReport, ProbeCell, ProbeRow};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::config::{CommonArgs, Settings, CONFIG_SCHEMA_VERSION};
use crate::errors::CliError;
use crate::output::{self, SOLVER_VERSION, SUMMARY_SCHEMA_VERSION};

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct ComplexityGrid {
    #[allow(dead_code)]
    schema_version: u32,
    #[allow(dead_code)]
    kind: String,
    /// Control benchmark the cells are variants of (default
    /// double-integrator).
    benchmark: Option<String>,
    cells: Vec<ProbeCell>,
    runs: Option<usize>,
    seed: Option<u64>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct PrecisionGrid {
    #[allow(dead_code)]
    schema_version: u32,
    #[allow(dead_code)]
    kind: String,
    budgets: Vec<u64>,
    horizons: Vec<usize>,
}

/// Sweep result document (JSON form).
#[derive(Debug, Serialize)]
struct SweepDocument<'a, R: Serialize> {
    schema_version: u32,
    solver_version: &'static str,
    kind: &'static str,
    #[serde(skip_serializing_if = "Option::is_none")]
    benchmark: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    runs: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    seed: Option<u64>,
    rows: &'a [R],
}

/// Executes the grid file and writes `sweep-complexity` or
/// `sweep-precision` tables into the output directory.
pub fn run_sweep(grid_path: &Path, common: &CommonArgs) -> Result<(), CliError> {
    let settings = Settings::resolve("sweep", common)?;
    crate::run::init_thread_pool(&settings)?;
    output::ensure_out_dir(&settings.out)?;

    let text = std::fs::read_to_string(grid_path).map_err(|e| CliError::io(grid_path, e))?;
    let value: serde_json::Value = serde_json::from_str(&text)
        .map_err(|e| CliError::Config(format!("{}: {e}", grid_path.display())))?;
    let version = value.get("schema_version").and_then(|v| v.as_u64());
    if version != Some(CONFIG_SCHEMA_VERSION as u64) {
        return Err(CliError::Config(format!(
            "{}: schema_version must be {CONFIG_SCHEMA_VERSION}",
            grid_path.display()
        )));
    }
    let kind = value.get("kind").and_then(|v| v.as_str()).unwrap_or("");
    match kind {
        "complexity" => {
            let grid: ComplexityGrid = serde_json::from_value(value)
                .map_err(|e| CliError::Config(format!("{}: {e}", grid_path.display())))?;
            run_complexity(&settings, common, grid)
        }
        "precision" => {
            let grid: PrecisionGrid = serde_json::from_value(value)
                .map_err(|e| CliError::Config(format!("{}: {e}", grid_path.display())))?;
            run_precision(&settings, grid)
        }
        other => Err(CliError::Config(format!(
            "{}: unknown sweep kind '{other}' (expected 'complexity' or 'precision')",
            grid_path.display()
        ))),
    }
}

fn run_complexity(
    settings: &Settings,
    common: &CommonArgs,
    grid: ComplexityGrid,
) -> Result<(), CliError> {
    let name = grid.benchmark.as_deref().unwrap_or("double-integrator");
    let bench = Benchmark::by_name(name)
        .ok_or_else(|| CliError::Config(format!("unknown benchmark '{name}' in sweep grid")))?;
    // Flags beat the grid file, mirroring the flags-over-config rule.
    let runs = common.runs.or(grid.runs).unwrap_or(10);
    let seed = common.seed.or(grid.seed).unwrap_or(0);
    if runs == 0 {
        return Err(CliError::Config("sweep runs must be at least 1".into()));
    }
    let seeds: Vec<u64> = (0..runs as u64).map(|i| seed.wrapping_add(i)).collect();

    // One probe call per cell so cells parallelize; order is preserved.
    let rows: Vec<ProbeRow> = grid
        .cells
        .par_iter()
        .map(|&cell| {
            complexity_probe(&bench, &[cell], &seeds)
                .pop()
                .expect("one cell in, one row out")
        })
        .collect();

    if settings.format.writes_csv() {
        let path = settings.out.join("sweep-complexity.csv");
        let mut writer = csv::Writer::from_path(&path)
            .map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
        writer
            .write_record([
                "total_steps",
                "n_c",
                "bits",
                "runs",
                "mean_quantum_queries",
                "mean_classical_queries",
                "mean_total_queries",
                "mean_cost",
                "error",
            ])
            .map_err(|e| CliError::Io(e.to_string()))?;
        for row in &rows {
            writer
                .write_record([
                    row.total_steps.to_string(),
                    row.n_c.to_string(),
                    row.bits.to_string(),
                    row.runs.to_string(),
                    row.mean_quantum_queries.to_string(),
                    row.mean_classical_queries.to_string(),
                    row.mean_total_queries.to_string(),
                    row.mean_cost.to_string(),
                    row.error.clone().unwrap_or_default(),
                ])
                .map_err(|e| CliError::Io(e.to_string()))?;
        }
        writer.flush().map_err(|e| CliError::io(&path, e))?;
    }
    if settings.format.writes_json() {
        let document = SweepDocument {
            schema_version: SUMMARY_SCHEMA_VERSION,
            solver_version: SOLVER_VERSION,
            kind: "complexity",
            benchmark: Some(bench.name.to_string()),
            runs: Some(runs),
            seed: Some(seed),
            rows: &rows,
        };
        output::write_json(&settings.out.join("sweep-complexity.json"), &document)?;
    }

    let failed = rows.iter().filter(|r| r.error.is_some()).count();
    println!(
        "sweep: {} complexity cells ({failed} failed), {runs} runs each, artifacts in {}",
        rows.len(),
        settings.out.display()
    );
    Ok(())
}

fn run_precision(settings: &Settings, grid: PrecisionGrid) -> Result<(), CliError> {
    let mut rows: Vec<PrecisionReport> = Vec::new();
    for &budget in &grid.budgets {
        for &horizon in &grid.horizons {
            rows.push(precision_report(budget, horizon).map_err(CliError::from)?);
        }
    }

    if settings.format.writes_csv() {
        let path = settings.out.join("sweep-precision.csv");
        let mut writer = csv::Writer::from_path(&path)
            .map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
        writer
            .write_record([
                "query_budget",
                "horizon",
                "classical_bits",
                "quantum_bits",
                "classical_resolution",
                "quantum_resolution",
                "doubling_exact",
            ])
            .map_err(|e| CliError::Io(e.to_string()))?;
        for row in &rows {
            writer
                .write_record([
                    row.query_budget.to_string(),
                    row.horizon.to_string(),
                    row.classical_bits.to_string(),
                    row.quantum_bits.to_string(),
                    row.classical_resolution.to_string(),
                    row.quantum_resolution.to_string(),
                    row.doubling_exact.to_string(),
                ])
                .map_err(|e| CliError::Io(e.to_string()))?;
        }
        writer.flush().map_err(|e| CliError::io(&path, e))?;
    }
    if settings.format.writes_json() {
        let document = SweepDocument {
            schema_version: SUMMARY_SCHEMA_VERSION,
            solver_version: SOLVER_VERSION,
            kind: "precision",
            benchmark: None,
            runs: None,
            seed: None,
            rows: &rows,
        };
        output::write_json(&settings.out.join("sweep-precision.json"), &document)?;
    }

    println!(
        "sweep: {} precision rows, artifacts in {}",
        rows.len(),
        settings.out.display()
    );
    Ok(())
}
