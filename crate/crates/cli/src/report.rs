//! The report subcommand: read previously written summary files and print
//! one aggregate line per file as an aligned table.

use std::path::{Path, PathBuf};

use serde_json::Value;

use crate::errors::CliError;
use crate::output::mean_std;

struct ReportRow {
    file: String,
    benchmark: String,
    runs: usize,
    mean_cost: f64,
    std_cost: f64,
    /// Success (control) or optimality (graph/QUBO) rate, when recorded.
    success: Option<f64>,
    mean_quantum_queries: f64,
}

/// Tabulates one or more summary JSON files on stdout.
pub fn run_report(paths: &[PathBuf]) -> Result<(), CliError> {
    let rows: Vec<ReportRow> = paths.iter().map(|p| summarize(p)).collect::<Result<_, _>>()?;
    print_table(&rows);
    Ok(())
}

fn summarize(path: &Path) -> Result<ReportRow, CliError> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
    let value: Value = serde_json::from_str(&text)
        .map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
    let runs = value.get("runs").and_then(Value::as_array).ok_or_else(|| {
        CliError::Config(format!(
            "{}: not a run summary (no 'runs' array)",
            path.display()
        ))
    })?;
    let benchmark = value
        .get("benchmark")
        .and_then(Value::as_str)
        .unwrap_or("?")
        .to_string();

    let costs: Vec<f64> = runs
        .iter()
        .filter_map(|r| r.get("cost").and_then(Value::as_f64))
        .collect();
    let (mean_cost, std_cost) = mean_std(&costs);

    let flags: Vec<bool> = runs
        .iter()
        .filter_map(|r| {
            r.get("success")
                .or_else(|| r.get("is_optimal"))
                .and_then(Value::as_bool)
        })
        .collect();
    let success = if flags.is_empty() {
        None
    } else {
        Some(flags.iter().filter(|&&ok| ok).count() as f64 / flags.len() as f64)
    };

    let quantum: Vec<f64> = runs
        .iter()
        .filter_map(|r| r.pointer("/queries/quantum").and_then(Value::as_f64))
        .collect();
    let mean_quantum_queries = if quantum.is_empty() {
        0.0
    } else {
        quantum.iter().sum::<f64>() / quantum.len() as f64
    };

    Ok(ReportRow {
        file: path.display().to_string(),
        benchmark,
        runs: runs.len(),
        mean_cost,
        std_cost,
        success,
        mean_quantum_queries,
    })
}

fn print_table(rows: &[ReportRow]) {
    let header = ["file", "benchmark", "runs", "mean_cost", "std_cost", "success", "mean_qq"];
    let mut cells: Vec<[String; 7]> = Vec::with_capacity(rows.len());
    for row in rows {
        cells.push([
            row.file.clone(),
            row.benchmark.clone(),
            row.runs.to_string(),
            format!("{:.4}", row.mean_cost),
            format!("{:.4}", row.std_cost),
            row.success
                .map(|s| format!("{:.0}%", 100.0 * s))
                .unwrap_or_else(|| "-".to_string()),
            format!("{:.1}", row.mean_quantum_queries),
        ]);
    }
    let mut widths: Vec<usize> = header.iter().map(|h| h.len()).collect();
    for row in &cells {
        for (w, cell) in widths.iter_mut().zip(row.iter()) {
            *w = (*w).max(cell.len());
        }
    }
    let print_row = |row: &[String]| {
        let line: Vec<String> = row
            .iter()
            .zip(&widths)
            .map(|(cell, w)| format!("{cell:<w$}", w = *w))
            .collect();
        println!("{}", line.join("  "));
    };
    print_row(&header.map(String::from));
    for row in &cells {
        print_row(row.as_slice());
    }
}
