//! Artifact emission: run summaries, aggregate statistics, and the
//! shared JSON/CSV plumbing.
//!
//! Every summary is a typed struct serialized with a fixed field order,
//! so two runs with the same configuration and seed produce
//! byte-identical files — except for the `timings` block, which is
//! deliberately the last top-level key so consumers can strip it and
//! compare the remainder verbatim.

use std::path::{Path, PathBuf};
use std::time::Instant;

use quantgraph_core::gas::QueryLedger;
use serde::{Deserialize, Serialize};

use crate::config::ConfigEcho;
use crate::errors::CliError;

pub const SUMMARY_SCHEMA_VERSION: u32 = 1;
pub const SOLVER_VERSION: &str = env!("CARGO_PKG_VERSION");

/// Wall-clock accounting. Always the last block of a summary; the only
/// part of the file expected to differ between identical reruns.
#[derive(Debug, Clone, Default, Serialize, Deserialize)]
pub struct Timings {
    pub total_seconds: f64,
    pub per_run_seconds: Vec<f64>,
}

/// Stopwatch that fills a [`Timings`] block.
pub struct Stopwatch {
    start: Instant,
    laps: Vec<f64>,
}

impl Stopwatch {
    pub fn start() -> Self {
        Stopwatch { start: Instant::now(), laps: Vec::new() }
    }

    pub fn lap(&mut self, seconds: f64) {
        self.laps.push(seconds);
    }

    pub fn finish(self) -> Timings {
        Timings {
            total_seconds: self.start.elapsed().as_secs_f64(),
            per_run_seconds: self.laps,
        }
    }
}

/// Top-level summary document: provenance, the resolved configuration,
/// one record per seeded run, and (last) the timing block.
#[derive(Debug, Serialize)]
pub struct Summary<R: Serialize> {
    pub schema_version: u32,
    pub solver_version: &'static str,
    pub benchmark: String,
    pub config: ConfigEcho,
    pub runs: Vec<R>,
    pub timings: Timings,
}

impl<R: Serialize> Summary<R> {
    pub fn new(benchmark: &str, config: ConfigEcho, runs: Vec<R>, timings: Timings) -> Self {
        Summary {
            schema_version: SUMMARY_SCHEMA_VERSION,
            solver_version: SOLVER_VERSION,
            benchmark: benchmark.to_string(),
            config,
            runs,
            timings,
        }
    }
}

/// Slim, serializable view of a work ledger (the per-probe breakdown is
/// omitted: it is bulky and reconstructible by rerunning the seed).
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct QueriesRecord {
    /// Applied search iterations (oracle + diffusion pairs).
    pub quantum: u64,
    /// Objective evaluations the algorithm requested.
    pub classical: u64,
    pub measurements: u64,
    pub improvements: u64,
    pub stalled_sweeps: u64,
}

impl From<&QueryLedger> for QueriesRecord {
    fn from(ledger: &QueryLedger) -> Self {
        QueriesRecord {
            quantum: ledger.quantum_queries,
            classical: ledger.classical_queries,
            measurements: ledger.measurements,
            improvements: ledger.improvements,
            stalled_sweeps: ledger.stalled_sweeps,
        }
    }
}

/// Aggregates over one solver's seeded runs.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SolverStats {
    pub mean_cost: f64,
    /// Population standard deviation of per-run costs.
    pub std_cost: f64,
    /// Fraction of runs meeting the benchmark's success test (goal
    /// reached, optimum found, ...); absent where no such test exists.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub success_rate: Option<f64>,
    pub mean_quantum_queries: f64,
    pub mean_classical_queries: f64,
}

impl SolverStats {
    pub fn from_runs(
        costs: &[f64],
        successes: Option<&[bool]>,
        queries: &[QueriesRecord],
    ) -> Self {
        let (mean_cost, std_cost) = mean_std(costs);
        let n = queries.len().max(1) as f64;
        SolverStats {
            mean_cost,
            std_cost,
            success_rate: successes.map(|s| {
                s.iter().filter(|&&ok| ok).count() as f64 / s.len().max(1) as f64
            }),
            mean_quantum_queries: queries.iter().map(|q| q.quantum as f64).sum::<f64>() / n,
            mean_classical_queries: queries.iter().map(|q| q.classical as f64).sum::<f64>() / n,
        }
    }
}

/// Aggregate statistics document, with an optional classical-baseline
/// block when the run was asked to compare solvers.
#[derive(Debug, Serialize)]
pub struct Stats {
    pub schema_version: u32,
    pub solver_version: &'static str,
    pub benchmark: String,
    pub runs: usize,
    pub quantum: SolverStats,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub classical: Option<SolverStats>,
}

/// Mean and population standard deviation; (0, 0) on an empty slice.
pub fn mean_std(values: &[f64]) -> (f64, f64) {
    if values.is_empty() {
        return (0.0, 0.0);
    }
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n;
    (mean, var.sqrt())
}

/// Creates the output directory (and parents) if needed.
pub fn ensure_out_dir(dir: &Path) -> Result<(), CliError> {
    std::fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))
}

/// Writes pretty-printed JSON with a trailing newline.
pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<(), CliError> {
    let mut text = serde_json::to_string_pretty(value)
        .map_err(|e| CliError::Config(format!("serializing {}: {e}", path.display())))?;
    text.push('\n');
    std::fs::write(path, text).map_err(|e| CliError::io(path, e))
}

pub fn summary_path(out: &Path, key: &str) -> PathBuf {
    out.join(format!("{key}-summary.json"))
}

pub fn stats_path(out: &Path, key: &str) -> PathBuf {
    out.join(format!("{key}-stats.json"))
}

/// Per-seed trajectory table for control benchmarks.
pub fn trajectory_csv_path(out: &Path, key: &str, seed: u64) -> PathBuf {
    out.join(format!("{key}-run-{seed}.csv"))
}

/// One-row-per-run table for graph and QUBO benchmarks.
pub fn runs_csv_path(out: &Path, key: &str) -> PathBuf {
    out.join(format!("{key}-runs.csv"))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn mean_std_is_the_population_statistic() {
        let (mean, std) = mean_std(&[2.0, 4.0, 4.0, 4.0, 5.0, 5.0, 7.0, 9.0]);
        assert!((mean - 5.0).abs() < 1e-12);
        assert!((std - 2.0).abs() < 1e-12);
        assert_eq!(mean_std(&[]), (0.0, 0.0));
        assert_eq!(mean_std(&[3.5]).1, 0.0);
    }

    #[test]
    fn timings_serialize_last_in_a_summary() {
        let echo = crate::config::ConfigEcho {
            benchmark: "x".into(),
            runs: 1,
            seed: 0,
            nc: None,
            np: None,
            mloc: None,
            mglob: None,
            horizon: None,
            local_stage: None,
            compare_classical: false,
            gas: Default::default(),
        };
        let summary = Summary::new("x", echo, vec![1u32], Timings::default());
        let text = serde_json::to_string(&summary).unwrap();
        let timings_at = text.find("\"timings\"").unwrap();
        let runs_at = text.find("\"runs\"").unwrap();
        assert!(timings_at > runs_at, "timings must be the last block: {text}");
    }
}
