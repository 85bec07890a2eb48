//! Benchmark runners behind the problem subcommands: closed-loop control
//! tasks, the static path-planning graph, and QUBO problem files.
//!
//! Every runner follows the same shape: resolve settings, dispatch the
//! seeded repetitions to the worker pool, collect records in seed order,
//! then emit a summary JSON, a stats JSON, and per-family CSV tables.

use std::path::Path;
use std::time::Instant;

use quantgraph_core::benchmarks::Benchmark;
use quantgraph_core::classical::brute_force_min;
use quantgraph_core::dynamics::StaticGraph;
use quantgraph_core::encoding::QuboProblem;
use quantgraph_core::gas::{grover_min, GasConfig};
use quantgraph_core::solver::{solve_static_graph, TrajectoryResult};
use rayon::prelude::*;
use serde::Serialize;

use crate::config::{CommonArgs, Settings};
use crate::errors::CliError;
use crate::output::{
    self, QueriesRecord, SolverStats, Stats, Stopwatch, Summary, Timings,
};

/// Sizes the global worker pool: QUANTGRAPH_THREADS beats the flag, and 0
/// (or nothing) means one worker per logical core.
pub fn init_thread_pool(settings: &Settings) -> Result<(), CliError> {
    let threads = settings.thread_count()?;
    let mut builder = rayon::ThreadPoolBuilder::new();
    if threads > 0 {
        builder = builder.num_threads(threads);
    }
    if let Err(err) = builder.build_global() {
        // Harmless: the pool can only be sized once per process.
        log::warn!("worker pool was already initialized: {err}");
    }
    Ok(())
}

fn warn_on_unused_qubo_path(settings: &Settings) {
    if settings.qubo_path.is_some() {
        log::warn!(
            "config key 'qubo_path' does not apply to '{}'; ignoring it",
            settings.benchmark
        );
    }
}

// ---------------------------------------------------------------------------
// Closed-loop control benchmarks (double-integrator, cartpole)
// ---------------------------------------------------------------------------

/// One seeded closed-loop run.
#[derive(Debug, Serialize)]
pub struct ControlRunRecord {
    pub seed: u64,
    /// Realized trajectory cost (running + input + terminal).
    pub cost: f64,
    /// Whether the run met the benchmark's goal and excursion criteria.
    pub success: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub warm_start_cost: Option<f64>,
    /// Componentwise |final cost-state − goal|.
    pub goal_error: Vec<f64>,
    pub final_state: Vec<f64>,
    pub fallback_windows: u64,
    pub clamped_steps: u64,
    /// Incumbent threshold after each window; nonincreasing.
    pub threshold_trace: Vec<f64>,
    pub queries: QueriesRecord,
}

fn control_record(bench: &Benchmark, seed: u64, result: &TrajectoryResult) -> ControlRunRecord {
    ControlRunRecord {
        seed,
        cost: result.total_cost,
        success: bench.success(result),
        warm_start_cost: result.warm_start_cost,
        goal_error: bench.goal_error(result).iter().copied().collect(),
        final_state: result
            .states
            .last()
            .expect("a trajectory has at least x0")
            .iter()
            .copied()
            .collect(),
        fallback_windows: result.fallback_windows,
        clamped_steps: result.clamped_steps,
        threshold_trace: result.threshold_trace.clone(),
        queries: QueriesRecord::from(&result.combined_ledger()),
    }
}

/// Cumulative cost after each trajectory row: stage costs through step t,
/// plus the terminal cost on the final row — so the last entry is the
/// run's total cost.
fn running_costs(bench: &Benchmark, result: &TrajectoryResult) -> Vec<f64> {
    let sys = bench.system.as_dyn();
    let weights = &bench.weights;
    let mut running = Vec::with_capacity(result.states.len());
    let mut total = 0.0;
    for (t, x) in result.states.iter().enumerate() {
        if t < result.controls.len() {
            let dev = sys.cost_state(x) - &bench.x_ref;
            total += (dev.transpose() * weights.q_state() * &dev)[(0, 0)];
            let u = &result.controls[t];
            total += (u.transpose() * weights.r_input() * u)[(0, 0)];
        } else {
            let dev = sys.cost_state(x) - &bench.x_goal;
            total += (dev.transpose() * weights.p_terminal() * &dev)[(0, 0)];
        }
        running.push(total);
    }
    running
}

/// Writes one trajectory as CSV: time index, state components, control
/// components (empty on the terminal row), cumulative cost.
fn write_trajectory_csv(
    path: &Path,
    bench: &Benchmark,
    result: &TrajectoryResult,
) -> Result<(), CliError> {
    let n_states = bench.x0.len();
    let n_inputs = bench.encoding.u_min().len();
    let mut writer = csv::Writer::from_path(path).map_err(|e| {
        CliError::Io(format!("{}: {e}", path.display()))
    })?;

    let mut header = vec!["t".to_string()];
    header.extend((0..n_states).map(|i| format!("x{i}")));
    header.extend((0..n_inputs).map(|i| format!("u{i}")));
    header.push("running_cost".to_string());
    writer.write_record(&header).map_err(|e| CliError::Io(e.to_string()))?;

    let running = running_costs(bench, result);
    for (t, x) in result.states.iter().enumerate() {
        let mut row = vec![t.to_string()];
        row.extend(x.iter().map(|v| v.to_string()));
        if t < result.controls.len() {
            row.extend(result.controls[t].iter().map(|v| v.to_string()));
        } else {
            row.extend(std::iter::repeat(String::new()).take(n_inputs));
        }
        row.push(running[t].to_string());
        writer.write_record(&row).map_err(|e| CliError::Io(e.to_string()))?;
    }
    writer.flush().map_err(|e| CliError::io(path, e))?;
    Ok(())
}

/// Runs a named control benchmark for the configured seeds and emits its
/// artifacts. `key` is "double-integrator" or "cartpole".
pub fn run_control(key: &str, common: &CommonArgs) -> Result<(), CliError> {
    let settings = Settings::resolve(key, common)?;
    let mut bench = Benchmark::by_name(key)
        .ok_or_else(|| CliError::Config(format!("unknown benchmark '{key}'")))?;
    settings.apply_to_benchmark(&mut bench)?;
    warn_on_unused_qubo_path(&settings);
    init_thread_pool(&settings)?;
    output::ensure_out_dir(&settings.out)?;

    let mut stopwatch = Stopwatch::start();
    let seeds = settings.seeds();
    let outcomes: Vec<(u64, Result<TrajectoryResult, quantgraph_core::Error>, f64)> = seeds
        .par_iter()
        .map(|&seed| {
            let clock = Instant::now();
            let result = bench.solve_seeded(seed);
            (seed, result, clock.elapsed().as_secs_f64())
        })
        .collect();

    let mut records = Vec::with_capacity(outcomes.len());
    let mut results = Vec::with_capacity(outcomes.len());
    for (seed, outcome, seconds) in outcomes {
        let result = outcome?;
        stopwatch.lap(seconds);
        records.push(control_record(&bench, seed, &result));
        results.push((seed, result));
    }

    if settings.format.writes_csv() {
        for (seed, result) in &results {
            let path = output::trajectory_csv_path(&settings.out, key, *seed);
            write_trajectory_csv(&path, &bench, result)?;
        }
    }

    let quantum = SolverStats::from_runs(
        &records.iter().map(|r| r.cost).collect::<Vec<_>>(),
        Some(&records.iter().map(|r| r.success).collect::<Vec<_>>()),
        &records.iter().map(|r| r.queries).collect::<Vec<_>>(),
    );
    let classical = if settings.compare_classical {
        let baseline = bench.solve_classical()?;
        Some(SolverStats::from_runs(
            &[baseline.total_cost],
            Some(&[bench.success(&baseline)]),
            &[QueriesRecord::from(&baseline.combined_ledger())],
        ))
    } else {
        None
    };

    let successes = records.iter().filter(|r| r.success).count();
    let echo = settings.echo(Some(&bench));
    let timings = stopwatch.finish();
    emit_common_artifacts(&settings, key, echo, records, timings, quantum.clone(), classical)?;

    println!(
        "{key}: {} runs, mean cost {:.4} (std {:.4}), {successes}/{} successful",
        settings.runs, quantum.mean_cost, quantum.std_cost, settings.runs
    );
    println!("artifacts in {}", settings.out.display());
    Ok(())
}

// ---------------------------------------------------------------------------
// Static path-planning graph
// ---------------------------------------------------------------------------

/// One seeded path search on the static graph.
#[derive(Debug, Serialize)]
pub struct GraphRunRecord {
    pub seed: u64,
    /// Cost of the returned path.
    pub cost: f64,
    /// "a->d->e->h" rendering of the returned path.
    pub path: String,
    pub is_optimal: bool,
    pub optimal_cost: f64,
    pub warm_cost: f64,
    pub warm_path: String,
    /// Fraction of valid paths the warm threshold prunes.
    pub pruned_fraction: f64,
    /// Fraction of register bitstrings marked below the warm threshold.
    pub marked_fraction: f64,
    pub qubits: u32,
    pub fallback_to_warm: bool,
    pub threshold_trace: Vec<f64>,
    pub queries: QueriesRecord,
}

/// Flat CSV projection of [`GraphRunRecord`].
#[derive(Debug, Serialize)]
struct GraphCsvRow {
    seed: u64,
    cost: f64,
    optimal_cost: f64,
    is_optimal: bool,
    warm_cost: f64,
    pruned_fraction: f64,
    marked_fraction: f64,
    fallback_to_warm: bool,
    quantum_queries: u64,
    classical_queries: u64,
    path: String,
}

/// Runs the path-planning benchmark. A custom graph file may be given;
/// the built-in eight-node instance runs otherwise.
pub fn run_graph(graph_path: Option<&Path>, common: &CommonArgs) -> Result<(), CliError> {
    let key = "static-graph";
    let settings = Settings::resolve(key, common)?;
    warn_on_unused_qubo_path(&settings);
    init_thread_pool(&settings)?;
    output::ensure_out_dir(&settings.out)?;

    let graph = match graph_path {
        Some(path) => {
            let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
            StaticGraph::from_json(&text)
                .map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?
        }
        None => StaticGraph::builtin(),
    };
    let gas = settings.gas.apply(GasConfig::default());

    let mut stopwatch = Stopwatch::start();
    let seeds = settings.seeds();
    let outcomes: Vec<(u64, Result<_, quantgraph_core::Error>, f64)> = seeds
        .par_iter()
        .map(|&seed| {
            let clock = Instant::now();
            let result = solve_static_graph(&graph, seed, &gas);
            (seed, result, clock.elapsed().as_secs_f64())
        })
        .collect();

    let mut records = Vec::with_capacity(outcomes.len());
    for (seed, outcome, seconds) in outcomes {
        let result = outcome?;
        stopwatch.lap(seconds);
        records.push(GraphRunRecord {
            seed,
            cost: result.cost,
            path: result.display,
            is_optimal: result.is_optimal,
            optimal_cost: result.optimal_cost,
            warm_cost: result.warm_cost,
            warm_path: result.warm_display,
            pruned_fraction: result.pruned_fraction,
            marked_fraction: result.marked_fraction,
            qubits: result.qubits,
            fallback_to_warm: result.fallback_to_warm,
            threshold_trace: result.threshold_history,
            queries: QueriesRecord::from(&result.ledger),
        });
    }

    if settings.format.writes_csv() {
        let path = output::runs_csv_path(&settings.out, key);
        let mut writer =
            csv::Writer::from_path(&path).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
        for r in &records {
            writer
                .serialize(GraphCsvRow {
                    seed: r.seed,
                    cost: r.cost,
                    optimal_cost: r.optimal_cost,
                    is_optimal: r.is_optimal,
                    warm_cost: r.warm_cost,
                    pruned_fraction: r.pruned_fraction,
                    marked_fraction: r.marked_fraction,
                    fallback_to_warm: r.fallback_to_warm,
                    quantum_queries: r.queries.quantum,
                    classical_queries: r.queries.classical,
                    path: r.path.clone(),
                })
                .map_err(|e| CliError::Io(e.to_string()))?;
        }
        writer.flush().map_err(|e| CliError::io(&path, e))?;
    }

    let quantum = SolverStats::from_runs(
        &records.iter().map(|r| r.cost).collect::<Vec<_>>(),
        Some(&records.iter().map(|r| r.is_optimal).collect::<Vec<_>>()),
        &records.iter().map(|r| r.queries).collect::<Vec<_>>(),
    );
    let classical = if settings.compare_classical {
        // Certainty classically means evaluating every path's cost; the
        // exact optimum itself comes from dynamic programming.
        let ensemble = graph.enumerate().map_err(CliError::from)?;
        Some(SolverStats {
            mean_cost: ensemble.min_cost(),
            std_cost: 0.0,
            success_rate: Some(1.0),
            mean_quantum_queries: 0.0,
            mean_classical_queries: ensemble.costs.len() as f64,
        })
    } else {
        None
    };

    let optimal = records.iter().filter(|r| r.is_optimal).count();
    let echo = settings.echo(None);
    let timings = stopwatch.finish();
    let best = records.iter().map(|r| r.cost).fold(f64::INFINITY, f64::min);
    let mean_pruned =
        records.iter().map(|r| r.pruned_fraction).sum::<f64>() / records.len().max(1) as f64;
    emit_common_artifacts(&settings, key, echo, records, timings, quantum, classical)?;

    println!(
        "{key}: {} runs, best cost {best}, {optimal}/{} optimal, mean pruned fraction {mean_pruned:.3}",
        settings.runs, settings.runs
    );
    println!("artifacts in {}", settings.out.display());
    Ok(())
}

// ---------------------------------------------------------------------------
// QUBO problem files
// ---------------------------------------------------------------------------

/// One seeded minimization of a QUBO file.
#[derive(Debug, Serialize)]
pub struct QuboRunRecord {
    pub seed: u64,
    pub cost: f64,
    /// Bit vector of the returned minimizer, packed little-endian.
    pub best_index: u64,
    pub is_optimal: bool,
    pub optimal_cost: f64,
    pub optimal_index: u64,
    pub qubits: u32,
    pub threshold_trace: Vec<f64>,
    pub queries: QueriesRecord,
}

/// Flat CSV projection of [`QuboRunRecord`].
#[derive(Debug, Serialize)]
struct QuboCsvRow {
    seed: u64,
    cost: f64,
    best_index: u64,
    optimal_cost: f64,
    optimal_index: u64,
    is_optimal: bool,
    quantum_queries: u64,
    classical_queries: u64,
}

/// Minimizes the QUBO in `path` for the configured seeds.
pub fn run_qubo(path: &Path, common: &CommonArgs) -> Result<(), CliError> {
    let key = "qubo-file";
    let settings = Settings::resolve(key, common)?;
    if let Some(configured) = &settings.qubo_path {
        if configured != path {
            log::warn!(
                "config names QUBO file {}, but the command line gave {}; using the command line",
                configured.display(),
                path.display()
            );
        }
    }
    init_thread_pool(&settings)?;
    output::ensure_out_dir(&settings.out)?;

    let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
    let problem = QuboProblem::from_json(&text)
        .map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
    let qubits = problem.n() as u32;
    let oracle = brute_force_min(|i| problem.evaluate(i), qubits).map_err(CliError::from)?;
    let gas = settings.gas.apply(GasConfig::default());

    let mut stopwatch = Stopwatch::start();
    let seeds = settings.seeds();
    let outcomes: Vec<(u64, Result<_, quantgraph_core::Error>, f64)> = seeds
        .par_iter()
        .map(|&seed| {
            let clock = Instant::now();
            let config = GasConfig { seed, initial_threshold: None, ..gas.clone() };
            let result = grover_min(|i| problem.evaluate(i), qubits, &config);
            (seed, result, clock.elapsed().as_secs_f64())
        })
        .collect();

    let mut records = Vec::with_capacity(outcomes.len());
    for (seed, outcome, seconds) in outcomes {
        let result = outcome?;
        stopwatch.lap(seconds);
        let (best_index, cost) =
            result.best.expect("a cold-started search always seeds an incumbent");
        let tolerance = 1e-12 * oracle.value.abs().max(1.0);
        records.push(QuboRunRecord {
            seed,
            cost,
            best_index,
            is_optimal: (cost - oracle.value).abs() <= tolerance,
            optimal_cost: oracle.value,
            optimal_index: oracle.index,
            qubits,
            threshold_trace: result.threshold_history,
            queries: QueriesRecord::from(&result.ledger),
        });
    }

    if settings.format.writes_csv() {
        let csv_path = output::runs_csv_path(&settings.out, key);
        let mut writer = csv::Writer::from_path(&csv_path)
            .map_err(|e| CliError::Io(format!("{}: {e}", csv_path.display())))?;
        for r in &records {
            writer
                .serialize(QuboCsvRow {
                    seed: r.seed,
                    cost: r.cost,
                    best_index: r.best_index,
                    optimal_cost: r.optimal_cost,
                    optimal_index: r.optimal_index,
                    is_optimal: r.is_optimal,
                    quantum_queries: r.queries.quantum,
                    classical_queries: r.queries.classical,
                })
                .map_err(|e| CliError::Io(e.to_string()))?;
        }
        writer.flush().map_err(|e| CliError::io(&csv_path, e))?;
    }

    let quantum = SolverStats::from_runs(
        &records.iter().map(|r| r.cost).collect::<Vec<_>>(),
        Some(&records.iter().map(|r| r.is_optimal).collect::<Vec<_>>()),
        &records.iter().map(|r| r.queries).collect::<Vec<_>>(),
    );
    let classical = if settings.compare_classical {
        Some(SolverStats {
            mean_cost: oracle.value,
            std_cost: 0.0,
            success_rate: Some(1.0),
            mean_quantum_queries: 0.0,
            mean_classical_queries: oracle.evaluations as f64,
        })
    } else {
        None
    };

    let optimal = records.iter().filter(|r| r.is_optimal).count();
    let echo = settings.echo(None);
    let timings = stopwatch.finish();
    let mean_cost = quantum.mean_cost;
    emit_common_artifacts(&settings, key, echo, records, timings, quantum, classical)?;

    println!(
        "{key}: {} runs over {qubits} variables, mean cost {mean_cost:.6}, {optimal}/{} optimal",
        settings.runs, settings.runs
    );
    println!("artifacts in {}", settings.out.display());
    Ok(())
}

// ---------------------------------------------------------------------------
// Shared emission
// ---------------------------------------------------------------------------

/// Writes the summary and stats JSON files (when the format asks for
/// JSON).
fn emit_common_artifacts<R: Serialize>(
    settings: &Settings,
    key: &str,
    echo: crate::config::ConfigEcho,
    records: Vec<R>,
    timings: Timings,
    quantum: SolverStats,
    classical: Option<SolverStats>,
) -> Result<(), CliError> {
    if !settings.format.writes_json() {
        return Ok(());
    }
    let summary = Summary::new(key, echo, records, timings);
    output::write_json(&output::summary_path(&settings.out, key), &summary)?;
    let stats = Stats {
        schema_version: output::SUMMARY_SCHEMA_VERSION,
        solver_version: output::SOLVER_VERSION,
        benchmark: key.to_string(),
        runs: settings.runs,
        quantum,
        classical,
    };
    output::write_json(&output::stats_path(&settings.out, key), &stats)?;
    Ok(())
}
