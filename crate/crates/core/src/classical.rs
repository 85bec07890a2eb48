//! Classical references the simulated search is validated against:
//! exhaustive minimization, dynamic-programming shortest paths, an
//! exhaustive receding-horizon baseline, and small fitting/reporting
//! helpers for query-count analysis.

use serde::{Deserialize, Serialize};

use crate::benchmarks::Benchmark;
use crate::dynamics::StaticGraph;
use crate::encoding::FixedPointEncoding;
use crate::error::{Error, Result};
use crate::solver::{solve, ControlTask, SolverOptions, TrajectoryResult};
use crate::statevector::DEFAULT_QUBIT_CAP;

/// Outcome of an exhaustive scan.
#[derive(Debug, Clone, Serialize)]
pub struct BruteForceResult {
    /// First index attaining the minimum.
    pub index: u64,
    pub value: f64,
    /// Objective evaluations performed — always 2^m.
    pub evaluations: u64,
}

/// Scans every basis index and returns the first minimizer. This is the
/// ground truth the probabilistic search is checked against; its
/// evaluation count is the classical query cost of certainty.
pub fn brute_force_min(objective: impl Fn(u64) -> f64, qubits: u32) -> Result<BruteForceResult> {
    if qubits == 0 || qubits > DEFAULT_QUBIT_CAP {
        return Err(Error::Resource { qubits, cap: DEFAULT_QUBIT_CAP });
    }
    let n = 1u64 << qubits;
    let mut best_index = 0u64;
    let mut best_value = f64::INFINITY;
    for index in 0..n {
        let value = objective(index);
        if !value.is_finite() {
            return Err(Error::Objective { index });
        }
        if value < best_value {
            best_value = value;
            best_index = index;
        }
    }
    Ok(BruteForceResult { index: best_index, value: best_value, evaluations: n })
}

/// Exact minimum-cost source→sink path by backward induction over the
/// (validated acyclic) graph. Negative edge weights are fine. Ties prefer
/// the earlier edge in name order.
pub fn dp_shortest_path(graph: &StaticGraph) -> Result<(Vec<usize>, f64)> {
    let n = graph.node_count();
    // Nodes in reverse topological order: every edge target is finished
    // before its source. Rebuild the order locally from the adjacency.
    let order = {
        let mut visited = vec![false; n];
        let mut post = Vec::with_capacity(n);
        for start in 0..n {
            if visited[start] {
                continue;
            }
            let mut stack = vec![(start, 0usize)];
            visited[start] = true;
            while let Some((node, edge)) = stack.pop() {
                if edge < graph.outgoing(node).len() {
                    stack.push((node, edge + 1));
                    let next = graph.outgoing(node)[edge].0;
                    if !visited[next] {
                        visited[next] = true;
                        stack.push((next, 0));
                    }
                } else {
                    post.push(node);
                }
            }
        }
        post // post-order: targets before sources
    };

    let mut cost_to_sink = vec![f64::INFINITY; n];
    let mut best_next: Vec<Option<usize>> = vec![None; n];
    cost_to_sink[graph.sink()] = 0.0;
    for &node in &order {
        if node == graph.sink() {
            continue;
        }
        for &(to, weight) in graph.outgoing(node) {
            let through = weight + cost_to_sink[to];
            if through < cost_to_sink[node] {
                cost_to_sink[node] = through;
                best_next[node] = Some(to);
            }
        }
    }

    let total = cost_to_sink[graph.source()];
    if !total.is_finite() {
        return Err(Error::Graph(format!(
            "sink '{}' is unreachable from source '{}'",
            graph.node_name(graph.sink()),
            graph.node_name(graph.source())
        )));
    }
    let mut path = vec![graph.source()];
    let mut node = graph.source();
    while node != graph.sink() {
        node = best_next[node].expect("finite cost implies a next hop");
        path.push(node);
    }
    Ok((path, total))
}

/// The classical control baseline: the identical receding-horizon loop,
/// with every window minimized by exhaustive scan instead of amplified
/// search. Costs 2^(window bits) classical queries per window.
pub fn classical_mpc_baseline(
    task: &ControlTask<'_>,
    options: &SolverOptions,
) -> Result<TrajectoryResult> {
    let exhaustive = SolverOptions { exhaustive: true, ..options.clone() };
    solve(task, &exhaustive)
}

/// Ordinary least squares fit y = slope·x + intercept.
#[derive(Debug, Clone, Serialize)]
pub struct LinearFit {
    pub slope: f64,
    pub intercept: f64,
    pub r_squared: f64,
}

/// Fits a line through the points, with the coefficient of determination.
pub fn linear_fit(xs: &[f64], ys: &[f64]) -> Result<LinearFit> {
    if xs.len() != ys.len() || xs.len() < 2 {
        return Err(Error::Config(format!(
            "linear fit needs two or more paired points, got {} and {}",
            xs.len(),
            ys.len()
        )));
    }
    let n = xs.len() as f64;
    let mean_x = xs.iter().sum::<f64>() / n;
    let mean_y = ys.iter().sum::<f64>() / n;
    let mut sxx = 0.0;
    let mut sxy = 0.0;
    for (x, y) in xs.iter().zip(ys) {
        sxx += (x - mean_x) * (x - mean_x);
        sxy += (x - mean_x) * (y - mean_y);
    }
    if sxx == 0.0 {
        return Err(Error::Config("linear fit needs at least two distinct x values".into()));
    }
    let slope = sxy / sxx;
    let intercept = mean_y - slope * mean_x;
    let mut ss_res = 0.0;
    let mut ss_tot = 0.0;
    for (x, y) in xs.iter().zip(ys) {
        let predicted = slope * x + intercept;
        ss_res += (y - predicted) * (y - predicted);
        ss_tot += (y - mean_y) * (y - mean_y);
    }
    let r_squared = if ss_tot == 0.0 { 1.0 } else { 1.0 - ss_res / ss_tot };
    Ok(LinearFit { slope, intercept, r_squared })
}

/// How far a fixed query budget stretches, classically versus amplified.
///
/// Spending budget 𝒬 across H planning stages affords
/// floor(log2(𝒬)/H) bits of control resolution per stage when every
/// candidate costs one classical query, but floor(2·log2(𝒬)/H) bits when
/// a stage of 2^M candidates costs ~2^(M/2) amplified iterations — the
/// search doubles the affordable bit depth, i.e. squares the attainable
/// resolution.
#[derive(Debug, Clone, Serialize)]
pub struct PrecisionReport {
    pub query_budget: u64,
    pub horizon: usize,
    pub classical_bits: u32,
    pub quantum_bits: u32,
    /// Grid resolution 2^-bits on a unit interval.
    pub classical_resolution: f64,
    pub quantum_resolution: f64,
    /// Whether the bit depths land exactly on the 2x relation (true
    /// whenever H divides log2 of the budget).
    pub doubling_exact: bool,
}

pub fn precision_report(query_budget: u64, horizon: usize) -> Result<PrecisionReport> {
    if query_budget < 2 {
        return Err(Error::Config("query budget must be at least 2".into()));
    }
    if horizon == 0 {
        return Err(Error::Config("horizon must be at least 1".into()));
    }
    let log_budget = (query_budget as f64).log2();
    let classical_bits = (log_budget / horizon as f64).floor() as u32;
    let quantum_bits = (2.0 * log_budget / horizon as f64).floor() as u32;
    Ok(PrecisionReport {
        query_budget,
        horizon,
        classical_bits,
        quantum_bits,
        classical_resolution: 0.5f64.powi(classical_bits as i32),
        quantum_resolution: 0.5f64.powi(quantum_bits as i32),
        doubling_exact: quantum_bits == 2 * classical_bits,
    })
}

/// One requested cell of a query-scaling sweep: task length, window
/// length, and bits per input channel.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ProbeCell {
    pub total_steps: usize,
    pub n_c: usize,
    pub bits: u32,
}

/// Measured ledger totals for one sweep cell, averaged over its seeds.
#[derive(Debug, Clone, Serialize)]
pub struct ProbeRow {
    pub total_steps: usize,
    pub n_c: usize,
    pub bits: u32,
    /// Seeds that ran to completion.
    pub runs: usize,
    pub mean_quantum_queries: f64,
    pub mean_classical_queries: f64,
    /// Quantum plus classical.
    pub mean_total_queries: f64,
    pub mean_cost: f64,
    /// Why the cell (or some of its seeds) failed, when any did.
    pub error: Option<String>,
}

/// Runs the full solver once per (cell, seed) on variants of `bench` and
/// records the ledger totals — the measurement behind the query-scaling
/// tables. A cell whose configuration cannot run (say, a window register
/// past the statevector cap) is recorded with its error instead of
/// failing the sweep.
pub fn complexity_probe(bench: &Benchmark, cells: &[ProbeCell], seeds: &[u64]) -> Vec<ProbeRow> {
    cells
        .iter()
        .map(|cell| {
            let mut row = ProbeRow {
                total_steps: cell.total_steps,
                n_c: cell.n_c,
                bits: cell.bits,
                runs: 0,
                mean_quantum_queries: 0.0,
                mean_classical_queries: 0.0,
                mean_total_queries: 0.0,
                mean_cost: 0.0,
                error: None,
            };
            let encoding = match FixedPointEncoding::new(
                bench.encoding.u_min().clone(),
                bench.encoding.u_max().clone(),
                cell.bits,
            ) {
                Ok(encoding) => encoding,
                Err(err) => {
                    row.error = Some(err.to_string());
                    return row;
                }
            };
            let mut variant = bench.clone();
            variant.encoding = encoding;
            variant.total_steps = cell.total_steps;
            variant.options.n_c = cell.n_c;
            variant.options.n_p = bench.options.n_p.map(|h| h.max(cell.n_c));

            let (mut quantum, mut classical, mut cost) = (0.0, 0.0, 0.0);
            for &seed in seeds {
                match variant.solve_seeded(seed) {
                    Ok(result) => {
                        let ledger = result.combined_ledger();
                        quantum += ledger.quantum_queries as f64;
                        classical += ledger.classical_queries as f64;
                        cost += result.total_cost;
                        row.runs += 1;
                    }
                    Err(err) => {
                        if row.error.is_none() {
                            row.error = Some(err.to_string());
                        }
                    }
                }
            }
            if row.runs > 0 {
                let n = row.runs as f64;
                row.mean_quantum_queries = quantum / n;
                row.mean_classical_queries = classical / n;
                row.mean_total_queries = (quantum + classical) / n;
                row.mean_cost = cost / n;
            }
            row
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dynamics::{make_double_integrator, DiscreteSystem};
    use crate::encoding::{trajectory_cost, CostWeights, FixedPointEncoding};
    use approx::assert_abs_diff_eq;
    use nalgebra::DVector;

    #[test]
    fn zero_weights_give_a_zero_cost_baseline() {
        let sys = make_double_integrator(0.1);
        let weights = CostWeights::diagonal(&[0.0, 0.0], &[0.0], &[0.0, 0.0]).unwrap();
        let encoding = FixedPointEncoding::scalar(-1.0, 1.0, 2).unwrap();
        let task = ControlTask {
            system: &sys,
            weights: &weights,
            encoding: &encoding,
            x0: DVector::zeros(2),
            x_ref: DVector::from_vec(vec![1.0, 0.0]),
            x_goal: DVector::from_vec(vec![1.0, 0.0]),
            total_steps: 5,
        };
        let options = SolverOptions { n_c: 2, ..SolverOptions::default() };
        let result = classical_mpc_baseline(&task, &options).unwrap();
        assert_eq!(result.total_cost, 0.0);
    }

    #[test]
    fn one_bit_single_step_baseline_is_greedy_bang_bang() {
        // N_c = 1 with a 1-bit input leaves two candidate forces per
        // window; the exhaustive baseline must pick, at every step, the
        // one whose repeat-to-horizon rollout is cheaper. Reproduce that
        // rule by hand and compare the applied sequence.
        let sys = make_double_integrator(0.1);
        let weights = CostWeights::diagonal(&[1.0, 0.2], &[0.05], &[80.0, 15.0]).unwrap();
        let encoding = FixedPointEncoding::scalar(-1.0, 1.0, 1).unwrap();
        let total = 3usize;
        let task = ControlTask {
            system: &sys,
            weights: &weights,
            encoding: &encoding,
            x0: DVector::zeros(2),
            x_ref: DVector::from_vec(vec![1.0, 0.0]),
            x_goal: DVector::from_vec(vec![1.0, 0.0]),
            total_steps: total,
        };
        let options =
            SolverOptions { n_c: 1, local_stage: false, ..SolverOptions::default() };
        let result = classical_mpc_baseline(&task, &options).unwrap();

        // Hand simulation: windows at t = 0 and 1, then the tail repeats
        // the final window's choice.
        let mut expected = Vec::new();
        let mut x = task.x0.clone();
        for t in 0..total - 1 {
            let horizon = total - t;
            let mut best = (f64::INFINITY, 0.0);
            for &u in &[-1.0, 1.0] {
                let blocks = vec![DVector::from_vec(vec![u])];
                let cost = trajectory_cost(
                    &sys, &weights, &x, &blocks, &task.x_ref, &task.x_goal, horizon,
                )
                .unwrap();
                if cost < best.0 {
                    best = (cost, u);
                }
            }
            expected.push(best.1);
            x = sys.step(&x, &DVector::from_vec(vec![best.1]));
        }
        expected.push(*expected.last().unwrap());

        let applied: Vec<f64> = result.controls.iter().map(|u| u[0]).collect();
        assert_eq!(applied, expected);
        assert!(applied.iter().all(|u| u.abs() == 1.0));
    }

    #[test]
    fn brute_force_finds_minimum_and_counts_evaluations() {
        let result = brute_force_min(|i| (i as f64 - 5.0).powi(2), 3).unwrap();
        assert_eq!(result.index, 5);
        assert_eq!(result.value, 0.0);
        assert_eq!(result.evaluations, 8);
    }

    #[test]
    fn brute_force_ties_break_to_the_first_index() {
        let result = brute_force_min(|i| if i == 2 || i == 6 { 0.0 } else { 1.0 }, 3).unwrap();
        assert_eq!(result.index, 2);
    }

    #[test]
    fn brute_force_rejects_non_finite_values() {
        let result = brute_force_min(|i| if i == 1 { f64::INFINITY } else { 0.0 }, 2);
        assert!(matches!(result, Err(Error::Objective { index: 1 })));
    }

    #[test]
    fn dp_recovers_the_optimal_path_on_the_builtin_graph() {
        let graph = StaticGraph::builtin();
        let (path, cost) = dp_shortest_path(&graph).unwrap();
        assert_abs_diff_eq!(cost, 18.0, epsilon = 1e-12);
        assert_eq!(graph.path_display(&path), "a->d->e->f->g->h");
    }

    #[test]
    fn dp_agrees_with_exhaustive_path_enumeration() {
        let graph = StaticGraph::builtin();
        let ensemble = graph.enumerate().unwrap();
        let (_, dp_cost) = dp_shortest_path(&graph).unwrap();
        assert_abs_diff_eq!(dp_cost, ensemble.min_cost(), epsilon = 1e-12);
    }

    #[test]
    fn dp_errors_on_unreachable_sink() {
        let text = r#"{
            "nodes": ["a", "b", "c"],
            "edges": [["b", "c", 1.0]],
            "source": "a",
            "sink": "c"
        }"#;
        let graph = StaticGraph::from_json(text).unwrap();
        assert!(matches!(dp_shortest_path(&graph), Err(Error::Graph(_))));
    }

    #[test]
    fn linear_fit_recovers_an_exact_line() {
        let xs = [1.0, 2.0, 3.0, 4.0];
        let ys = [2.5, 4.5, 6.5, 8.5];
        let fit = linear_fit(&xs, &ys).unwrap();
        assert_abs_diff_eq!(fit.slope, 2.0, epsilon = 1e-12);
        assert_abs_diff_eq!(fit.intercept, 0.5, epsilon = 1e-12);
        assert_abs_diff_eq!(fit.r_squared, 1.0, epsilon = 1e-12);
    }

    #[test]
    fn linear_fit_validates_input() {
        assert!(linear_fit(&[1.0], &[2.0]).is_err());
        assert!(linear_fit(&[1.0, 2.0], &[2.0]).is_err());
        assert!(linear_fit(&[1.0, 1.0], &[1.0, 2.0]).is_err());
    }

    #[test]
    fn precision_report_doubles_bit_depth_on_divisible_budgets() {
        // log2(4096) = 12, horizon 6: 2 bits classical, 4 bits amplified.
        let report = precision_report(4096, 6).unwrap();
        assert_eq!(report.classical_bits, 2);
        assert_eq!(report.quantum_bits, 4);
        assert!(report.doubling_exact);
        assert_abs_diff_eq!(report.classical_resolution, 0.25, epsilon = 1e-15);
        assert_abs_diff_eq!(report.quantum_resolution, 0.0625, epsilon = 1e-15);

        // log2(1024) = 10, horizon 4: floor(2.5) = 2 vs floor(5) = 5 —
        // rounding breaks the exact relation.
        let uneven = precision_report(1024, 4).unwrap();
        assert_eq!(uneven.classical_bits, 2);
        assert_eq!(uneven.quantum_bits, 5);
        assert!(!uneven.doubling_exact);
    }

    #[test]
    fn probe_queries_grow_roughly_linearly_with_task_length() {
        let bench = Benchmark::double_integrator();
        let cells: Vec<ProbeCell> = [10, 20, 40]
            .iter()
            .map(|&t| ProbeCell { total_steps: t, n_c: 2, bits: 2 })
            .collect();
        let seeds: Vec<u64> = (0..10).collect();
        let rows = complexity_probe(&bench, &cells, &seeds);
        assert!(rows.iter().all(|r| r.error.is_none() && r.runs == 10));
        assert!(rows[0].mean_total_queries < rows[1].mean_total_queries);
        assert!(rows[1].mean_total_queries < rows[2].mean_total_queries);
        // Doubling the task length should roughly double the work; leave a
        // wide band for search randomness.
        let ratio = rows[2].mean_total_queries / rows[0].mean_total_queries;
        assert!((2.0..8.0).contains(&ratio), "T-quadrupling query ratio {ratio}");
    }

    #[test]
    fn probe_monolithic_cells_grow_with_register_width() {
        // One window spanning the whole task: quantum work should track
        // the square root of the window's search-space size, i.e. roughly
        // double per extra step at two bits per step.
        let mut bench = Benchmark::double_integrator();
        bench.options.local_stage = false;
        let cells: Vec<ProbeCell> = [2, 3, 4]
            .iter()
            .map(|&t| ProbeCell { total_steps: t, n_c: t, bits: 2 })
            .collect();
        let seeds: Vec<u64> = (0..30).collect();
        let rows = complexity_probe(&bench, &cells, &seeds);
        assert!(rows.iter().all(|r| r.error.is_none() && r.runs == 30));
        for pair in rows.windows(2) {
            let ratio = pair[1].mean_quantum_queries / pair[0].mean_quantum_queries;
            assert!(
                (1.3..3.2).contains(&ratio),
                "per-step quantum growth {ratio} outside the √-space band"
            );
        }
    }

    #[test]
    fn probe_records_failing_cells_instead_of_aborting() {
        let bench = Benchmark::double_integrator();
        let cells = [
            ProbeCell { total_steps: 10, n_c: 2, bits: 2 },
            // 8 steps × 4 bits = 32 window qubits: past the register cap.
            ProbeCell { total_steps: 10, n_c: 8, bits: 4 },
        ];
        let rows = complexity_probe(&bench, &cells, &[0, 1]);
        assert!(rows[0].error.is_none() && rows[0].runs == 2);
        assert!(rows[1].error.is_some() && rows[1].runs == 0);
    }
}
