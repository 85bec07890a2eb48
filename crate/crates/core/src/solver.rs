//! The two-stage receding-horizon planner.
//!
//! Stage one (optional, on by default) is a cheap warm start: a single
//! forward pass choosing each step's control block by a one-step
//! minimization — input effort plus terminal-weighted deviation of the
//! *next* state from the goal. The pass is short-sighted on purpose; its
//! job is a feasible trajectory whose total cost seeds the threshold for
//! stage two.
//!
//! Stage two replans at every step: the window of the next N_c control
//! blocks (tail-extended over the prediction horizon) is minimized over
//! all 2^(M·n_u·N_c) encoded candidates, the first block is applied, and
//! the incumbent threshold carries forward — each window's search starts
//! warm at the best total seen so far, which is sound because costs are
//! nonnegative, so the remaining-trajectory objective can only shrink.
//! Linear systems get a closed-form quadratic objective per window
//! ([`synthesize_qubo`]); nonlinear systems evaluate the true rollout.
//!
//! Window minimization is either the amplified search ([`grover_min`]) or
//! an exhaustive scan — the latter is the classical baseline, sharing this
//! exact loop so query counts and trajectories are directly comparable.

use nalgebra::DVector;
use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::dynamics::{clamp_inputs, DiscreteSystem, StaticGraph};
use crate::encoding::{
    expand_tail, synthesize_qubo, trajectory_cost, CostWeights, FixedPointEncoding,
};
use crate::error::{Error, Result};
use crate::gas::{grover_min, marked_fraction, GasConfig, ProbeRecord, QueryLedger};
use crate::seeding::{derive_seed, TAG_FALLBACK, TAG_GLOBAL, TAG_LOCAL, TAG_STANDALONE};

/// A finite-horizon regulation task: drive `system` from `x0` toward
/// `x_goal` over `total_steps` steps, weighting running deviation from
/// `x_ref`, input effort, and terminal deviation from `x_goal`.
pub struct ControlTask<'a> {
    pub system: &'a dyn DiscreteSystem,
    pub weights: &'a CostWeights,
    pub encoding: &'a FixedPointEncoding,
    pub x0: DVector<f64>,
    pub x_ref: DVector<f64>,
    pub x_goal: DVector<f64>,
    pub total_steps: usize,
}

/// Planner tuning.
#[derive(Debug, Clone)]
pub struct SolverOptions {
    /// Control blocks optimized per window.
    pub n_c: usize,
    /// Prediction horizon per window; `None` looks all the way to the end
    /// of the task. Fixed horizons are clipped to the remaining steps.
    pub n_p: Option<usize>,
    /// Run the stage-one warm start.
    pub local_stage: bool,
    /// Bits per input channel for the stage-one per-step search. `None`
    /// reuses the task encoding's bit depth.
    pub local_bits: Option<u32>,
    /// Base seed; every window and stage derives its own child seed.
    pub run_seed: u64,
    /// Search tuning for every minimization (its `seed` and
    /// `initial_threshold` fields are overridden per call).
    pub gas: GasConfig,
    /// Replace the amplified search with an exhaustive scan (classical
    /// baseline).
    pub exhaustive: bool,
}

impl Default for SolverOptions {
    fn default() -> Self {
        Self {
            n_c: 3,
            n_p: None,
            local_stage: true,
            local_bits: None,
            run_seed: 0,
            gas: GasConfig::default(),
            exhaustive: false,
        }
    }
}

/// One planning window's outcome.
#[derive(Debug, Clone, Serialize)]
pub struct WindowRecord {
    /// Step index the window was planned at.
    pub t: usize,
    /// Prediction horizon used.
    pub horizon: usize,
    /// Threshold the search started from.
    pub threshold_in: Option<f64>,
    /// Objective value of the applied candidate.
    pub value: f64,
    /// Whether the search improved on the incoming threshold.
    pub improved: bool,
    /// Whether the stalled-window fallback ran.
    pub fallback: bool,
    pub quantum_queries: u64,
    pub classical_queries: u64,
}

/// Full outcome of a planning run.
#[derive(Debug, Clone)]
pub struct TrajectoryResult {
    /// Visited states, `total_steps + 1` entries starting at `x0`.
    pub states: Vec<DVector<f64>>,
    /// Applied controls, `total_steps` entries.
    pub controls: Vec<DVector<f64>>,
    /// Exact cost of the realized trajectory (running + input + terminal).
    pub total_cost: f64,
    /// Total cost of the stage-one trajectory, when that stage ran.
    pub warm_start_cost: Option<f64>,
    /// Incumbent threshold after each window; nonincreasing.
    pub threshold_trace: Vec<f64>,
    /// Work done by the stage-one warm start.
    pub local_ledger: QueryLedger,
    /// Work done by the stage-two window searches.
    pub global_ledger: QueryLedger,
    /// Windows where the warm search stalled and the fallback sampler ran.
    pub fallback_windows: u64,
    /// Steps where a decoded control had to be clamped (defensive; decoded
    /// controls are in bounds by construction).
    pub clamped_steps: u64,
    /// Per-window details in execution order.
    pub windows: Vec<WindowRecord>,
}

impl TrajectoryResult {
    /// Combined work across both stages.
    pub fn combined_ledger(&self) -> QueryLedger {
        let mut total = self.local_ledger.clone();
        total.absorb(self.global_ledger.clone());
        total
    }
}

/// One window minimization: amplified search with stalled-window fallback,
/// or an exhaustive scan in baseline mode.
struct WindowMin {
    index: u64,
    value: f64,
    improved: bool,
    fallback: bool,
    ledger: QueryLedger,
}

fn minimize_window(
    objective: &dyn Fn(u64) -> f64,
    qubits: u32,
    warm: Option<f64>,
    seed: u64,
    fallback_seed: u64,
    options: &SolverOptions,
) -> Result<WindowMin> {
    if options.exhaustive {
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
        let ledger = QueryLedger { classical_queries: n, ..QueryLedger::default() };
        return Ok(WindowMin {
            index: best_index,
            value: best_value,
            improved: warm.map_or(true, |w| best_value < w),
            fallback: false,
            ledger,
        });
    }

    let config = GasConfig { seed, initial_threshold: warm, ..options.gas.clone() };
    let result = grover_min(objective, qubits, &config)?;
    let mut ledger = result.ledger;
    if let Some((index, value)) = result.best {
        return Ok(WindowMin { index, value, improved: true, fallback: false, ledger });
    }

    // The warm threshold was already at (or below) the window optimum, so
    // no probe could improve on it and there is no candidate to apply.
    // Seed a window-local incumbent with one unamplified measurement, then
    // search again below it — with high probability that recovers the
    // window optimum at the cost of one extra schedule.
    // Routine on cost plateaus (the incumbent window cost often already
    // equals the new window's optimum), hence debug rather than warn.
    log::debug!("window search stalled at threshold {warm:?}; running fallback sampler");
    let mut rng = ChaCha8Rng::seed_from_u64(fallback_seed);
    let sampled = rng.gen_range(0..(1u64 << qubits));
    let sampled_value = objective(sampled);
    if !sampled_value.is_finite() {
        return Err(Error::Objective { index: sampled });
    }
    ledger.measurements += 1;
    ledger.classical_queries += 1;
    ledger.probes.push(ProbeRecord {
        k: 0,
        k_cap: 0,
        threshold: warm,
        value: sampled_value,
        improved: false,
    });
    let rerun_config = GasConfig {
        seed: rng.next_u64(),
        initial_threshold: Some(sampled_value),
        ..options.gas.clone()
    };
    let rerun = grover_min(objective, qubits, &rerun_config)?;
    ledger.absorb(rerun.ledger);
    let (index, value) = match rerun.best {
        Some((index, value)) if value < sampled_value => (index, value),
        _ => (sampled, sampled_value),
    };
    Ok(WindowMin { index, value, improved: false, fallback: true, ledger })
}

fn validate(task: &ControlTask<'_>, options: &SolverOptions) -> Result<()> {
    let nx = task.system.state_dim();
    let nu = task.system.input_dim();
    if task.x0.len() != nx || task.x_ref.len() != nx || task.x_goal.len() != nx {
        return Err(Error::Shape(format!(
            "task states must have dimension {nx}, got x0={}, x_ref={}, x_goal={}",
            task.x0.len(),
            task.x_ref.len(),
            task.x_goal.len()
        )));
    }
    if task.weights.state_dim() != nx || task.weights.input_dim() != nu {
        return Err(Error::Shape(format!(
            "weights are for {}-state/{}-input, system has {nx}/{nu}",
            task.weights.state_dim(),
            task.weights.input_dim()
        )));
    }
    if task.encoding.input_dim() != nu {
        return Err(Error::Shape(format!(
            "encoding covers {} channels, system has {nu}",
            task.encoding.input_dim()
        )));
    }
    if options.local_stage && task.system.as_lti().is_none() {
        return Err(Error::Config(
            "the local warm-start stage supports linear dynamics only; \
             disable it (--no-local-stage) to cold-start nonlinear systems"
                .into(),
        ));
    }
    if options.n_c == 0 {
        return Err(Error::Config("window length N_c must be at least 1".into()));
    }
    if task.total_steps < options.n_c {
        return Err(Error::Config(format!(
            "task needs at least N_c = {} steps, got {}",
            options.n_c, task.total_steps
        )));
    }
    if let Some(n_p) = options.n_p {
        if n_p < options.n_c {
            return Err(Error::Config(format!(
                "prediction horizon ({n_p}) must cover the window ({})",
                options.n_c
            )));
        }
    }
    let window_bits = task.encoding.total_bits(options.n_c);
    if window_bits as u32 > options.gas.qubit_cap {
        return Err(Error::Resource {
            qubits: window_bits as u32,
            cap: options.gas.qubit_cap,
        });
    }
    if let Some(bits) = options.local_bits {
        let local_step_bits = bits.saturating_mul(nu as u32);
        if local_step_bits > options.gas.qubit_cap {
            return Err(Error::Resource { qubits: local_step_bits, cap: options.gas.qubit_cap });
        }
    }
    Ok(())
}

/// Applies `u` (defensively clamped into the encoding box) to the state,
/// checking for divergence. Returns the next state and whether clamping
/// changed anything.
fn apply_step(
    task: &ControlTask<'_>,
    x: &DVector<f64>,
    u: &DVector<f64>,
    step: usize,
) -> Result<(DVector<f64>, DVector<f64>, bool)> {
    let (u, changed) = clamp_inputs(u, task.encoding.u_min(), task.encoding.u_max());
    if changed {
        log::warn!("step {step}: control clamped into the encoding box");
    }
    let next = task.system.step(x, &u);
    if next.iter().any(|v| !v.is_finite()) {
        return Err(Error::Divergence { step });
    }
    Ok((next, u, changed))
}

/// Builds the objective one replanning window minimizes: window register
/// index → predicted cost over `horizon` steps from `x_now`. Linear
/// systems get the closed-form quadratic (no simulation per query);
/// everything else rolls the dynamics out.
fn window_objective<'a>(
    task: &'a ControlTask<'_>,
    x_now: DVector<f64>,
    n_c: usize,
    horizon: usize,
) -> Result<Box<dyn Fn(u64) -> f64 + 'a>> {
    let sys = task.system;
    let enc = task.encoding;
    match sys.as_lti() {
        Some(lin) => {
            let qubo = synthesize_qubo(
                lin,
                task.weights,
                enc,
                &x_now,
                &task.x_ref,
                &task.x_goal,
                n_c,
                horizon,
            )?;
            Ok(Box::new(move |index| qubo.evaluate(index)))
        }
        None => Ok(Box::new(move |index| {
            let blocks = enc.decode_sequence(index, n_c);
            trajectory_cost(
                sys,
                task.weights,
                &x_now,
                &blocks,
                &task.x_ref,
                &task.x_goal,
                horizon,
            )
            .unwrap_or(f64::NAN)
        })),
    }
}

/// Runs the two-stage planner over the whole task.
pub fn solve(task: &ControlTask<'_>, options: &SolverOptions) -> Result<TrajectoryResult> {
    validate(task, options)?;
    let sys = task.system;
    let enc = task.encoding;
    let n_c = options.n_c;
    let total = task.total_steps;

    let mut local_ledger = QueryLedger::default();
    let mut warm_start_cost = None;
    let mut threshold: Option<f64> = None;

    // Stage one: greedy forward pass, one control block per step chosen by
    // input effort plus terminal-weighted next-state deviation. It may run
    // at its own (usually finer) bit depth over the same input box.
    if options.local_stage {
        let local_enc = match options.local_bits {
            Some(bits) => FixedPointEncoding::new(enc.u_min().clone(), enc.u_max().clone(), bits)?,
            None => enc.clone(),
        };
        let local_enc = &local_enc;
        let step_bits = local_enc.bits_per_step() as u32;
        let mut x = task.x0.clone();
        let mut greedy = Vec::with_capacity(total);
        for k in 0..total {
            let x_now = x.clone();
            let objective = move |raw: u64| -> f64 {
                let u = local_enc.decode_step(raw);
                let next = sys.step(&x_now, &u);
                let dev = sys.cost_state(&next) - &task.x_goal;
                (u.transpose() * task.weights.r_input() * &u)[(0, 0)]
                    + (dev.transpose() * task.weights.p_terminal() * &dev)[(0, 0)]
            };
            let outcome = minimize_window(
                &objective,
                step_bits,
                None,
                derive_seed(options.run_seed, TAG_LOCAL, k as u64),
                derive_seed(options.run_seed, TAG_FALLBACK, (total + k) as u64),
                options,
            )?;
            local_ledger.absorb(outcome.ledger);
            let u = local_enc.decode_step(outcome.index);
            let (next, u, _) = apply_step(task, &x, &u, k)?;
            greedy.push(u);
            x = next;
        }
        let tau0 = trajectory_cost(
            sys,
            task.weights,
            &task.x0,
            &greedy,
            &task.x_ref,
            &task.x_goal,
            total,
        )?;
        warm_start_cost = Some(tau0);
        threshold = Some(tau0);
    }

    // Stage two: replan a window at every step, apply its first block.
    // When the window spans the whole task (monolithic mode) there is a
    // single window and every block is applied.
    let window_bits = enc.total_bits(n_c) as u32;
    let mut x = task.x0.clone();
    let mut states = Vec::with_capacity(total + 1);
    states.push(x.clone());
    let mut controls: Vec<DVector<f64>> = Vec::with_capacity(total);
    let mut global_ledger = QueryLedger::default();
    let mut threshold_trace = Vec::new();
    let mut windows = Vec::new();
    let mut fallback_windows = 0u64;
    let mut clamped_steps = 0u64;
    let mut last_blocks: Vec<DVector<f64>> = Vec::new();

    let window_count = (total - n_c).max(1);
    for t in 0..window_count {
        let remaining = total - t;
        let horizon = options.n_p.map_or(remaining, |h| h.min(remaining));

        let objective = window_objective(task, x.clone(), n_c, horizon)?;

        let outcome = minimize_window(
            objective.as_ref(),
            window_bits,
            threshold,
            derive_seed(options.run_seed, TAG_GLOBAL, t as u64),
            derive_seed(options.run_seed, TAG_FALLBACK, t as u64),
            options,
        )?;
        windows.push(WindowRecord {
            t,
            horizon,
            threshold_in: threshold,
            value: outcome.value,
            improved: outcome.improved,
            fallback: outcome.fallback,
            quantum_queries: outcome.ledger.quantum_queries,
            classical_queries: outcome.ledger.classical_queries,
        });
        global_ledger.absorb(outcome.ledger);
        if outcome.fallback {
            fallback_windows += 1;
        }

        last_blocks = enc.decode_sequence(outcome.index, n_c);
        let (next, applied, clamped) = apply_step(task, &x, &last_blocks[0], t)?;
        if clamped {
            clamped_steps += 1;
        }
        controls.push(applied);
        states.push(next.clone());
        x = next;

        threshold = Some(threshold.map_or(outcome.value, |tau| tau.min(outcome.value)));
        threshold_trace.push(threshold.expect("just set"));
    }

    // Finish the trajectory with the rest of the final window (tail policy
    // fills the last step when N_c > 1; a length-1 window just repeats; a
    // monolithic window leaves nothing to repeat).
    let tail_len = total - window_count;
    if tail_len > 0 {
        let tail_source: &[DVector<f64>] =
            if n_c > 1 { &last_blocks[1..] } else { &last_blocks };
        for u in expand_tail(tail_source, tail_len)? {
            let step = controls.len();
            let (next, applied, clamped) = apply_step(task, &x, &u, step)?;
            if clamped {
                clamped_steps += 1;
            }
            controls.push(applied);
            states.push(next.clone());
            x = next;
        }
    }
    debug_assert_eq!(controls.len(), total);

    let total_cost = trajectory_cost(
        sys,
        task.weights,
        &task.x0,
        &controls,
        &task.x_ref,
        &task.x_goal,
        total,
    )?;

    Ok(TrajectoryResult {
        states,
        controls,
        total_cost,
        warm_start_cost,
        threshold_trace,
        local_ledger,
        global_ledger,
        fallback_windows,
        clamped_steps,
        windows,
    })
}

/// Outcome of a path search on a static graph.
#[derive(Debug, Clone, Serialize)]
pub struct GraphRunResult {
    /// Node names of the returned path.
    pub path: Vec<String>,
    /// "a->d->e->h" rendering of the returned path.
    pub display: String,
    pub cost: f64,
    /// Exact optimum from dynamic programming.
    pub optimal_cost: f64,
    pub is_optimal: bool,
    /// Cost and rendering of the greedy warm-start walk.
    pub warm_cost: f64,
    pub warm_display: String,
    /// Fraction of valid paths pruned by the warm threshold (strictly).
    pub pruned_fraction: f64,
    /// Fraction of register bitstrings marked below the warm threshold.
    pub marked_fraction: f64,
    /// Register width used for the path search.
    pub qubits: u32,
    pub ledger: QueryLedger,
    pub threshold_history: Vec<f64>,
    /// Whether the search stalled and the greedy path was returned.
    pub fallback_to_warm: bool,
}

/// Extra idle sweeps granted to the per-node edge searches. On one- and
/// two-qubit registers the marked fraction is often exactly 1/2, where
/// amplification is flat (every probe succeeds with probability 1/2 no
/// matter how many iterations it applies), so reaching the same confidence
/// that the incumbent is the minimum takes more consecutive idle sweeps
/// than on wide registers. Each extra probe costs at most two iterations
/// here, so the budget is essentially free.
const EDGE_SEARCH_STALL_SWEEPS: u32 = 8;

/// Stage-one walk on a graph: at each node with a choice, a single-step
/// amplified search over the outgoing edge weights picks the cheapest next
/// hop (cold-started; each node is searched independently). Returns the
/// walk, its total cost, and the accumulated search ledger.
fn amplified_greedy_walk(
    graph: &StaticGraph,
    run_seed: u64,
    gas: &GasConfig,
) -> Result<(Vec<usize>, f64, QueryLedger)> {
    let mut ledger = QueryLedger::default();
    let mut path = vec![graph.source()];
    let mut cost = 0.0;
    let mut node = graph.source();
    while node != graph.sink() {
        let edges = graph.outgoing(node);
        let pick = match edges.len() {
            0 => {
                return Err(Error::Graph(format!(
                    "greedy walk dead-ends at '{}' before reaching the sink",
                    graph.node_name(node)
                )));
            }
            1 => 0,
            degree => {
                let qubits = degree.next_power_of_two().trailing_zeros().max(1);
                let max_abs = edges.iter().map(|e| e.1.abs()).fold(1.0, f64::max);
                let sentinel = 1000.0 * max_abs;
                let objective =
                    |index: u64| edges.get(index as usize).map_or(sentinel, |e| e.1);
                let config = GasConfig {
                    seed: derive_seed(run_seed, TAG_LOCAL, node as u64),
                    initial_threshold: None,
                    max_stall_sweeps: gas.max_stall_sweeps.max(EDGE_SEARCH_STALL_SWEEPS),
                    ..gas.clone()
                };
                let result = grover_min(objective, qubits, &config)?;
                ledger.absorb(result.ledger);
                let (index, _) = result
                    .best
                    .expect("a cold-started search always seeds an incumbent");
                index as usize
            }
        };
        let (next, weight) = edges[pick];
        path.push(next);
        cost += weight;
        node = next;
        if path.len() > graph.node_count() {
            return Err(Error::Graph("greedy walk exceeded node count".into()));
        }
    }
    Ok((path, cost, ledger))
}

/// Two-stage search on a static graph: a greedy cheapest-next-edge walk
/// (each hop found by a single-step amplified search) sets the warm
/// threshold, then an amplified search over all source→sink paths runs
/// below it.
pub fn solve_static_graph(
    graph: &StaticGraph,
    run_seed: u64,
    gas: &GasConfig,
) -> Result<GraphRunResult> {
    let ensemble = graph.enumerate()?;
    let (greedy_path, greedy_cost, mut ledger) = amplified_greedy_walk(graph, run_seed, gas)?;
    let (_, optimal_cost) = crate::classical::dp_shortest_path(graph)?;

    // Evaluating the warm walk's total cost is one objective query.
    ledger.classical_queries += 1;

    let config = GasConfig {
        seed: derive_seed(run_seed, TAG_STANDALONE, 0),
        initial_threshold: Some(greedy_cost),
        ..gas.clone()
    };
    let result = grover_min(ensemble.objective(), ensemble.qubits, &config)?;
    ledger.absorb(result.ledger);

    let (path, cost, fallback) = match result.best {
        Some((index, value)) => (ensemble.paths[index as usize].clone(), value, false),
        None => {
            log::warn!(
                "path search stalled at the warm threshold {greedy_cost}; keeping the greedy walk"
            );
            (greedy_path.clone(), greedy_cost, true)
        }
    };

    let pruned_fraction = ensemble.pruned_fraction(greedy_cost, true);
    let marked = marked_fraction(ensemble.objective(), ensemble.qubits, greedy_cost, true)?;

    Ok(GraphRunResult {
        path: path.iter().map(|&n| graph.node_name(n).to_string()).collect(),
        display: graph.path_display(&path),
        cost,
        optimal_cost,
        is_optimal: (cost - optimal_cost).abs() < 1e-9,
        warm_cost: greedy_cost,
        warm_display: graph.path_display(&greedy_path),
        pruned_fraction,
        marked_fraction: marked,
        qubits: ensemble.qubits,
        ledger,
        threshold_history: result.threshold_history,
        fallback_to_warm: fallback,
    })
}
