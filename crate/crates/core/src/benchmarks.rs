//! Canned closed-loop control benchmarks with tuned weights and encodings.
//!
//! Two tasks ship with the crate: a double integrator parking at a
//! reference point, and a cart-pole swing-up from the hanging state. The
//! numbers here — weights, bit depths, horizons — were tuned so the
//! amplified-search pipeline solves each task reliably at small register
//! widths. They are defaults, not constraints: the command-line runner can
//! override any of them before solving.

use nalgebra::DVector;

use crate::dynamics::{make_double_integrator, CartPole, DiscreteSystem, LtiSystem};
use crate::encoding::{CostWeights, FixedPointEncoding};
use crate::error::Result;
use crate::solver::{solve, ControlTask, SolverOptions, TrajectoryResult};

/// The dynamical system a benchmark runs on.
///
/// An enum rather than a boxed trait object so benchmarks stay `Clone` and
/// the linear case keeps its concrete type (the solver builds prediction
/// matrices from it).
#[derive(Debug, Clone)]
pub enum BenchmarkSystem {
    Lti(LtiSystem),
    CartPole(CartPole),
}

impl BenchmarkSystem {
    /// Borrow the system as the dynamics trait object.
    pub fn as_dyn(&self) -> &dyn DiscreteSystem {
        match self {
            BenchmarkSystem::Lti(sys) => sys,
            BenchmarkSystem::CartPole(sys) => sys,
        }
    }
}

/// A ready-to-run closed-loop control benchmark: system, cost weights,
/// input encoding, boundary conditions, solver options, and the success
/// criteria a finished trajectory is judged against.
#[derive(Debug, Clone)]
pub struct Benchmark {
    /// Stable identifier used in reports ("double-integrator", "cartpole").
    pub name: &'static str,
    pub system: BenchmarkSystem,
    pub weights: CostWeights,
    pub encoding: FixedPointEncoding,
    pub x0: DVector<f64>,
    pub x_ref: DVector<f64>,
    pub x_goal: DVector<f64>,
    pub total_steps: usize,
    pub options: SolverOptions,
    /// Componentwise bar on |final cost-state − goal| for a run to count
    /// as successful. Components free to end anywhere carry `INFINITY`.
    pub goal_tolerance: DVector<f64>,
    /// Optional trajectory-wide bound: raw state component `.0` must stay
    /// within ±`.1` at every visited state.
    pub excursion_limit: Option<(usize, f64)>,
}

impl Benchmark {
    /// Double integrator parking: drive position from 0 to 1 and stop,
    /// inputs on a 4-level grid in [−1, 1], 30 steps of 0.1 s. The
    /// warm-start stage is enabled (the dynamics are linear).
    pub fn double_integrator() -> Self {
        let system = make_double_integrator(0.1);
        let weights = CostWeights::diagonal(&[1.0, 0.2], &[0.05], &[80.0, 15.0])
            .expect("diagonal weights are positive semidefinite");
        let encoding = FixedPointEncoding::scalar(-1.0, 1.0, 2)
            .expect("bounds are finite and ordered");
        Benchmark {
            name: "double-integrator",
            system: BenchmarkSystem::Lti(system),
            weights,
            encoding,
            x0: DVector::zeros(2),
            x_ref: DVector::from_vec(vec![1.0, 0.0]),
            x_goal: DVector::from_vec(vec![1.0, 0.0]),
            total_steps: 30,
            options: SolverOptions { n_c: 3, ..SolverOptions::default() },
            goal_tolerance: DVector::from_vec(vec![0.05, 0.1]),
            excursion_limit: None,
        }
    }

    /// Cart-pole swing-up: from hanging (θ = π) to balanced upright
    /// (θ = 0), forces on a 16-level grid in [−10, 10] N, 100 steps of
    /// 0.05 s with a 30-step prediction horizon. Cold-started: the
    /// warm-start stage supports linear dynamics only.
    pub fn cart_pole() -> Self {
        let system = CartPole::default();
        let weights = CostWeights::diagonal(
            &[0.2, 0.05, 5.0, 0.05],
            &[0.001],
            &[10.0, 2.0, 100.0, 10.0],
        )
        .expect("diagonal weights are positive semidefinite");
        let encoding = FixedPointEncoding::scalar(-10.0, 10.0, 4)
            .expect("bounds are finite and ordered");
        Benchmark {
            name: "cartpole",
            system: BenchmarkSystem::CartPole(system),
            weights,
            encoding,
            x0: DVector::from_vec(vec![0.0, 0.0, std::f64::consts::PI, 0.0]),
            x_ref: DVector::zeros(4),
            x_goal: DVector::zeros(4),
            total_steps: 100,
            options: SolverOptions {
                n_c: 3,
                n_p: Some(30),
                local_stage: false,
                ..SolverOptions::default()
            },
            goal_tolerance: DVector::from_vec(vec![
                f64::INFINITY,
                f64::INFINITY,
                0.3,
                f64::INFINITY,
            ]),
            excursion_limit: Some((0, 2.5)),
        }
    }

    /// Look a benchmark up by its report identifier.
    pub fn by_name(name: &str) -> Option<Self> {
        match name {
            "double-integrator" => Some(Self::double_integrator()),
            "cartpole" => Some(Self::cart_pole()),
            _ => None,
        }
    }

    /// Borrow the benchmark as a solver task.
    pub fn task(&self) -> ControlTask<'_> {
        ControlTask {
            system: self.system.as_dyn(),
            weights: &self.weights,
            encoding: &self.encoding,
            x0: self.x0.clone(),
            x_ref: self.x_ref.clone(),
            x_goal: self.x_goal.clone(),
            total_steps: self.total_steps,
        }
    }

    /// Solve with the stored options, overriding only the run seed.
    pub fn solve_seeded(&self, run_seed: u64) -> Result<TrajectoryResult> {
        let options = SolverOptions { run_seed, ..self.options.clone() };
        solve(&self.task(), &options)
    }

    /// Solve with exhaustive window scans instead of amplified search —
    /// the deterministic classical baseline for the same task and options.
    pub fn solve_classical(&self) -> Result<TrajectoryResult> {
        crate::classical::classical_mpc_baseline(&self.task(), &self.options)
    }

    /// Componentwise |final cost-state − goal| for a finished run.
    pub fn goal_error(&self, result: &TrajectoryResult) -> DVector<f64> {
        let last = result.states.last().expect("a trajectory has at least x0");
        (self.system.as_dyn().cost_state(last) - &self.x_goal).abs()
    }

    /// Whether a finished run meets the benchmark's success criteria: the
    /// final cost-state within `goal_tolerance` of the goal, and any
    /// `excursion_limit` respected along the whole trajectory.
    pub fn success(&self, result: &TrajectoryResult) -> bool {
        let goal_ok = self
            .goal_error(result)
            .iter()
            .zip(self.goal_tolerance.iter())
            .all(|(err, tol)| err <= tol);
        let excursion_ok = self.excursion_limit.map_or(true, |(index, bound)| {
            result.states.iter().all(|x| x[index].abs() <= bound)
        });
        goal_ok && excursion_ok
    }
}
