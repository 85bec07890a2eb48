//! Adaptive-threshold minimum finding on the simulated register.
//!
//! The minimizer keeps an incumbent threshold τ and repeatedly amplifies
//! the set {i : f(i) < τ} before measuring. Because the number of marked
//! states is unknown, the iteration count of each probe is drawn uniformly
//! from {0, …, K−1}, and K doubles after every failed probe up to a cap of
//! order (π/4)·√N. An improvement resets the schedule; a full pass of the
//! schedule without improvement counts as a stalled sweep, and the search
//! stops after a configurable number of consecutive stalls.
//!
//! Query accounting follows the convention used throughout this crate:
//! one quantum query per applied search iteration, one classical query per
//! objective evaluation the *algorithm* requests (measured candidates and
//! exhaustive scans). The simulator's internal evaluation of the objective
//! over all basis states when building a phase oracle is an artifact of
//! classical simulation and is deliberately not counted.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::statevector::{Statevector, DEFAULT_QUBIT_CAP};

/// Tuning knobs for the adaptive minimum search.
#[derive(Debug, Clone)]
pub struct GasConfig {
    /// Initial (and post-improvement) cap on the sampled iteration count.
    pub k0: u64,
    /// Upper bound on the doubling schedule. `None` computes
    /// ceil((π/4)·√(2^m)) from the register width.
    pub k_max: Option<u64>,
    /// Mark states strictly below the threshold. The non-strict variant
    /// (≤) is only useful for diagnostics such as counting ties; the
    /// search itself always requires strict improvement to move τ.
    pub strict: bool,
    /// Seed for the probe RNG.
    pub seed: u64,
    /// Number of consecutive stalled sweeps (full doubling passes without
    /// improvement) tolerated before the search terminates.
    pub max_stall_sweeps: u32,
    /// Starting threshold. `None` means a cold start: one unamplified
    /// measurement seeds the incumbent.
    pub initial_threshold: Option<f64>,
    /// Register width cap forwarded to the simulator.
    pub qubit_cap: u32,
}

impl Default for GasConfig {
    fn default() -> Self {
        Self {
            k0: 1,
            k_max: None,
            strict: true,
            seed: 0,
            max_stall_sweeps: DEFAULT_MAX_STALL_SWEEPS,
            initial_threshold: None,
            qubit_cap: DEFAULT_QUBIT_CAP,
        }
    }
}

/// Default stall tolerance. A single sweep misses an improvement often
/// enough (roughly a third of the time near the end of a search) that
/// terminating on the first stall loses the true minimum on a sizable
/// fraction of runs; four consecutive stalled sweeps pushes the residual
/// miss rate well below the percent level while adding only a bounded,
/// O(√N) amount of extra work per call.
pub const DEFAULT_MAX_STALL_SWEEPS: u32 = 4;

impl GasConfig {
    /// Convenience constructor fixing only the probe seed.
    pub fn seeded(seed: u64) -> Self {
        Self { seed, ..Self::default() }
    }

    fn validate(&self) -> Result<()> {
        if self.k0 == 0 {
            return Err(Error::Config("k0 must be at least 1".into()));
        }
        if let Some(k_max) = self.k_max {
            if k_max < self.k0 {
                return Err(Error::Config(format!(
                    "k_max ({k_max}) must be at least k0 ({})",
                    self.k0
                )));
            }
        }
        if self.max_stall_sweeps == 0 {
            return Err(Error::Config("max_stall_sweeps must be at least 1".into()));
        }
        Ok(())
    }
}

/// Default schedule cap for an m-qubit register: ceil((π/4)·√(2^m)), the
/// iteration count that rotates a single marked state to near-certainty.
pub fn default_k_max(qubits: u32) -> u64 {
    let n = (1u64 << qubits) as f64;
    (std::f64::consts::FRAC_PI_4 * n.sqrt()).ceil() as u64
}

/// One amplified probe: the schedule state when it ran and what it found.
#[derive(Debug, Clone, Serialize)]
pub struct ProbeRecord {
    /// Iterations applied in this probe.
    pub k: u64,
    /// Schedule cap the iteration count was drawn from.
    pub k_cap: u64,
    /// Threshold in force when the probe ran (`None` before the incumbent
    /// is seeded).
    pub threshold: Option<f64>,
    /// Objective value of the measured candidate.
    pub value: f64,
    /// Whether the candidate strictly improved the incumbent.
    pub improved: bool,
}

/// Running totals of the work a search performed.
#[derive(Debug, Clone, Default, Serialize)]
pub struct QueryLedger {
    /// Applied search iterations (oracle + diffusion pairs).
    pub quantum_queries: u64,
    /// Objective evaluations requested by the algorithm itself.
    pub classical_queries: u64,
    /// Register measurements, including the cold-start seed measurement.
    pub measurements: u64,
    /// Strict improvements to the incumbent after it was seeded.
    pub improvements: u64,
    /// Completed doubling sweeps that produced no improvement.
    pub stalled_sweeps: u64,
    /// Per-probe breakdown, in execution order.
    pub probes: Vec<ProbeRecord>,
}

impl QueryLedger {
    /// Folds another ledger's totals into this one. Probe records are
    /// appended in order.
    pub fn absorb(&mut self, other: QueryLedger) {
        self.quantum_queries += other.quantum_queries;
        self.classical_queries += other.classical_queries;
        self.measurements += other.measurements;
        self.improvements += other.improvements;
        self.stalled_sweeps += other.stalled_sweeps;
        self.probes.extend(other.probes);
    }
}

/// Outcome of one adaptive minimum search.
#[derive(Debug, Clone, Serialize)]
pub struct GasResult {
    /// Best candidate found: basis index and objective value. `None` when
    /// the search started from a finite threshold and never improved on it.
    pub best: Option<(u64, f64)>,
    /// Every incumbent value in order of adoption; strictly decreasing.
    pub threshold_history: Vec<f64>,
    /// Work accounting for this call.
    pub ledger: QueryLedger,
}

/// Finds a minimizer of `objective` over all 2^m basis indices by
/// adaptive-threshold amplification.
///
/// The objective must be finite on the whole domain. The returned
/// candidate is exact with high probability but not certainty; callers
/// needing a guarantee compare against [`crate::classical::brute_force_min`].
pub fn grover_min(
    objective: impl Fn(u64) -> f64,
    qubits: u32,
    config: &GasConfig,
) -> Result<GasResult> {
    config.validate()?;
    if qubits == 0 || qubits > config.qubit_cap {
        return Err(Error::Resource { qubits, cap: config.qubit_cap });
    }
    let n = 1u64 << qubits;

    // The oracle needs the objective on every basis state anyway, so it is
    // tabulated once up front. These evaluations belong to the simulator,
    // not the algorithm, and are excluded from the ledger (see module doc).
    let mut values = Vec::with_capacity(n as usize);
    for index in 0..n {
        let value = objective(index);
        if !value.is_finite() {
            return Err(Error::Objective { index });
        }
        values.push(value);
    }

    let k_max = config.k_max.unwrap_or_else(|| default_k_max(qubits)).max(config.k0);
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut ledger = QueryLedger::default();
    let mut threshold_history = Vec::new();

    // Incumbent: (index, value). A cold start seeds it with one
    // unamplified measurement — i.e. a uniform draw over the register.
    let mut incumbent: Option<(u64, f64)> = None;
    let mut threshold = match config.initial_threshold {
        Some(t) => t,
        None => {
            let index = rng.gen_range(0..n);
            let value = values[index as usize];
            ledger.measurements += 1;
            ledger.classical_queries += 1;
            ledger.probes.push(ProbeRecord {
                k: 0,
                k_cap: 0,
                threshold: None,
                value,
                improved: true,
            });
            threshold_history.push(value);
            incumbent = Some((index, value));
            value
        }
    };

    let mut k_cap = config.k0;
    let mut stalled_sweeps = 0u32;
    while stalled_sweeps < config.max_stall_sweeps {
        let k = if k_cap == 1 { 0 } else { rng.gen_range(0..k_cap) };

        let candidate = if k == 0 {
            // Zero iterations leave the register uniform; sample directly.
            rng.gen_range(0..n)
        } else {
            let mut sv = Statevector::uniform_with_cap(qubits, config.qubit_cap)?;
            let tau = threshold;
            if config.strict {
                sv.grover_power(k, |i| values[i as usize] < tau);
            } else {
                sv.grover_power(k, |i| values[i as usize] <= tau);
            }
            sv.measure(&mut rng)
        };
        ledger.quantum_queries += k;
        ledger.measurements += 1;
        ledger.classical_queries += 1;
        let value = values[candidate as usize];

        let improved = value < incumbent.map_or(threshold, |(_, v)| v);
        ledger.probes.push(ProbeRecord {
            k,
            k_cap,
            threshold: Some(threshold),
            value,
            improved,
        });

        if improved {
            incumbent = Some((candidate, value));
            threshold = value;
            threshold_history.push(value);
            ledger.improvements += 1;
            k_cap = config.k0;
            stalled_sweeps = 0;
        } else if k_cap >= k_max {
            // Completed a full doubling pass without improvement.
            ledger.stalled_sweeps += 1;
            stalled_sweeps += 1;
            k_cap = config.k0;
        } else {
            k_cap = (k_cap * 2).min(k_max);
        }
    }

    Ok(GasResult { best: incumbent, threshold_history, ledger })
}

/// Fraction of all 2^m bitstrings whose objective lies below the
/// threshold (strictly, or non-strictly with `strict = false`). This is
/// the marked fraction an oracle at that threshold would amplify.
pub fn marked_fraction(
    objective: impl Fn(u64) -> f64,
    qubits: u32,
    threshold: f64,
    strict: bool,
) -> Result<f64> {
    if qubits == 0 || qubits > DEFAULT_QUBIT_CAP {
        return Err(Error::Resource { qubits, cap: DEFAULT_QUBIT_CAP });
    }
    let n = 1u64 << qubits;
    let mut marked = 0u64;
    for index in 0..n {
        let value = objective(index);
        if !value.is_finite() {
            return Err(Error::Objective { index });
        }
        let below = if strict { value < threshold } else { value <= threshold };
        if below {
            marked += 1;
        }
    }
    Ok(marked as f64 / n as f64)
}
