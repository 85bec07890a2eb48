//! From control windows to binary quadratic objectives.
//!
//! A planning window of N_c control blocks, each channel discretized to M
//! bits, becomes one register index: step 0 occupies the lowest
//! M·n_u bits, channels in order within a step, and each channel's M bits
//! read as a plain unsigned integer (LSB first in the index). Decoding is
//! the affine map u = u_min + raw · Δ with Δ = (u_max − u_min)/(2^M − 1),
//! so both interval endpoints are exactly attainable.
//!
//! For linear dynamics the whole window cost — quadratic state deviation,
//! input effort, terminal deviation, with the tail beyond N_c repeating
//! the last block — collapses to a closed-form function
//! b^T Q b + q^T b + c of the bit vector. [`synthesize_qubo`] builds that
//! form and [`trajectory_cost`] computes the same total by stepping the
//! dynamics; the two agree to rounding, which the tests pin down.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::dynamics::{DiscreteSystem, LtiSystem};
use crate::error::{Error, Result};

/// Hard ceiling on QUBO size: indices are u64 bit vectors.
pub const MAX_QUBO_BITS: usize = 63;

/// Uniform fixed-point discretization of a box of control inputs.
#[derive(Debug, Clone)]
pub struct FixedPointEncoding {
    u_min: DVector<f64>,
    u_max: DVector<f64>,
    bits_per_input: u32,
}

impl FixedPointEncoding {
    pub fn new(u_min: DVector<f64>, u_max: DVector<f64>, bits_per_input: u32) -> Result<Self> {
        if u_min.len() == 0 || u_min.len() != u_max.len() {
            return Err(Error::Shape(format!(
                "input bounds have lengths {} and {}",
                u_min.len(),
                u_max.len()
            )));
        }
        if bits_per_input == 0 || bits_per_input > 32 {
            return Err(Error::Config(format!(
                "bits per input must be in 1..=32, got {bits_per_input}"
            )));
        }
        for j in 0..u_min.len() {
            if !(u_min[j] < u_max[j]) || !u_min[j].is_finite() || !u_max[j].is_finite() {
                return Err(Error::Config(format!(
                    "input channel {j} needs finite bounds with min < max, got [{}, {}]",
                    u_min[j], u_max[j]
                )));
            }
        }
        Ok(Self { u_min, u_max, bits_per_input })
    }

    /// Single-channel convenience: inputs in [lo, hi].
    pub fn scalar(lo: f64, hi: f64, bits_per_input: u32) -> Result<Self> {
        Self::new(
            DVector::from_element(1, lo),
            DVector::from_element(1, hi),
            bits_per_input,
        )
    }

    pub fn input_dim(&self) -> usize {
        self.u_min.len()
    }

    pub fn bits_per_input(&self) -> u32 {
        self.bits_per_input
    }

    /// Quantization levels per channel, 2^M.
    pub fn levels(&self) -> u64 {
        1u64 << self.bits_per_input
    }

    /// Grid spacing of channel `j`.
    pub fn delta(&self, j: usize) -> f64 {
        (self.u_max[j] - self.u_min[j]) / (self.levels() - 1) as f64
    }

    pub fn u_min(&self) -> &DVector<f64> {
        &self.u_min
    }

    pub fn u_max(&self) -> &DVector<f64> {
        &self.u_max
    }

    /// Bits for one control block: M · n_u.
    pub fn bits_per_step(&self) -> usize {
        self.bits_per_input as usize * self.input_dim()
    }

    /// Bits for a window of `n_c` blocks.
    pub fn total_bits(&self, n_c: usize) -> usize {
        self.bits_per_step() * n_c
    }

    /// Decodes one control block from its raw bits (channel 0 in the
    /// lowest M bits).
    pub fn decode_step(&self, raw: u64) -> DVector<f64> {
        let m = self.bits_per_input;
        let mask = (1u64 << m) - 1;
        DVector::from_fn(self.input_dim(), |j, _| {
            let level = (raw >> (j as u32 * m)) & mask;
            self.u_min[j] + level as f64 * self.delta(j)
        })
    }

    /// Decodes a whole window (step 0 in the lowest bits).
    pub fn decode_sequence(&self, index: u64, n_c: usize) -> Vec<DVector<f64>> {
        let step_bits = self.bits_per_step() as u32;
        let mask = if step_bits == 64 { u64::MAX } else { (1u64 << step_bits) - 1 };
        (0..n_c)
            .map(|k| self.decode_step((index >> (k as u32 * step_bits)) & mask))
            .collect()
    }

    /// Encodes control blocks to the nearest register index, clamping each
    /// channel into its box first.
    pub fn encode_nearest(&self, blocks: &[DVector<f64>]) -> Result<u64> {
        if self.total_bits(blocks.len()) > MAX_QUBO_BITS {
            return Err(Error::Encoding {
                value: blocks.len() as u64,
                bits: MAX_QUBO_BITS as u32,
            });
        }
        let m = self.bits_per_input;
        let top = (self.levels() - 1) as f64;
        let mut index = 0u64;
        let mut offset = 0u32;
        for block in blocks {
            if block.len() != self.input_dim() {
                return Err(Error::Shape(format!(
                    "control block has {} channels, encoding expects {}",
                    block.len(),
                    self.input_dim()
                )));
            }
            for j in 0..self.input_dim() {
                let level = ((block[j] - self.u_min[j]) / self.delta(j)).round().clamp(0.0, top);
                index |= (level as u64) << offset;
                offset += m;
            }
        }
        Ok(index)
    }
}

/// Quadratic cost weights: running state weight, input weight, terminal
/// state weight. All three must be symmetric positive semidefinite.
#[derive(Debug, Clone)]
pub struct CostWeights {
    q_state: DMatrix<f64>,
    r_input: DMatrix<f64>,
    p_terminal: DMatrix<f64>,
}

/// Tolerated asymmetry / eigenvalue floor when validating weights.
const PSD_TOLERANCE: f64 = 1e-10;

impl CostWeights {
    pub fn new(q_state: DMatrix<f64>, r_input: DMatrix<f64>, p_terminal: DMatrix<f64>) -> Result<Self> {
        let q_state = Self::check_psd("state weight", q_state)?;
        let r_input = Self::check_psd("input weight", r_input)?;
        let p_terminal = Self::check_psd("terminal weight", p_terminal)?;
        if p_terminal.nrows() != q_state.nrows() {
            return Err(Error::Shape(format!(
                "terminal weight is {}x{} but state weight is {}x{}",
                p_terminal.nrows(),
                p_terminal.ncols(),
                q_state.nrows(),
                q_state.ncols()
            )));
        }
        Ok(Self { q_state, r_input, p_terminal })
    }

    /// Diagonal-weight convenience constructor.
    pub fn diagonal(q: &[f64], r: &[f64], p: &[f64]) -> Result<Self> {
        Self::new(
            DMatrix::from_diagonal(&DVector::from_row_slice(q)),
            DMatrix::from_diagonal(&DVector::from_row_slice(r)),
            DMatrix::from_diagonal(&DVector::from_row_slice(p)),
        )
    }

    fn check_psd(name: &'static str, matrix: DMatrix<f64>) -> Result<DMatrix<f64>> {
        if matrix.nrows() != matrix.ncols() || matrix.nrows() == 0 {
            return Err(Error::Shape(format!(
                "{name} must be square and non-empty, got {}x{}",
                matrix.nrows(),
                matrix.ncols()
            )));
        }
        let asymmetry = (&matrix - matrix.transpose()).abs().max();
        if asymmetry > 1e-9 {
            return Err(Error::Shape(format!(
                "{name} is not symmetric (max asymmetry {asymmetry:.3e})"
            )));
        }
        // Symmetrize exactly before the eigendecomposition.
        let sym = (&matrix + matrix.transpose()) * 0.5;
        let eigenvalues = sym.clone().symmetric_eigenvalues();
        let min_eigenvalue = eigenvalues.min();
        if min_eigenvalue < -PSD_TOLERANCE {
            return Err(Error::Weights { name, min_eigenvalue });
        }
        Ok(sym)
    }

    pub fn q_state(&self) -> &DMatrix<f64> {
        &self.q_state
    }

    pub fn r_input(&self) -> &DMatrix<f64> {
        &self.r_input
    }

    pub fn p_terminal(&self) -> &DMatrix<f64> {
        &self.p_terminal
    }

    pub fn state_dim(&self) -> usize {
        self.q_state.nrows()
    }

    pub fn input_dim(&self) -> usize {
        self.r_input.nrows()
    }
}

/// A binary quadratic objective b^T Q b + q^T b + c over n-bit vectors.
#[derive(Debug, Clone)]
pub struct QuboProblem {
    pub matrix: DMatrix<f64>,
    pub linear: DVector<f64>,
    pub constant: f64,
}

/// Serialized form of a [`QuboProblem`].
#[derive(Debug, Serialize, Deserialize)]
struct QuboFile {
    n: usize,
    #[serde(rename = "Q")]
    matrix: Vec<Vec<f64>>,
    q: Vec<f64>,
    c: f64,
}

impl QuboProblem {
    pub fn new(matrix: DMatrix<f64>, linear: DVector<f64>, constant: f64) -> Result<Self> {
        let n = linear.len();
        if matrix.nrows() != n || matrix.ncols() != n {
            return Err(Error::Shape(format!(
                "quadratic term is {}x{} but the linear term has {n} entries",
                matrix.nrows(),
                matrix.ncols()
            )));
        }
        if n == 0 || n > MAX_QUBO_BITS {
            return Err(Error::Resource { qubits: n as u32, cap: MAX_QUBO_BITS as u32 });
        }
        if matrix.iter().any(|v| !v.is_finite())
            || linear.iter().any(|v| !v.is_finite())
            || !constant.is_finite()
        {
            return Err(Error::Config("QUBO coefficients must be finite".into()));
        }
        Ok(Self { matrix, linear, constant })
    }

    /// Number of binary variables.
    pub fn n(&self) -> usize {
        self.linear.len()
    }

    /// Evaluates the objective on the bit vector packed into `index`
    /// (variable i at bit i).
    pub fn evaluate(&self, index: u64) -> f64 {
        let n = self.n();
        let mut total = self.constant;
        for i in 0..n {
            if (index >> i) & 1 == 1 {
                total += self.linear[i] + self.matrix[(i, i)];
                for j in (i + 1)..n {
                    if (index >> j) & 1 == 1 {
                        total += self.matrix[(i, j)] + self.matrix[(j, i)];
                    }
                }
            }
        }
        total
    }

    /// Parses the JSON form `{n, Q, q, c}`.
    pub fn from_json(text: &str) -> Result<Self> {
        let file: QuboFile =
            serde_json::from_str(text).map_err(|e| Error::Serialization(e.to_string()))?;
        if file.q.len() != file.n || file.matrix.len() != file.n {
            return Err(Error::Serialization(format!(
                "QUBO declares n={} but Q has {} rows and q has {} entries",
                file.n,
                file.matrix.len(),
                file.q.len()
            )));
        }
        if let Some(row) = file.matrix.iter().find(|row| row.len() != file.n) {
            return Err(Error::Serialization(format!(
                "QUBO declares n={} but a Q row has {} entries",
                file.n,
                row.len()
            )));
        }
        let matrix = DMatrix::from_fn(file.n, file.n, |i, j| file.matrix[i][j]);
        Self::new(matrix, DVector::from_vec(file.q), file.c)
    }

    /// Serializes to the JSON form `{n, Q, q, c}`.
    pub fn to_json(&self) -> String {
        let n = self.n();
        let file = QuboFile {
            n,
            matrix: (0..n)
                .map(|i| (0..n).map(|j| self.matrix[(i, j)]).collect())
                .collect(),
            q: self.linear.iter().copied().collect(),
            c: self.constant,
        };
        serde_json::to_string_pretty(&file).expect("QUBO file form always serializes")
    }
}

/// Expands a window of control blocks to a full horizon by repeating the
/// last block (the tail policy used throughout).
pub fn expand_tail(blocks: &[DVector<f64>], n_p: usize) -> Result<Vec<DVector<f64>>> {
    if blocks.is_empty() {
        return Err(Error::Config("cannot expand an empty control window".into()));
    }
    if blocks.len() > n_p {
        return Err(Error::Config(format!(
            "window has {} blocks but the horizon is only {n_p}",
            blocks.len()
        )));
    }
    let mut expanded = blocks.to_vec();
    let last = expanded.last().expect("non-empty").clone();
    expanded.resize(n_p, last);
    Ok(expanded)
}

/// Total cost of applying `blocks` (tail-expanded to `n_p` steps) from
/// `x_now`: running state deviation from `x_ref` and input effort at every
/// step, plus terminal deviation from `x_goal`. States pass through the
/// system's cost map (e.g. angle wrapping) before weighting. The step-0
/// state term is included even though no control can change it, so this
/// total matches the closed-form objective from [`synthesize_qubo`]
/// exactly.
pub fn trajectory_cost<S: DiscreteSystem + ?Sized>(
    sys: &S,
    weights: &CostWeights,
    x_now: &DVector<f64>,
    blocks: &[DVector<f64>],
    x_ref: &DVector<f64>,
    x_goal: &DVector<f64>,
    n_p: usize,
) -> Result<f64> {
    let controls = expand_tail(blocks, n_p)?;
    let mut x = x_now.clone();
    let mut total = 0.0;
    for u in &controls {
        let dev = sys.cost_state(&x) - x_ref;
        total += (&dev.transpose() * weights.q_state() * &dev)[(0, 0)];
        total += (&u.transpose() * weights.r_input() * u)[(0, 0)];
        x = sys.step(&x, u);
        if x.iter().any(|v| !v.is_finite()) {
            return Err(Error::Divergence { step: controls.len() });
        }
    }
    let dev = sys.cost_state(&x) - x_goal;
    total += (&dev.transpose() * weights.p_terminal() * &dev)[(0, 0)];
    Ok(total)
}

/// Compiles one planning window over linear dynamics into a binary
/// quadratic objective whose value at any bit vector equals the
/// [`trajectory_cost`] of the decoded controls.
///
/// The window optimizes N_c blocks over an N_p-step horizon
/// (N_c ≤ N_p; steps beyond N_c repeat the last block).
#[allow(clippy::too_many_arguments)]
pub fn synthesize_qubo(
    sys: &LtiSystem,
    weights: &CostWeights,
    encoding: &FixedPointEncoding,
    x_now: &DVector<f64>,
    x_ref: &DVector<f64>,
    x_goal: &DVector<f64>,
    n_c: usize,
    n_p: usize,
) -> Result<QuboProblem> {
    let nx = sys.state_dim();
    let nu = sys.input_dim();
    if n_c == 0 || n_p < n_c {
        return Err(Error::Config(format!(
            "window needs 1 <= N_c <= N_p, got N_c={n_c}, N_p={n_p}"
        )));
    }
    if weights.state_dim() != nx || weights.input_dim() != nu {
        return Err(Error::Shape(format!(
            "weights are for {}-state/{}-input, system has {nx}/{nu}",
            weights.state_dim(),
            weights.input_dim()
        )));
    }
    if encoding.input_dim() != nu {
        return Err(Error::Shape(format!(
            "encoding covers {} channels, system has {nu}",
            encoding.input_dim()
        )));
    }
    if x_now.len() != nx || x_ref.len() != nx || x_goal.len() != nx {
        return Err(Error::Shape("state vectors must match the state dimension".into()));
    }
    let nb = encoding.total_bits(n_c);
    if nb > MAX_QUBO_BITS {
        return Err(Error::Resource { qubits: nb as u32, cap: MAX_QUBO_BITS as u32 });
    }

    // Prediction matrices over the stacked states [x_1; ...; x_{N_p}]:
    // X = phi x_0 + gamma U with U the stacked (expanded) inputs.
    let mut phi = DMatrix::zeros(n_p * nx, nx);
    let mut a_power = DMatrix::identity(nx, nx);
    let mut a_powers = Vec::with_capacity(n_p + 1);
    a_powers.push(a_power.clone());
    for k in 0..n_p {
        a_power = sys.a() * &a_power;
        a_powers.push(a_power.clone());
        phi.view_mut((k * nx, 0), (nx, nx)).copy_from(&a_powers[k + 1]);
    }
    let mut gamma = DMatrix::zeros(n_p * nx, n_p * nu);
    for k in 1..=n_p {
        for j in 0..k {
            let block = &a_powers[k - 1 - j] * sys.b();
            gamma
                .view_mut(((k - 1) * nx, j * nu), (nx, nu))
                .copy_from(&block);
        }
    }

    // Tail expansion: U = S * [u_0; ...; u_{N_c-1}], repeating block N_c-1.
    let mut s = DMatrix::zeros(n_p * nu, n_c * nu);
    for k in 0..n_p {
        let col_block = k.min(n_c - 1);
        s.view_mut((k * nu, col_block * nu), (nu, nu))
            .copy_from(&DMatrix::identity(nu, nu));
    }

    // Bit map: stacked window inputs = u_base + W b.
    let m = encoding.bits_per_input();
    let mut w = DMatrix::zeros(n_c * nu, nb);
    for k in 0..n_c {
        for j in 0..nu {
            for t in 0..m {
                let col = k * nu * m as usize + j * m as usize + t as usize;
                w[(k * nu + j, col)] = encoding.delta(j) * (1u64 << t) as f64;
            }
        }
    }
    let u_base = DVector::from_fn(n_c * nu, |i, _| encoding.u_min()[i % nu]);

    // Weight stacks: running state weight on x_1..x_{N_p-1}, terminal
    // weight on x_{N_p}; input weight on every expanded step.
    let mut omega = DMatrix::zeros(n_p * nx, n_p * nx);
    for k in 0..n_p.saturating_sub(1) {
        omega
            .view_mut((k * nx, k * nx), (nx, nx))
            .copy_from(weights.q_state());
    }
    omega
        .view_mut(((n_p - 1) * nx, (n_p - 1) * nx), (nx, nx))
        .copy_from(weights.p_terminal());
    let mut r_blk = DMatrix::zeros(n_p * nu, n_p * nu);
    for k in 0..n_p {
        r_blk
            .view_mut((k * nu, k * nu), (nu, nu))
            .copy_from(weights.r_input());
    }
    let mut x_ref_stack = DVector::zeros(n_p * nx);
    for k in 0..n_p.saturating_sub(1) {
        x_ref_stack.view_mut((k * nx, 0), (nx, 1)).copy_from(x_ref);
    }
    x_ref_stack
        .view_mut(((n_p - 1) * nx, 0), (nx, 1))
        .copy_from(x_goal);

    // Affine pieces: X - X_ref = G b + d, U = u0 + H b.
    let h = &s * &w;
    let u0 = &s * &u_base;
    let g = &gamma * &h;
    let d = &phi * x_now + &gamma * &u0 - &x_ref_stack;

    let gt_omega = g.transpose() * &omega;
    let ht_r = h.transpose() * &r_blk;
    let quadratic = &gt_omega * &g + &ht_r * &h;
    let quadratic = (&quadratic + quadratic.transpose()) * 0.5;
    let linear = 2.0 * (&gt_omega * &d) + 2.0 * (&ht_r * &u0);
    let dev0 = x_now - x_ref;
    let constant = (d.transpose() * &omega * &d)[(0, 0)]
        + (u0.transpose() * &r_blk * &u0)[(0, 0)]
        + (&dev0.transpose() * weights.q_state() * &dev0)[(0, 0)];

    QuboProblem::new(quadratic, linear, constant)
}
