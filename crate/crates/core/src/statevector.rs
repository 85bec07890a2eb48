//! Dense statevector simulation of the amplitude-amplification primitive.
//!
//! The register is stored as all 2^m complex amplitudes, so every operation
//! here is exact up to floating-point rounding — no sampling noise enters
//! until [`Statevector::measure`]. The only two unitaries the search needs
//! are a phase oracle (sign flip on marked basis states) and the diffusion
//! operator 2|s><s| - I, so those are implemented directly instead of going
//! through a gate decomposition.

use num_complex::Complex64;
use rand::Rng;

use crate::error::{Error, Result};

/// Default upper bound on register width. 2^24 amplitudes is ~268 MB,
/// which is the most a simulation should claim by default.
pub const DEFAULT_QUBIT_CAP: u32 = 24;

/// A dense 2^m-amplitude register.
#[derive(Debug, Clone)]
pub struct Statevector {
    amps: Vec<Complex64>,
    qubits: u32,
}

impl Statevector {
    /// Prepares the uniform superposition |s> over all 2^m basis states,
    /// enforcing the default register cap.
    pub fn uniform(qubits: u32) -> Result<Self> {
        Self::uniform_with_cap(qubits, DEFAULT_QUBIT_CAP)
    }

    /// Prepares the uniform superposition with an explicit register cap.
    pub fn uniform_with_cap(qubits: u32, cap: u32) -> Result<Self> {
        if qubits == 0 || qubits > cap {
            return Err(Error::Resource { qubits, cap });
        }
        let n = 1usize << qubits;
        let amp = Complex64::new(1.0 / (n as f64).sqrt(), 0.0);
        Ok(Self { amps: vec![amp; n], qubits })
    }

    /// Number of qubits in the register.
    pub fn qubits(&self) -> u32 {
        self.qubits
    }

    /// Number of basis states, 2^m.
    pub fn dimension(&self) -> usize {
        self.amps.len()
    }

    /// Read-only view of the amplitudes, indexed by basis state.
    pub fn amplitudes(&self) -> &[Complex64] {
        &self.amps
    }

    /// Flips the sign of every amplitude whose basis index satisfies the
    /// predicate. This is the phase-oracle half of a search iteration; the
    /// predicate is evaluated classically over all basis indices.
    pub fn apply_phase_oracle(&mut self, marked: impl Fn(u64) -> bool) {
        for (index, amp) in self.amps.iter_mut().enumerate() {
            if marked(index as u64) {
                *amp = -*amp;
            }
        }
    }

    /// Applies the diffusion operator 2|s><s| - I: every amplitude is
    /// reflected about the mean amplitude. The mean is accumulated with
    /// Kahan compensation so repeated iterations on wide registers do not
    /// drift.
    pub fn apply_diffusion(&mut self) {
        let mut sum = Complex64::new(0.0, 0.0);
        let mut comp = Complex64::new(0.0, 0.0);
        for amp in &self.amps {
            let y = amp - comp;
            let t = sum + y;
            comp = (t - sum) - y;
            sum = t;
        }
        let mean = sum / self.amps.len() as f64;
        let twice_mean = mean * 2.0;
        for amp in &mut self.amps {
            *amp = twice_mean - *amp;
        }
    }

    /// One full search iteration: phase oracle followed by diffusion.
    pub fn grover_iterate(&mut self, marked: impl Fn(u64) -> bool) {
        self.apply_phase_oracle(&marked);
        self.apply_diffusion();
    }

    /// Applies `k` search iterations with the same oracle.
    pub fn grover_power(&mut self, k: u64, marked: impl Fn(u64) -> bool) {
        for _ in 0..k {
            self.grover_iterate(&marked);
        }
    }

    /// Probability of observing the given basis state.
    pub fn probability(&self, index: u64) -> f64 {
        self.amps[index as usize].norm_sqr()
    }

    /// Total probability mass on basis states satisfying the predicate.
    pub fn marked_probability(&self, marked: impl Fn(u64) -> bool) -> f64 {
        self.amps
            .iter()
            .enumerate()
            .filter(|(index, _)| marked(*index as u64))
            .map(|(_, amp)| amp.norm_sqr())
            .sum()
    }

    /// Squared norm of the register; stays within rounding of 1 under the
    /// unitary operations above.
    pub fn norm_sqr(&self) -> f64 {
        self.amps.iter().map(Complex64::norm_sqr).sum()
    }

    /// Samples one basis state by the Born rule. Walks the cumulative
    /// distribution against a single uniform draw; if rounding leaves the
    /// draw above the accumulated total, the last basis state with nonzero
    /// probability is returned.
    pub fn measure(&self, rng: &mut impl Rng) -> u64 {
        let u: f64 = rng.gen();
        let mut cumulative = 0.0;
        let mut last_nonzero = 0u64;
        for (index, amp) in self.amps.iter().enumerate() {
            let p = amp.norm_sqr();
            if p > 0.0 {
                last_nonzero = index as u64;
            }
            cumulative += p;
            if u < cumulative {
                return index as u64;
            }
        }
        last_nonzero
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn uniform_superposition_has_equal_amplitudes() {
        let sv = Statevector::uniform(4).unwrap();
        assert_eq!(sv.dimension(), 16);
        let expected = 0.25;
        for amp in sv.amplitudes() {
            assert_abs_diff_eq!(amp.re, expected, epsilon = 1e-15);
            assert_abs_diff_eq!(amp.im, 0.0, epsilon = 1e-15);
        }
        assert_abs_diff_eq!(sv.norm_sqr(), 1.0, epsilon = 1e-12);
    }

    #[test]
    fn register_cap_is_enforced() {
        assert!(matches!(
            Statevector::uniform(25),
            Err(Error::Resource { qubits: 25, cap: 24 })
        ));
        assert!(matches!(
            Statevector::uniform_with_cap(13, 12),
            Err(Error::Resource { qubits: 13, cap: 12 })
        ));
        assert!(Statevector::uniform_with_cap(13, 13).is_ok());
        assert!(matches!(Statevector::uniform(0), Err(Error::Resource { .. })));
    }

    #[test]
    fn single_iteration_on_three_qubits_matches_hand_calculation() {
        // One marked state out of 8: after one iteration the marked
        // amplitude is 2.5/sqrt(8), so P = 6.25/8 = 25/32.
        let mut sv = Statevector::uniform(3).unwrap();
        sv.grover_iterate(|i| i == 5);
        assert_abs_diff_eq!(sv.probability(5), 25.0 / 32.0, epsilon = 1e-12);
        // The other 7 states share the rest evenly: (0.5/sqrt(8))^2 each.
        assert_abs_diff_eq!(sv.probability(0), 0.25 / 8.0, epsilon = 1e-12);
        assert_abs_diff_eq!(sv.norm_sqr(), 1.0, epsilon = 1e-12);
    }

    #[test]
    fn iteration_matches_closed_form_success_probability() {
        // With W marked of N, k iterations leave the marked subspace with
        // probability sin^2((2k+1) asin(sqrt(W/N))).
        let marked = |i: u64| i == 3 || i == 17 || i == 40;
        let theta = (3.0f64 / 64.0).sqrt().asin();
        let mut sv = Statevector::uniform(6).unwrap();
        for k in 0..=10u64 {
            let expected = ((2 * k + 1) as f64 * theta).sin().powi(2);
            assert_abs_diff_eq!(sv.marked_probability(marked), expected, epsilon = 1e-10);
            sv.grover_iterate(marked);
        }
    }

    #[test]
    fn iteration_matches_dense_matrix_reference() {
        // Cross-check the streaming implementation against an explicit
        // matrix product: D = (2/N) J - I applied after the sign flip.
        let qubits = 5u32;
        let n = 1usize << qubits;
        let marked = |i: u64| i % 7 == 2;

        let mut reference: Vec<f64> = vec![1.0 / (n as f64).sqrt(); n];
        let mut sv = Statevector::uniform(qubits).unwrap();
        for _ in 0..4 {
            for (i, v) in reference.iter_mut().enumerate() {
                if marked(i as u64) {
                    *v = -*v;
                }
            }
            let mean: f64 = reference.iter().sum::<f64>() / n as f64;
            for v in reference.iter_mut() {
                *v = 2.0 * mean - *v;
            }
            sv.grover_iterate(marked);
        }
        for (amp, expected) in sv.amplitudes().iter().zip(&reference) {
            assert_abs_diff_eq!(amp.re, *expected, epsilon = 1e-10);
            assert_abs_diff_eq!(amp.im, 0.0, epsilon = 1e-12);
        }
    }

    #[test]
    fn norm_is_preserved_across_many_iterations() {
        let mut sv = Statevector::uniform(12).unwrap();
        let marked = |i: u64| i < 5;
        for _ in 0..40 {
            sv.grover_iterate(marked);
        }
        assert_abs_diff_eq!(sv.norm_sqr(), 1.0, epsilon = 1e-10);
    }

    #[test]
    fn measurement_concentrates_after_amplification() {
        // Amplify a single marked state of 256 to near-certainty
        // (k = 12 ~ (pi/4) sqrt(256)), then sample repeatedly.
        let mut sv = Statevector::uniform(8).unwrap();
        sv.grover_power(12, |i| i == 200);
        assert!(sv.probability(200) > 0.999);

        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let hits = (0..1000).filter(|_| sv.measure(&mut rng) == 200).count();
        assert!(hits >= 995, "only {hits}/1000 measurements hit the marked state");
    }

    #[test]
    fn measurement_of_uniform_state_is_unbiased_enough() {
        let sv = Statevector::uniform(4).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let mut counts = [0u32; 16];
        for _ in 0..16_000 {
            counts[sv.measure(&mut rng) as usize] += 1;
        }
        // Each bin expects 1000; a uniform sampler stays well within 20%.
        for (index, count) in counts.iter().enumerate() {
            assert!(
                (800..=1200).contains(count),
                "basis state {index} sampled {count} times"
            );
        }
    }
}
