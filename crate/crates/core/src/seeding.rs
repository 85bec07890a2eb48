//! Deterministic seed derivation.
//!
//! Every stochastic stage of a run (each planning window, each local
//! warm-start step) draws its randomness from its own child RNG so that
//! results do not depend on evaluation order or on how many draws an
//! earlier stage consumed. Child seeds are expanded from the run seed with
//! a splitmix64 chain, which is the standard way to turn one 64-bit seed
//! into many well-separated ones.

/// One step of the splitmix64 generator: advances the state and returns
/// the next output word.
pub fn splitmix64(state: &mut u64) {
    *state = state.wrapping_add(0x9e37_79b9_7f4a_7c15);
}

/// The output function of splitmix64 applied to a raw state word.
fn mix(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Derives a child seed from a run seed, a stage tag, and an index.
///
/// The tag keeps different stages (e.g. the local warm start and the
/// global window loop) on separate streams even when they share an index.
pub fn derive_seed(run_seed: u64, tag: u64, index: u64) -> u64 {
    let mut state = run_seed;
    splitmix64(&mut state);
    let a = mix(state ^ tag.wrapping_mul(0x9e37_79b9_7f4a_7c15));
    splitmix64(&mut state);
    let b = mix(state ^ index);
    mix(a ^ b.rotate_left(32))
}

/// Stage tag for the local warm-start pass.
pub const TAG_LOCAL: u64 = 0x4c4f_4341_4c00_0001;
/// Stage tag for the global receding-horizon loop.
pub const TAG_GLOBAL: u64 = 0x474c_4f42_414c_0002;
/// Stage tag for standalone minimizer calls (QUBO files, graphs).
pub const TAG_STANDALONE: u64 = 0x5354_414e_4441_0003;
/// Stage tag for the stalled-window fallback sampler.
pub const TAG_FALLBACK: u64 = 0x4641_4c4c_4241_0004;
