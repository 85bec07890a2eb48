//! Simulator-backed two-stage search for minimum-cost paths and
//! finite-horizon control sequences.
//!
//! The pipeline has three layers:
//!
//! * [`statevector`] — an exact dense simulation of the amplitude-
//!   amplification primitive (phase oracle + diffusion).
//! * [`gas`] — adaptive-threshold minimum finding built on that primitive,
//!   with full query accounting.
//! * [`solver`] — a receding-horizon loop that encodes each planning
//!   window as a binary quadratic objective ([`encoding`]) over discretized
//!   controls and hands it to the minimizer, optionally warm-started by a
//!   cheap per-step pass.
//!
//! Everything is validated against classical references in [`classical`]:
//! exhaustive minimization, dynamic-programming shortest paths, and an
//! exhaustive receding-horizon baseline.

pub mod benchmarks;
pub mod classical;
pub mod dynamics;
pub mod encoding;
pub mod error;
pub mod gas;
pub mod seeding;
pub mod solver;
pub mod statevector;

pub use error::{Error, Result};
pub use statevector::Statevector;
