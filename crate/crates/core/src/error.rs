//! Error types shared across the crate.

use thiserror::Error;

/// Errors produced by simulator, search, and solver operations.
#[derive(Debug, Error)]
pub enum Error {
    /// A register or enumeration would exceed the configured size cap.
    #[error("register of {qubits} qubits exceeds the cap of {cap} (2^{qubits} amplitudes)")]
    Resource { qubits: u32, cap: u32 },

    /// An objective returned a non-finite value.
    #[error("objective returned a non-finite value at index {index}")]
    Objective { index: u64 },

    /// A bitstring had the wrong length for its encoding.
    #[error("bitstring value {value} does not fit in {bits} bits")]
    Encoding { value: u64, bits: u32 },

    /// Matrix or vector dimensions do not agree.
    #[error("dimension mismatch: {0}")]
    Shape(String),

    /// A weight matrix failed the positive-semidefinite check.
    #[error("weight matrix {name} is not positive semidefinite (min eigenvalue {min_eigenvalue})")]
    Weights { name: &'static str, min_eigenvalue: f64 },

    /// A graph violated a structural requirement.
    #[error("graph error: {0}")]
    Graph(String),

    /// An invalid solver or benchmark configuration.
    #[error("configuration error: {0}")]
    Config(String),

    /// Dynamics produced a non-finite state.
    #[error("dynamics diverged at step {step}")]
    Divergence { step: usize },

    /// Failure while parsing or serializing an artifact file.
    #[error("serialization error: {0}")]
    Serialization(String),
}

/// Crate-wide result alias.
pub type Result<T> = std::result::Result<T, Error>;
