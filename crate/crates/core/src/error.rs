use thiserror::Error;

/// Errors raised by the simulation kernel and the engines built on it.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("state of {requested} qubits exceeds the dense capacity of {cap} qubits")]
    Capacity { requested: usize, cap: usize },

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("qubit index {index} out of range for a {num_qubits}-qubit state")]
    QubitIndex { index: usize, num_qubits: usize },

    #[error("target qubits must be distinct")]
    DuplicateTarget,

    #[error("branch has zero probability ({probability:e}); conditional state undefined")]
    ZeroProbability { probability: f64 },

    #[error("state is not X-shaped: off-pattern entry of magnitude {magnitude:e}")]
    NotXShaped { magnitude: f64 },

    #[error("indistinguishability is zero; the number of modes is infinite")]
    InfiniteModes,

    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },
}

impl Error {
    pub(crate) fn invalid(name: &'static str, reason: impl Into<String>) -> Self {
        Error::InvalidParameter {
            name,
            reason: reason.into(),
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
