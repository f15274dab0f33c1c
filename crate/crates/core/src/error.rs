use thiserror::Error;

/// Errors raised by protocol, attack, and analysis operations.
///
/// Probabilistic outcomes (rejected sessions, lost photons, failed attacks)
/// are ordinary return values, never errors. An `Error` always means the
/// caller supplied inconsistent inputs.
#[derive(Debug, Error, PartialEq)]
pub enum Error {
    #[error("{context}: length mismatch (expected {expected}, got {actual})")]
    LengthMismatch {
        context: &'static str,
        expected: usize,
        actual: usize,
    },

    #[error("{name} must lie in [0, 1], got {value}")]
    InvalidProbability { name: &'static str, value: f64 },

    #[error("position {position} out of bounds for sequence of length {len}")]
    PositionOutOfBounds { position: usize, len: usize },

    #[error("announcement carries {announced} bits but {received} photons were received")]
    AnnouncementMisaligned { received: usize, announced: usize },

    #[error("{context}: length must be even, got {len}")]
    OddLength { context: &'static str, len: usize },

    #[error("invalid bit character {0:?} (expected '0' or '1')")]
    InvalidBitChar(char),

    #[error("ciphertext list is empty")]
    EmptyCiphertextList,

    #[error("operation requires the biased-bits plaintext model")]
    WrongPlaintextModel,

    #[error("no re-pairing satisfies the basis-change constraints for {len} verification qubits")]
    RepairingImpossible { len: usize },
}
