//! The four-state single-photon abstraction: two conjugate bases, state
//! preparation, projective measurement with collapse, the public
//! announcement encoding, and a lossy/noisy channel.

use serde::{Deserialize, Serialize};

use crate::error::Error;
use crate::rng::RandomSource;

/// One of the four single-photon polarization states.
///
/// `Z0`/`Z1` are the computational-basis states |0⟩ and |1⟩; `X0`/`X1` are
/// the diagonal-basis states |+⟩ and |−⟩. Each state belongs to exactly one
/// basis.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum QubitState {
    Z0,
    Z1,
    X0,
    X1,
}

/// A measurement basis: computational (`Z`) or diagonal (`X`).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Basis {
    Z,
    X,
}

impl QubitState {
    /// The basis this state belongs to.
    pub fn basis(self) -> Basis {
        match self {
            QubitState::Z0 | QubitState::Z1 => Basis::Z,
            QubitState::X0 | QubitState::X1 => Basis::X,
        }
    }

    /// The value bit of the state: `false` for |0⟩/|+⟩, `true` for |1⟩/|−⟩.
    pub fn value_bit(self) -> bool {
        matches!(self, QubitState::Z1 | QubitState::X1)
    }

    /// The other state of the same basis (|0⟩↔|1⟩, |+⟩↔|−⟩).
    pub fn partner(self) -> QubitState {
        match self {
            QubitState::Z0 => QubitState::Z1,
            QubitState::Z1 => QubitState::Z0,
            QubitState::X0 => QubitState::X1,
            QubitState::X1 => QubitState::X0,
        }
    }

    /// The state of `basis` carrying value bit `value`.
    pub fn from_parts(basis: Basis, value: bool) -> QubitState {
        match (basis, value) {
            (Basis::Z, false) => QubitState::Z0,
            (Basis::Z, true) => QubitState::Z1,
            (Basis::X, false) => QubitState::X0,
            (Basis::X, true) => QubitState::X1,
        }
    }

    /// Uniformly random state over all four.
    pub fn random(rng: &mut RandomSource) -> QubitState {
        QubitState::from_parts(if rng.coin() { Basis::X } else { Basis::Z }, rng.coin())
    }
}

impl Basis {
    /// Basis membership; total and disjoint over the four states.
    pub fn contains(self, state: QubitState) -> bool {
        state.basis() == self
    }
}

/// Loss and noise parameters of the quantum channel.
///
/// `p_loss` is the probability a photon never arrives. `p_flip` is the
/// probability an arriving photon is replaced by its same-basis partner,
/// the single error parameter of the simulation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ChannelConfig {
    pub p_loss: f64,
    pub p_flip: f64,
}

impl ChannelConfig {
    pub fn new(p_loss: f64, p_flip: f64) -> Result<Self, Error> {
        if !(0.0..=1.0).contains(&p_loss) {
            return Err(Error::InvalidProbability {
                name: "p_loss",
                value: p_loss,
            });
        }
        if !(0.0..=1.0).contains(&p_flip) {
            return Err(Error::InvalidProbability {
                name: "p_flip",
                value: p_flip,
            });
        }
        Ok(Self { p_loss, p_flip })
    }

    /// Lossless, noiseless channel.
    pub fn ideal() -> Self {
        Self {
            p_loss: 0.0,
            p_flip: 0.0,
        }
    }

    pub fn is_ideal(&self) -> bool {
        self.p_loss == 0.0 && self.p_flip == 0.0
    }
}

impl Default for ChannelConfig {
    fn default() -> Self {
        Self::ideal()
    }
}

/// Encode a message bit as a photon: the value carries the bit, the basis is
/// chosen at random (`0` → |0⟩ or |+⟩, `1` → |1⟩ or |−⟩).
pub fn prepare_message_qubit(bit: bool, rng: &mut RandomSource) -> QubitState {
    let basis = if rng.coin() { Basis::X } else { Basis::Z };
    QubitState::from_parts(basis, bit)
}

/// Encode an identity bit as a photon: the basis carries the bit, the value is
/// chosen at random (`0` → |0⟩ or |1⟩, `1` → |+⟩ or |−⟩).
pub fn prepare_identity_qubit(bit: bool, rng: &mut RandomSource) -> QubitState {
    let basis = if bit { Basis::X } else { Basis::Z };
    QubitState::from_parts(basis, rng.coin())
}

/// Projective measurement of `state` in `basis`.
///
/// A same-basis measurement is deterministic and leaves the state unchanged.
/// A cross-basis measurement yields a uniform outcome and collapses the state
/// onto the measured basis.
pub fn measure(state: QubitState, basis: Basis, rng: &mut RandomSource) -> (bool, QubitState) {
    if basis.contains(state) {
        (state.value_bit(), state)
    } else {
        let outcome = rng.coin();
        (outcome, QubitState::from_parts(basis, outcome))
    }
}

/// The public per-photon announcement bit: `0` for |0⟩ and |+⟩, `1` for |1⟩
/// and |−⟩. Deliberately omits basis information.
pub fn announce_encoding(state: QubitState) -> bool {
    state.value_bit()
}

/// Send a photon through the channel. Returns `None` when the photon is lost;
/// otherwise the state arrives intact or flipped to its same-basis partner
/// with probability `p_flip`.
pub fn transmit(
    state: QubitState,
    channel: &ChannelConfig,
    rng: &mut RandomSource,
) -> Option<QubitState> {
    if rng.chance(channel.p_loss) {
        return None;
    }
    if rng.chance(channel.p_flip) {
        Some(state.partner())
    } else {
        Some(state)
    }
}
