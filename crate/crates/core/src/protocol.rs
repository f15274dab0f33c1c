//! The unidirectional-authentication direct-communication protocol.
//!
//! Alice XOR-encrypts her message with her identity string, encodes the
//! ciphertext as value qubits and the receiver's identity string as basis
//! qubits, interleaves both sequences at random, and verifies the receiver
//! through the per-photon value announcement before revealing the message
//! bases.

use serde::{Deserialize, Serialize};

use crate::bits::BitString;
use crate::error::Error;
use crate::qubit::{
    announce_encoding, measure, prepare_identity_qubit, prepare_message_qubit, transmit, Basis,
    ChannelConfig, QubitState,
};
use crate::rng::RandomSource;

/// Default mismatch-rate threshold for receiver verification.
pub const DEFAULT_ERROR_THRESHOLD: f64 = 0.02;

/// The on-the-wire qubit sequence: ciphertext qubits with identity qubits
/// spliced in at recorded positions.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InterleavedSequence {
    pub qubits: Vec<QubitState>,
    /// Ascending positions of the identity qubits within `qubits`.
    pub identity_positions: Vec<usize>,
}

impl InterleavedSequence {
    /// The identity subsequence, in original order.
    pub fn identity_qubits(&self) -> Vec<QubitState> {
        self.identity_positions
            .iter()
            .map(|&p| self.qubits[p])
            .collect()
    }

    /// The ciphertext subsequence, in original order.
    pub fn message_qubits(&self) -> Vec<QubitState> {
        self.message_positions()
            .into_iter()
            .map(|p| self.qubits[p])
            .collect()
    }

    /// Positions not occupied by identity qubits, ascending.
    pub fn message_positions(&self) -> Vec<usize> {
        let mut is_identity = vec![false; self.qubits.len()];
        for &p in &self.identity_positions {
            is_identity[p] = true;
        }
        (0..self.qubits.len()).filter(|&p| !is_identity[p]).collect()
    }
}

/// Acceptance threshold for identity verification.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct VerificationPolicy {
    /// Maximum tolerated announcement mismatch rate, inclusive.
    pub error_threshold: f64,
}

impl VerificationPolicy {
    pub fn new(error_threshold: f64) -> Result<Self, Error> {
        if !(0.0..=1.0).contains(&error_threshold) {
            return Err(Error::InvalidProbability {
                name: "error_threshold",
                value: error_threshold,
            });
        }
        Ok(Self { error_threshold })
    }
}

impl Default for VerificationPolicy {
    fn default() -> Self {
        Self {
            error_threshold: DEFAULT_ERROR_THRESHOLD,
        }
    }
}

/// Outcome of an identity verification.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Verdict {
    Accept,
    Reject,
}

impl Verdict {
    pub fn is_accept(self) -> bool {
        self == Verdict::Accept
    }
}

/// Full transcript of one protocol session.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SessionRecord {
    /// The sequence Alice put on the wire, before channel effects.
    pub sent: InterleavedSequence,
    /// Value announcement for received identity photons, in order.
    pub bob_announcement: BitString,
    /// Alice's expected announcement for all identity photons.
    pub alice_expected: BitString,
    /// Mismatch rate over received identity photons.
    pub mismatch_rate: f64,
    pub alice_verdict: Verdict,
    /// Per-identity-photon arrival flags.
    pub received_mask: Vec<bool>,
    /// Present only when Alice accepted and the session ran to decryption.
    pub decrypted_message: Option<BitString>,
    /// Message positions whose photon was lost; the corresponding decrypted
    /// bits are reported as 0 and carry no information.
    pub message_erasures: Vec<usize>,
}

/// Bitwise XOR encryption/decryption. Involutive.
pub fn xor_crypt(data: &BitString, key: &BitString) -> Result<BitString, Error> {
    data.xor(key)
}

/// Prepare the ciphertext and identity qubit sequences and interleave them,
/// with the identity positions uniform over all arrangements that preserve
/// both subsequence orders.
pub fn build_sequences(
    ciphertext: &BitString,
    receiver_id: &BitString,
    rng: &mut RandomSource,
) -> InterleavedSequence {
    let message: Vec<QubitState> = ciphertext
        .iter()
        .map(|bit| prepare_message_qubit(bit, rng))
        .collect();
    let identity: Vec<QubitState> = receiver_id
        .iter()
        .map(|bit| prepare_identity_qubit(bit, rng))
        .collect();

    let total = message.len() + identity.len();
    let identity_positions = rng.subset(total, identity.len());

    let mut qubits = Vec::with_capacity(total);
    let mut id_iter = identity.into_iter();
    let mut msg_iter = message.into_iter();
    let mut next_id = identity_positions.iter().copied().peekable();
    for pos in 0..total {
        if next_id.peek() == Some(&pos) {
            next_id.next();
            qubits.push(id_iter.next().expect("identity qubit count"));
        } else {
            qubits.push(msg_iter.next().expect("message qubit count"));
        }
    }

    InterleavedSequence {
        qubits,
        identity_positions,
    }
}

/// The announcement Alice expects: the value encoding of the identity qubits
/// she originally prepared.
pub fn expected_announcement(sequence: &InterleavedSequence) -> BitString {
    sequence
        .identity_qubits()
        .into_iter()
        .map(announce_encoding)
        .collect()
}

/// Bob's half of the verification round: receive the announced identity
/// photons through the channel, measure each arrival in the basis selected by
/// his identity bit, and announce the value encoding of the outcomes.
///
/// Lost photons contribute no announcement bit and a `false` entry in the
/// returned arrival mask.
pub fn bob_process_identity(
    wire: &[QubitState],
    positions: &[usize],
    receiver_id: &BitString,
    channel: &ChannelConfig,
    rng: &mut RandomSource,
) -> Result<(BitString, Vec<bool>), Error> {
    if positions.len() != receiver_id.len() {
        return Err(Error::LengthMismatch {
            context: "bob_process_identity: positions vs identity bits",
            expected: receiver_id.len(),
            actual: positions.len(),
        });
    }
    if let Some(&bad) = positions.iter().find(|&&p| p >= wire.len()) {
        return Err(Error::PositionOutOfBounds {
            position: bad,
            len: wire.len(),
        });
    }

    let mut announcement = BitString::default();
    let mut received_mask = Vec::with_capacity(positions.len());
    for (&pos, id_bit) in positions.iter().zip(receiver_id.iter()) {
        match transmit(wire[pos], channel, rng) {
            None => received_mask.push(false),
            Some(arrived) => {
                let basis = if id_bit { Basis::X } else { Basis::Z };
                let (_, collapsed) = measure(arrived, basis, rng);
                announcement.push(announce_encoding(collapsed));
                received_mask.push(true);
            }
        }
    }
    Ok((announcement, received_mask))
}

/// Alice's verification: compare the announcement against her expectation
/// over received photons and accept iff the mismatch rate does not exceed
/// the threshold.
///
/// With zero received photons there is no evidence of legitimacy: the
/// verdict is reject and the reported rate is 1.0.
pub fn alice_verify(
    announcement: &BitString,
    expected: &BitString,
    received_mask: &[bool],
    policy: &VerificationPolicy,
) -> Result<(Verdict, f64), Error> {
    if expected.len() != received_mask.len() {
        return Err(Error::LengthMismatch {
            context: "alice_verify: expected vs received mask",
            expected: received_mask.len(),
            actual: expected.len(),
        });
    }
    let received = received_mask.iter().filter(|&&r| r).count();
    if announcement.len() != received {
        return Err(Error::AnnouncementMisaligned {
            received,
            announced: announcement.len(),
        });
    }
    if received == 0 {
        return Ok((Verdict::Reject, 1.0));
    }

    let mut announced = announcement.iter();
    let mut mismatches = 0usize;
    for (expected_bit, &arrived) in expected.iter().zip(received_mask) {
        if arrived && announced.next().expect("announcement length checked") != expected_bit {
            mismatches += 1;
        }
    }
    let rate = mismatches as f64 / received as f64;
    let verdict = if rate <= policy.error_threshold {
        Verdict::Accept
    } else {
        Verdict::Reject
    };
    Ok((verdict, rate))
}

/// One honest end-to-end session: encryption, sequence construction,
/// receiver verification, and (on accept) basis announcement and decryption.
pub fn run_session(
    message: &BitString,
    sender_id: &BitString,
    receiver_id: &BitString,
    channel: &ChannelConfig,
    policy: &VerificationPolicy,
    rng: &mut RandomSource,
) -> Result<SessionRecord, Error> {
    if message.len() != sender_id.len() {
        return Err(Error::LengthMismatch {
            context: "run_session: message vs sender identity",
            expected: message.len(),
            actual: sender_id.len(),
        });
    }

    let ciphertext = xor_crypt(message, sender_id)?;
    let sent = build_sequences(&ciphertext, receiver_id, rng);

    let (bob_announcement, received_mask) = bob_process_identity(
        &sent.qubits,
        &sent.identity_positions,
        receiver_id,
        channel,
        rng,
    )?;
    let alice_expected = expected_announcement(&sent);
    let (alice_verdict, mismatch_rate) =
        alice_verify(&bob_announcement, &alice_expected, &received_mask, policy)?;

    let mut decrypted_message = None;
    let mut message_erasures = Vec::new();
    if alice_verdict.is_accept() {
        // Alice announces the preparation bases; Bob measures each arrival
        // in the announced basis and decrypts with the sender identity.
        let mut recovered = BitString::default();
        for (i, qubit) in sent.message_qubits().into_iter().enumerate() {
            match transmit(qubit, channel, rng) {
                None => {
                    message_erasures.push(i);
                    recovered.push(false);
                }
                Some(arrived) => {
                    let (bit, _) = measure(arrived, qubit.basis(), rng);
                    recovered.push(bit);
                }
            }
        }
        decrypted_message = Some(xor_crypt(&recovered, sender_id)?);
    }

    Ok(SessionRecord {
        sent,
        bob_announcement,
        alice_expected,
        mismatch_rate,
        alice_verdict,
        received_mask,
        decrypted_message,
        message_erasures,
    })
}
