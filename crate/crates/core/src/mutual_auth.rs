//! The hardened protocol with mutual authentication.
//!
//! The sender's identity string has even length; per session a random half
//! of its bits selects measurement bases and the other half supplies the
//! encoded values of a verification qubit block. The receiver, holding the
//! same string, checks the block before announcing anything, so an
//! impersonated sender is cut off before the identity announcement that the
//! two-phase attack feeds on. The message itself travels under a separate
//! pre-shared XOR key.

use serde::{Deserialize, Serialize};

use crate::attack::{AttackState, ConfidenceReport, Scene1Config};
use crate::bits::BitString;
use crate::error::Error;
use crate::protocol::{
    alice_verify, bob_process_identity, xor_crypt, Verdict, VerificationPolicy,
};
use crate::qubit::{
    announce_encoding, measure, prepare_identity_qubit, prepare_message_qubit, transmit, Basis,
    ChannelConfig, QubitState,
};
use crate::rng::RandomSource;

/// The secrets shared by both parties in the hardened protocol.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MutualSecrets {
    /// Sender identity string; even length 2ℓ, split per session into ℓ
    /// basis bits and ℓ value bits.
    pub sender_id: BitString,
    /// Receiver identity string, used exactly as in the original protocol.
    pub receiver_id: BitString,
    /// Message encryption key, same length as the message.
    pub shared_key: BitString,
}

impl MutualSecrets {
    pub fn new(
        sender_id: BitString,
        receiver_id: BitString,
        shared_key: BitString,
    ) -> Result<Self, Error> {
        if !sender_id.len().is_multiple_of(2) {
            return Err(Error::OddLength {
                context: "sender identity string",
                len: sender_id.len(),
            });
        }
        Ok(Self {
            sender_id,
            receiver_id,
            shared_key,
        })
    }

    pub fn random(
        verification_count: usize,
        receiver_len: usize,
        key_len: usize,
        rng: &mut RandomSource,
    ) -> Self {
        Self {
            sender_id: BitString::random(2 * verification_count, rng),
            receiver_id: BitString::random(receiver_len, rng),
            shared_key: BitString::random(key_len, rng),
        }
    }

    /// ℓ, the number of verification qubits per session.
    pub fn verification_count(&self) -> usize {
        self.sender_id.len() / 2
    }
}

/// The sender's verification block: which identity bits act as bases, which
/// as values, and the encoded qubits. The j-th basis index pairs with the
/// j-th value index.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AliceAuthBlock {
    pub basis_indices: Vec<usize>,
    pub value_indices: Vec<usize>,
    pub qubits: Vec<QubitState>,
}

fn encode_auth_qubit(sender_id: &BitString, basis_index: usize, value_index: usize) -> QubitState {
    let basis = if sender_id[basis_index] {
        Basis::X
    } else {
        Basis::Z
    };
    QubitState::from_parts(basis, sender_id[value_index])
}

/// Build a verification block from a fresh uniformly random half/half split
/// of the sender identity string.
pub fn build_alice_auth_block(
    sender_id: &BitString,
    rng: &mut RandomSource,
) -> Result<AliceAuthBlock, Error> {
    if !sender_id.len().is_multiple_of(2) {
        return Err(Error::OddLength {
            context: "sender identity string",
            len: sender_id.len(),
        });
    }
    let half = sender_id.len() / 2;
    let basis_indices = rng.subset(sender_id.len(), half);
    let mut is_basis = vec![false; sender_id.len()];
    for &i in &basis_indices {
        is_basis[i] = true;
    }
    let value_indices: Vec<usize> = (0..sender_id.len()).filter(|&i| !is_basis[i]).collect();
    let qubits = basis_indices
        .iter()
        .zip(&value_indices)
        .map(|(&b, &v)| encode_auth_qubit(sender_id, b, v))
        .collect();
    Ok(AliceAuthBlock {
        basis_indices,
        value_indices,
        qubits,
    })
}

/// Result of the receiver's check of the sender.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AuthCheck {
    pub verdict: Verdict,
    pub mismatch_rate: f64,
    /// Per verification qubit: whether the photon arrived.
    pub received: Vec<bool>,
}

/// The receiver measures each verification qubit in the basis dictated by
/// his own copy of the sender identity string and compares outcomes with
/// his copy's value bits.
///
/// An empty block (no verification configured) accepts vacuously: the
/// protocol degenerates to the original one. A nonempty block with no
/// arrivals rejects for lack of evidence.
pub fn bob_verify_alice(
    qubits: &[QubitState],
    basis_indices: &[usize],
    value_indices: &[usize],
    sender_id: &BitString,
    policy: &VerificationPolicy,
    channel: &ChannelConfig,
    rng: &mut RandomSource,
) -> Result<AuthCheck, Error> {
    if basis_indices.len() != qubits.len() || value_indices.len() != qubits.len() {
        return Err(Error::LengthMismatch {
            context: "bob_verify_alice: index lists vs qubits",
            expected: qubits.len(),
            actual: basis_indices.len().min(value_indices.len()),
        });
    }
    if let Some(&bad) = basis_indices
        .iter()
        .chain(value_indices)
        .find(|&&i| i >= sender_id.len())
    {
        return Err(Error::PositionOutOfBounds {
            position: bad,
            len: sender_id.len(),
        });
    }
    if qubits.is_empty() {
        return Ok(AuthCheck {
            verdict: Verdict::Accept,
            mismatch_rate: 0.0,
            received: Vec::new(),
        });
    }

    let mut received = Vec::with_capacity(qubits.len());
    let mut arrivals = 0usize;
    let mut mismatches = 0usize;
    for (j, &qubit) in qubits.iter().enumerate() {
        match transmit(qubit, channel, rng) {
            None => received.push(false),
            Some(arrived) => {
                received.push(true);
                arrivals += 1;
                let basis = if sender_id[basis_indices[j]] {
                    Basis::X
                } else {
                    Basis::Z
                };
                let (outcome, _) = measure(arrived, basis, rng);
                if outcome != sender_id[value_indices[j]] {
                    mismatches += 1;
                }
            }
        }
    }

    if arrivals == 0 {
        return Ok(AuthCheck {
            verdict: Verdict::Reject,
            mismatch_rate: 1.0,
            received,
        });
    }
    let mismatch_rate = mismatches as f64 / arrivals as f64;
    let verdict = if mismatch_rate <= policy.error_threshold {
        Verdict::Accept
    } else {
        Verdict::Reject
    };
    Ok(AuthCheck {
        verdict,
        mismatch_rate,
        received,
    })
}

/// Transcript of one hardened session.
///
/// Carries positions, the announced index pairing, and both verdicts, but
/// never raw qubit states or identity bits: everything here is safe to
/// publish.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MutualSessionRecord {
    pub message_len: usize,
    /// Wire positions of the sender-verification qubits.
    pub auth_positions: Vec<usize>,
    /// Wire positions of the receiver-identity qubits.
    pub identity_positions: Vec<usize>,
    /// Announced pairing: which sender-identity indices served as bases and
    /// values, in order. The bits at those indices stay secret.
    pub basis_indices: Vec<usize>,
    pub value_indices: Vec<usize>,
    /// The receiver's verdict on the sender.
    pub bob_verdict: Verdict,
    pub auth_mismatch_rate: f64,
    pub auth_received_mask: Vec<bool>,
    /// The sender's verdict on the receiver; absent when the session aborted
    /// before the receiver announced anything.
    pub alice_verdict: Option<Verdict>,
    pub mismatch_rate: Option<f64>,
    pub bob_announcement: Option<BitString>,
    pub received_mask: Option<Vec<bool>>,
    pub decrypted_message: Option<BitString>,
    pub message_erasures: Vec<usize>,
}

impl MutualSessionRecord {
    /// Both parties verified each other and the message was decrypted.
    pub fn completed(&self) -> bool {
        self.bob_verdict.is_accept()
            && self.alice_verdict == Some(Verdict::Accept)
            && self.decrypted_message.is_some()
    }
}

struct WireLayout {
    qubits: Vec<QubitState>,
    auth_positions: Vec<usize>,
    identity_positions: Vec<usize>,
}

/// Interleave the three subsequences uniformly over all arrangements that
/// preserve each subsequence's order.
fn interleave_three(
    message: Vec<QubitState>,
    identity: Vec<QubitState>,
    auth: Vec<QubitState>,
    rng: &mut RandomSource,
) -> WireLayout {
    let total = message.len() + identity.len() + auth.len();
    let auth_positions = rng.subset(total, auth.len());
    let mut taken = vec![false; total];
    for &p in &auth_positions {
        taken[p] = true;
    }
    let open: Vec<usize> = (0..total).filter(|&p| !taken[p]).collect();
    let identity_positions: Vec<usize> = rng
        .subset(open.len(), identity.len())
        .into_iter()
        .map(|rel| open[rel])
        .collect();
    for &p in &identity_positions {
        taken[p] = true;
    }

    let mut qubits = vec![QubitState::Z0; total];
    for (&p, q) in auth_positions.iter().zip(auth) {
        qubits[p] = q;
    }
    for (&p, q) in identity_positions.iter().zip(identity) {
        qubits[p] = q;
    }
    let mut msg_iter = message.into_iter();
    for (p, slot) in taken.iter().enumerate() {
        if !slot {
            qubits[p] = msg_iter.next().expect("message qubit count");
        }
    }
    WireLayout {
        qubits,
        auth_positions,
        identity_positions,
    }
}

/// One honest hardened session: the receiver checks the sender's
/// verification block first; only then does he measure and announce the
/// identity qubits, after which the session proceeds as in the original
/// protocol with the message encrypted under the shared key.
pub fn run_mutual_session(
    message: &BitString,
    secrets: &MutualSecrets,
    channel: &ChannelConfig,
    policy: &VerificationPolicy,
    rng: &mut RandomSource,
) -> Result<MutualSessionRecord, Error> {
    if message.len() != secrets.shared_key.len() {
        return Err(Error::LengthMismatch {
            context: "run_mutual_session: message vs shared key",
            expected: secrets.shared_key.len(),
            actual: message.len(),
        });
    }

    let ciphertext = xor_crypt(message, &secrets.shared_key)?;
    let message_qubits: Vec<QubitState> = ciphertext
        .iter()
        .map(|bit| prepare_message_qubit(bit, rng))
        .collect();
    let identity_qubits: Vec<QubitState> = secrets
        .receiver_id
        .iter()
        .map(|bit| prepare_identity_qubit(bit, rng))
        .collect();
    let auth = build_alice_auth_block(&secrets.sender_id, rng)?;

    let expected: BitString = identity_qubits.iter().map(|&q| announce_encoding(q)).collect();
    let wire = interleave_three(message_qubits, identity_qubits, auth.qubits.clone(), rng);

    let check = bob_verify_alice(
        &auth.qubits,
        &auth.basis_indices,
        &auth.value_indices,
        &secrets.sender_id,
        policy,
        channel,
        rng,
    )?;

    let mut record = MutualSessionRecord {
        message_len: message.len(),
        auth_positions: wire.auth_positions,
        identity_positions: wire.identity_positions.clone(),
        basis_indices: auth.basis_indices,
        value_indices: auth.value_indices,
        bob_verdict: check.verdict,
        auth_mismatch_rate: check.mismatch_rate,
        auth_received_mask: check.received,
        alice_verdict: None,
        mismatch_rate: None,
        bob_announcement: None,
        received_mask: None,
        decrypted_message: None,
        message_erasures: Vec::new(),
    };
    if !check.verdict.is_accept() {
        return Ok(record);
    }

    let (announcement, received_mask) = bob_process_identity(
        &wire.qubits,
        &wire.identity_positions,
        &secrets.receiver_id,
        channel,
        rng,
    )?;
    let (alice_verdict, mismatch_rate) =
        alice_verify(&announcement, &expected, &received_mask, policy)?;
    record.alice_verdict = Some(alice_verdict);
    record.mismatch_rate = Some(mismatch_rate);
    record.bob_announcement = Some(announcement);
    record.received_mask = Some(received_mask);

    if alice_verdict.is_accept() {
        let mut recovered = BitString::default();
        let mut erasures = Vec::new();
        let mut taken = vec![false; wire.qubits.len()];
        for &p in record
            .auth_positions
            .iter()
            .chain(&record.identity_positions)
        {
            taken[p] = true;
        }
        let message_positions = (0..wire.qubits.len()).filter(|&p| !taken[p]);
        for (i, p) in message_positions.enumerate() {
            let qubit = wire.qubits[p];
            match transmit(qubit, channel, rng) {
                None => {
                    erasures.push(i);
                    recovered.push(false);
                }
                Some(arrived) => {
                    let (bit, _) = measure(arrived, qubit.basis(), rng);
                    recovered.push(bit);
                }
            }
        }
        record.decrypted_message = Some(xor_crypt(&recovered, &secrets.shared_key)?);
        record.message_erasures = erasures;
    }
    Ok(record)
}

/// Statistics from running the phase-one identity-inference loop against the
/// hardened protocol.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MutualAttackOutcome {
    pub sessions: u32,
    /// Sessions the receiver cut off at the sender check.
    pub aborted_sessions: u32,
    /// Sessions where the fake sender slipped through.
    pub deceived_sessions: u32,
    /// Identity-announcement bits the attacker observed in total.
    pub announcement_bits_seen: u64,
    /// Announcement bits observed in aborted sessions; the abort precedes
    /// any announcement, so this stays zero.
    pub aborted_session_bits_seen: u64,
    pub final_state: AttackState,
    pub confidence: ConfidenceReport,
}

/// Run the identity-inference loop against the hardened protocol. Without
/// the sender identity string the attacker can only send random
/// verification qubits under random index lists, so the receiver aborts
/// before announcing and no candidate bit ever gains evidence.
pub fn scene1_attack_mutual(
    secrets: &MutualSecrets,
    initial_candidate: &BitString,
    config: &Scene1Config,
    policy: &VerificationPolicy,
    channel: &ChannelConfig,
    rng: &mut RandomSource,
) -> Result<MutualAttackOutcome, Error> {
    if initial_candidate.len() != secrets.receiver_id.len() {
        return Err(Error::LengthMismatch {
            context: "scene1_attack_mutual: candidate vs receiver identity",
            expected: secrets.receiver_id.len(),
            actual: initial_candidate.len(),
        });
    }

    let verification_count = secrets.verification_count();
    let mut state = AttackState::new(initial_candidate.clone());
    let mut aborted = 0u32;
    let mut deceived = 0u32;
    let mut bits_seen = 0u64;
    // The receiver announces nothing before his sender check passes, so
    // aborted sessions contribute no observable bits.
    let aborted_bits_seen = 0u64;

    for _ in 0..config.iterations {
        let sent = crate::attack::oscar_prepare(&state.candidate);

        // Fake verification block: random states under a random split of
        // indices the attacker cannot tie to the unknown identity bits.
        let fake_qubits: Vec<QubitState> =
            (0..verification_count).map(|_| QubitState::random(rng)).collect();
        let fake_basis = rng.subset(2 * verification_count, verification_count);
        let mut is_basis = vec![false; 2 * verification_count];
        for &i in &fake_basis {
            is_basis[i] = true;
        }
        let fake_value: Vec<usize> = (0..2 * verification_count)
            .filter(|&i| !is_basis[i])
            .collect();

        let decoys: Vec<QubitState> = (0..config.decoy_len)
            .map(|_| QubitState::random(rng))
            .collect();
        let wire = interleave_three(decoys, sent.clone(), fake_qubits.clone(), rng);

        let check = bob_verify_alice(
            &fake_qubits,
            &fake_basis,
            &fake_value,
            &secrets.sender_id,
            policy,
            channel,
            rng,
        )?;
        if !check.verdict.is_accept() {
            aborted += 1;
            state.iterations_run += 1;
            continue;
        }

        deceived += 1;
        let (announcement, received_mask) = bob_process_identity(
            &wire.qubits,
            &wire.identity_positions,
            &secrets.receiver_id,
            channel,
            rng,
        )?;
        bits_seen += announcement.len() as u64;
        state.iterations_run += 1;
        crate::attack::apply_round(
            &mut state,
            &sent,
            &announcement,
            &received_mask,
            &config.flip_policy,
        );
    }

    let confidence = ConfidenceReport::from_state(&state);
    Ok(MutualAttackOutcome {
        sessions: config.iterations,
        aborted_sessions: aborted,
        deceived_sessions: deceived,
        announcement_bits_seen: bits_seen,
        aborted_session_bits_seen: aborted_bits_seen,
        final_state: state,
        confidence,
    })
}

/// Session-to-session bookkeeping for the verification qubits across
/// retransmissions: a qubit lost once is re-sent under a different basis
/// pairing; a qubit lost twice is discarded.
#[derive(Debug, Clone, PartialEq)]
pub struct RetryTracker {
    /// (basis index, value index) pairs of the previous session.
    last_pairing: Vec<(usize, usize)>,
    /// Loss counts keyed by value index, in `last_pairing` order.
    loss_counts: Vec<u32>,
}

impl RetryTracker {
    pub fn new(block: &AliceAuthBlock) -> Self {
        let last_pairing = block
            .basis_indices
            .iter()
            .copied()
            .zip(block.value_indices.iter().copied())
            .collect::<Vec<_>>();
        let loss_counts = vec![0; last_pairing.len()];
        Self {
            last_pairing,
            loss_counts,
        }
    }

    /// Record which verification photons of the previous session arrived.
    pub fn record_losses(&mut self, received: &[bool]) {
        for (count, &arrived) in self.loss_counts.iter_mut().zip(received) {
            if !arrived {
                *count += 1;
            }
        }
    }

    /// Value indices that must never be sent again.
    pub fn discarded(&self) -> Vec<usize> {
        self.last_pairing
            .iter()
            .zip(&self.loss_counts)
            .filter(|(_, &losses)| losses >= 2)
            .map(|(&(_, value), _)| value)
            .collect()
    }

    /// Build the next session's verification block.
    ///
    /// Discarded qubits are dropped together with their last basis partner.
    /// With `derange` set, no surviving qubit keeps its previous basis
    /// index; otherwise only qubits lost in the previous session are forced
    /// onto a new one.
    pub fn next_block(
        &mut self,
        sender_id: &BitString,
        derange: bool,
        rng: &mut RandomSource,
    ) -> Result<AliceAuthBlock, Error> {
        let keep: Vec<usize> = (0..self.last_pairing.len())
            .filter(|&j| self.loss_counts[j] < 2)
            .collect();
        let value_order: Vec<usize> = keep.iter().map(|&j| self.last_pairing[j].1).collect();
        let mut basis_pool: Vec<usize> = keep.iter().map(|&j| self.last_pairing[j].0).collect();
        let previous_basis: Vec<usize> = basis_pool.clone();
        let must_change: Vec<bool> = keep.iter().map(|&j| self.loss_counts[j] >= 1).collect();

        let satisfies = |pool: &[usize]| {
            pool.iter().enumerate().all(|(j, &b)| {
                if derange || must_change[j] {
                    b != previous_basis[j]
                } else {
                    true
                }
            })
        };

        if !satisfies(&basis_pool) {
            let mut ok = false;
            for _ in 0..10_000 {
                rng.shuffle(&mut basis_pool);
                if satisfies(&basis_pool) {
                    ok = true;
                    break;
                }
            }
            if !ok {
                return Err(Error::RepairingImpossible {
                    len: basis_pool.len(),
                });
            }
        }

        let qubits = basis_pool
            .iter()
            .zip(&value_order)
            .map(|(&b, &v)| encode_auth_qubit(sender_id, b, v))
            .collect();
        // Loss history follows each surviving qubit into its new slot.
        self.loss_counts = keep.iter().map(|&j| self.loss_counts[j]).collect();
        self.last_pairing = basis_pool
            .iter()
            .copied()
            .zip(value_order.iter().copied())
            .collect();
        Ok(AliceAuthBlock {
            basis_indices: basis_pool,
            value_indices: value_order,
            qubits,
        })
    }
}
