//! The two-phase identity-recovery attack.
//!
//! Phase one ("scene 1"): Oscar impersonates the sender. He keeps a candidate
//! for the receiver's identity string, encodes it with a deterministic
//! state map, and uses the receiver's own value announcements to detect and
//! flip wrong candidate bits across repeated fake sessions. Phase two
//! ("scene 2"): armed with the recovered identity string, Oscar impersonates
//! the receiver in a real session, passes verification, reads the ciphertext
//! off the announced bases, and breaks the XOR encryption to obtain the
//! sender's identity string.

use serde::{Deserialize, Serialize};

use crate::bits::BitString;
use crate::error::Error;
use crate::protocol::{
    alice_verify, bob_process_identity, build_sequences, expected_announcement, xor_crypt,
    Verdict, VerificationPolicy,
};
use crate::qubit::{announce_encoding, measure, transmit, ChannelConfig, QubitState};
use crate::rng::RandomSource;

/// Oscar's evolving knowledge of the receiver's identity string.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AttackState {
    /// Current candidate identity string.
    pub candidate: BitString,
    /// Per bit: consecutive observations with no mismatch since the last flip.
    pub match_count: Vec<u32>,
    /// Fake sessions run so far.
    pub iterations_run: u32,
    /// Per bit: whether the bit was ever flipped on observed evidence.
    pub ever_flipped: Vec<bool>,
    /// Per bit: mismatches observed since the last flip.
    pub mismatch_count: Vec<u32>,
    /// Per bit: announcements observed since the last flip (lost photons
    /// yield no observation).
    pub observation_count: Vec<u32>,
}

impl AttackState {
    pub fn new(initial_candidate: BitString) -> Self {
        let len = initial_candidate.len();
        Self {
            candidate: initial_candidate,
            match_count: vec![0; len],
            iterations_run: 0,
            ever_flipped: vec![false; len],
            mismatch_count: vec![0; len],
            observation_count: vec![0; len],
        }
    }

    pub fn id_len(&self) -> usize {
        self.candidate.len()
    }

    fn reset_counters(&mut self, i: usize) {
        self.match_count[i] = 0;
        self.mismatch_count[i] = 0;
        self.observation_count[i] = 0;
    }
}

/// When a candidate bit is flipped on mismatch evidence.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub enum FlipPolicy {
    /// Flip on the first mismatching announcement. Optimal on a clean
    /// channel, where a correct bit never mismatches.
    #[default]
    FirstMismatch,
    /// Flip once the mismatch fraction exceeds `flip_fraction` with at least
    /// `min_observations` announcements since the last flip. Tolerates
    /// channel noise at the cost of more iterations.
    MajorityVote {
        flip_fraction: f64,
        min_observations: u32,
    },
}

impl FlipPolicy {
    pub fn majority_default() -> Self {
        FlipPolicy::MajorityVote {
            flip_fraction: 0.25,
            min_observations: 4,
        }
    }
}

/// Parameters of a phase-one run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Scene1Config {
    /// Number of fake sessions (k).
    pub iterations: u32,
    /// Length of the random decoy sequence Oscar mixes his identity qubits
    /// into; its measured values are never used.
    pub decoy_len: usize,
    pub flip_policy: FlipPolicy,
}

impl Scene1Config {
    pub fn new(iterations: u32, decoy_len: usize) -> Self {
        Self {
            iterations,
            decoy_len,
            flip_policy: FlipPolicy::FirstMismatch,
        }
    }
}

/// One observation in the per-iteration mismatch log.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IterationEntry {
    pub iteration: u32,
    pub position: usize,
    pub sent_state: QubitState,
    /// Value bit the receiver announced; absent when the photon was lost.
    pub announced_bit: Option<bool>,
    pub flipped: bool,
}

/// Render a mismatch log as CSV.
pub fn iteration_log_csv(entries: &[IterationEntry]) -> String {
    let mut out = String::from("iteration,position,sent_state,announced_bit,flipped\n");
    for e in entries {
        let announced = match e.announced_bit {
            Some(true) => "1",
            Some(false) => "0",
            None => "",
        };
        out.push_str(&format!(
            "{},{},{:?},{},{}\n",
            e.iteration, e.position, e.sent_state, announced, e.flipped
        ));
    }
    out
}

/// Confidence that the candidate equals the true identity string.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConfidenceReport {
    /// Per bit: 1 − 2^{−m} with m clean observations for never-flipped bits;
    /// 1 for bits corrected on observed evidence.
    pub per_bit_confidence: Vec<f64>,
    /// Product of the per-bit confidences of the never-flipped bits.
    pub overall_confidence: f64,
    /// Number of never-flipped (unconfirmed) bits.
    pub unconfirmed_count: usize,
}

impl ConfidenceReport {
    pub fn from_state(state: &AttackState) -> Self {
        let per_bit_confidence: Vec<f64> = (0..state.id_len())
            .map(|i| {
                if state.ever_flipped[i] {
                    1.0
                } else {
                    1.0 - 0.5f64.powi(state.match_count[i] as i32)
                }
            })
            .collect();
        let overall_confidence = per_bit_confidence
            .iter()
            .zip(&state.ever_flipped)
            .filter(|(_, &flipped)| !flipped)
            .map(|(c, _)| c)
            .product();
        let unconfirmed_count = state.ever_flipped.iter().filter(|&&f| !f).count();
        Self {
            per_bit_confidence,
            overall_confidence,
            unconfirmed_count,
        }
    }
}

/// Oscar's deterministic identity encoding: bit 0 → |0⟩, bit 1 → |−⟩.
///
/// Either state announces back its own value when the receiver holds the
/// matching identity bit, and yields a uniform announcement otherwise.
pub fn oscar_prepare(candidate: &BitString) -> Vec<QubitState> {
    candidate
        .iter()
        .map(|bit| if bit { QubitState::X1 } else { QubitState::Z0 })
        .collect()
}

/// Update the attack state from one announcement round, without logging.
/// Shared with the attack runs against the hardened protocol.
pub(crate) fn apply_round(
    state: &mut AttackState,
    sent: &[QubitState],
    announcement: &BitString,
    received_mask: &[bool],
    policy: &FlipPolicy,
) {
    apply_announcement(state, sent, announcement, received_mask, policy, None);
}

/// Update the attack state from one announcement round. Returns log entries
/// when a sink is supplied.
fn apply_announcement(
    state: &mut AttackState,
    sent: &[QubitState],
    announcement: &BitString,
    received_mask: &[bool],
    policy: &FlipPolicy,
    mut log: Option<(&mut Vec<IterationEntry>, u32)>,
) {
    let mut announced_bits = announcement.iter();
    for (i, &sent_state) in sent.iter().enumerate() {
        let announced_bit = if received_mask[i] {
            Some(announced_bits.next().expect("announcement aligned with mask"))
        } else {
            None
        };
        let mut flipped = false;
        if let Some(bit) = announced_bit {
            let mismatch = bit != announce_encoding(sent_state);
            match *policy {
                FlipPolicy::FirstMismatch => {
                    if mismatch {
                        state.candidate.flip(i);
                        state.ever_flipped[i] = true;
                        state.reset_counters(i);
                        flipped = true;
                    } else {
                        state.match_count[i] += 1;
                        state.observation_count[i] += 1;
                    }
                }
                FlipPolicy::MajorityVote {
                    flip_fraction,
                    min_observations,
                } => {
                    state.observation_count[i] += 1;
                    if mismatch {
                        state.mismatch_count[i] += 1;
                        state.match_count[i] = 0;
                    } else {
                        state.match_count[i] += 1;
                    }
                    let rate = state.mismatch_count[i] as f64 / state.observation_count[i] as f64;
                    if state.observation_count[i] >= min_observations && rate > flip_fraction {
                        state.candidate.flip(i);
                        state.ever_flipped[i] = true;
                        state.reset_counters(i);
                        flipped = true;
                    }
                }
            }
        }
        if let Some((entries, iteration)) = log.as_mut() {
            entries.push(IterationEntry {
                iteration: *iteration,
                position: i,
                sent_state,
                announced_bit,
                flipped,
            });
        }
    }
}

fn iteration_inner(
    state: &mut AttackState,
    true_receiver_id: &BitString,
    decoy_len: usize,
    policy: &FlipPolicy,
    channel: &ChannelConfig,
    rng: &mut RandomSource,
    log: Option<&mut Vec<IterationEntry>>,
) -> Result<(), Error> {
    if state.id_len() != true_receiver_id.len() {
        return Err(Error::LengthMismatch {
            context: "scene1_iteration: candidate vs receiver identity",
            expected: true_receiver_id.len(),
            actual: state.id_len(),
        });
    }

    let sent = oscar_prepare(&state.candidate);
    let total = sent.len() + decoy_len;
    let positions = rng.subset(total, sent.len());
    let mut wire = Vec::with_capacity(total);
    let mut id_iter = sent.iter().copied();
    let mut next_id = positions.iter().copied().peekable();
    for pos in 0..total {
        if next_id.peek() == Some(&pos) {
            next_id.next();
            wire.push(id_iter.next().expect("identity qubit count"));
        } else {
            wire.push(QubitState::random(rng));
        }
    }

    let (announcement, received_mask) =
        bob_process_identity(&wire, &positions, true_receiver_id, channel, rng)?;

    state.iterations_run += 1;
    let iteration = state.iterations_run;
    apply_announcement(
        state,
        &sent,
        &announcement,
        &received_mask,
        policy,
        log.map(|entries| (entries, iteration)),
    );
    Ok(())
}

/// One fake session: Oscar sends his encoded candidate inside a decoy
/// sequence, the receiver measures and announces per his real identity
/// string, and Oscar flips candidate bits that produced mismatching
/// announcements.
pub fn scene1_iteration(
    state: &mut AttackState,
    true_receiver_id: &BitString,
    config: &Scene1Config,
    channel: &ChannelConfig,
    rng: &mut RandomSource,
) -> Result<(), Error> {
    iteration_inner(
        state,
        true_receiver_id,
        config.decoy_len,
        &config.flip_policy,
        channel,
        rng,
        None,
    )
}

/// Run `config.iterations` fake sessions from `initial_candidate` and report
/// the refined candidate with its confidence.
pub fn scene1_run(
    true_receiver_id: &BitString,
    initial_candidate: &BitString,
    config: &Scene1Config,
    channel: &ChannelConfig,
    rng: &mut RandomSource,
) -> Result<(AttackState, ConfidenceReport), Error> {
    let mut state = AttackState::new(initial_candidate.clone());
    for _ in 0..config.iterations {
        scene1_iteration(&mut state, true_receiver_id, config, channel, rng)?;
    }
    let report = ConfidenceReport::from_state(&state);
    Ok((state, report))
}

/// As [`scene1_run`], additionally collecting the full mismatch log.
pub fn scene1_run_logged(
    true_receiver_id: &BitString,
    initial_candidate: &BitString,
    config: &Scene1Config,
    channel: &ChannelConfig,
    rng: &mut RandomSource,
) -> Result<(AttackState, ConfidenceReport, Vec<IterationEntry>), Error> {
    let mut state = AttackState::new(initial_candidate.clone());
    let mut log = Vec::with_capacity(config.iterations as usize * state.id_len());
    for _ in 0..config.iterations {
        iteration_inner(
            &mut state,
            true_receiver_id,
            config.decoy_len,
            &config.flip_policy,
            channel,
            rng,
            Some(&mut log),
        )?;
    }
    let report = ConfidenceReport::from_state(&state);
    Ok((state, report, log))
}

/// Outcome of an interception attempt.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Scene2Outcome {
    pub alice_verdict: Verdict,
    /// The ciphertext Oscar read off the announced bases; present only when
    /// the sender accepted.
    pub recovered_ciphertext: Option<BitString>,
    /// Ciphertext positions lost in transit (bits reported as 0).
    pub erasures: Vec<usize>,
}

/// Phase two: Oscar answers the sender's verification round in the
/// receiver's place using his recovered identity string. On acceptance the
/// sender announces the ciphertext bases and Oscar measures the ciphertext
/// exactly.
pub fn scene2_intercept(
    message: &BitString,
    sender_id: &BitString,
    true_receiver_id: &BitString,
    oscar_receiver_id: &BitString,
    channel: &ChannelConfig,
    policy: &VerificationPolicy,
    rng: &mut RandomSource,
) -> Result<Scene2Outcome, Error> {
    if oscar_receiver_id.len() != true_receiver_id.len() {
        return Err(Error::LengthMismatch {
            context: "scene2_intercept: candidate vs receiver identity",
            expected: true_receiver_id.len(),
            actual: oscar_receiver_id.len(),
        });
    }

    let ciphertext = xor_crypt(message, sender_id)?;
    let sent = build_sequences(&ciphertext, true_receiver_id, rng);

    let (announcement, received_mask) = bob_process_identity(
        &sent.qubits,
        &sent.identity_positions,
        oscar_receiver_id,
        channel,
        rng,
    )?;
    let expected = expected_announcement(&sent);
    let (alice_verdict, _) = alice_verify(&announcement, &expected, &received_mask, policy)?;

    let mut recovered_ciphertext = None;
    let mut erasures = Vec::new();
    if alice_verdict.is_accept() {
        let mut recovered = BitString::default();
        for (i, qubit) in sent.message_qubits().into_iter().enumerate() {
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
        recovered_ciphertext = Some(recovered);
    }

    Ok(Scene2Outcome {
        alice_verdict,
        recovered_ciphertext,
        erasures,
    })
}

/// Recover the XOR key from a ciphertext and its known plaintext.
pub fn xor_recover_known_plaintext(
    ciphertext: &BitString,
    message: &BitString,
) -> Result<BitString, Error> {
    ciphertext.xor(message)
}

/// Statistical model of the plaintexts available to the attacker.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum PlaintextModel {
    /// The attacker knows the plaintext of one intercepted message.
    KnownPlaintext,
    /// Plaintext bits are independently 0 with probability `bias` > 1/2.
    BiasedBits { bias: f64 },
}

impl PlaintextModel {
    pub fn validate(&self) -> Result<(), Error> {
        if let PlaintextModel::BiasedBits { bias } = *self {
            if !(bias > 0.5 && bias <= 1.0) {
                return Err(Error::InvalidProbability {
                    name: "bias",
                    value: bias,
                });
            }
        }
        Ok(())
    }
}

/// Estimate the XOR key from ciphertexts of biased plaintexts under the same
/// key: since plaintext bits are 0 with probability above one half, each
/// ciphertext bit equals the key bit with that same probability, so the key
/// bit is the per-position majority vote (ties toward 0).
///
/// Returns the estimate and, per position, the fraction of ciphertexts that
/// voted for the estimated bit.
pub fn xor_recover_biased(
    ciphertexts: &[BitString],
    model: &PlaintextModel,
) -> Result<(BitString, Vec<f64>), Error> {
    model.validate()?;
    if !matches!(model, PlaintextModel::BiasedBits { .. }) {
        return Err(Error::WrongPlaintextModel);
    }
    let first = ciphertexts.first().ok_or(Error::EmptyCiphertextList)?;
    let len = first.len();
    if let Some(bad) = ciphertexts.iter().find(|c| c.len() != len) {
        return Err(Error::LengthMismatch {
            context: "xor_recover_biased: ciphertext lengths",
            expected: len,
            actual: bad.len(),
        });
    }

    let n = ciphertexts.len();
    let mut key_estimate = BitString::default();
    let mut per_bit_majority = Vec::with_capacity(len);
    for i in 0..len {
        let ones = ciphertexts.iter().filter(|c| c[i]).count();
        let bit = 2 * ones > n;
        key_estimate.push(bit);
        let votes = if bit { ones } else { n - ones };
        per_bit_majority.push(votes as f64 / n as f64);
    }
    Ok((key_estimate, per_bit_majority))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rng(seed: u64) -> RandomSource {
        RandomSource::from_seed(seed)
    }

    fn ideal() -> ChannelConfig {
        ChannelConfig::ideal()
    }

    #[test]
    fn oscar_prepare_state_map() {
        let candidate: BitString = "01".parse().unwrap();
        assert_eq!(
            oscar_prepare(&candidate),
            vec![QubitState::Z0, QubitState::X1]
        );
        assert!(oscar_prepare(&BitString::default()).is_empty());
        assert_eq!(
            oscar_prepare(&BitString::zeros(5)),
            vec![QubitState::Z0; 5]
        );
    }

    // A correct candidate bit never produces a mismatch on a clean channel:
    // either encoding is measured in its own basis and announces itself.
    #[test]
    fn correct_bits_are_silent() {
        let mut r = rng(40);
        let true_id: BitString = "0110".parse().unwrap();
        let mut state = AttackState::new(true_id.clone());
        let config = Scene1Config::new(0, 4);
        for _ in 0..50 {
            scene1_iteration(&mut state, &true_id, &config, &ideal(), &mut r).unwrap();
        }
        assert_eq!(state.candidate, true_id);
        assert!(state.ever_flipped.iter().all(|&f| !f));
        assert!(state.match_count.iter().all(|&m| m == 50));
    }

    // Exact enumeration: a wrong bit sends |0⟩ against basis X or |−⟩
    // against basis Z; each collapses to the mismatching announcement in
    // exactly 1 of its 2 equally likely outcomes, so the per-iteration flip
    // probability is 1/2.
    #[test]
    fn wrong_bit_flips_with_probability_half() {
        let mut r = rng(41);
        let true_id: BitString = "1".parse().unwrap();
        let config = Scene1Config::new(0, 1);
        let trials = 20_000;
        let mut flips = 0usize;
        for _ in 0..trials {
            let mut state = AttackState::new("0".parse().unwrap());
            scene1_iteration(&mut state, &true_id, &config, &ideal(), &mut r).unwrap();
            if state.candidate[0] {
                flips += 1;
            }
        }
        let freq = flips as f64 / trials as f64;
        assert!((freq - 0.5).abs() <= 0.015, "freq {freq}");
    }

    // Flips only happen on genuinely wrong bits under the ideal channel, so
    // the Hamming distance to the true identity never increases and each
    // flip reduces it by one.
    #[test]
    fn flips_are_sound_on_clean_channel() {
        let mut r = rng(42);
        let true_id = BitString::random(24, &mut r);
        let initial = BitString::random(24, &mut r);
        let mut state = AttackState::new(initial);
        let config = Scene1Config::new(0, 8);
        let mut distance = state.candidate.hamming_distance(&true_id).unwrap();
        for _ in 0..30 {
            let before = state.candidate.clone();
            scene1_iteration(&mut state, &true_id, &config, &ideal(), &mut r).unwrap();
            let flipped_now = before.xor(&state.candidate).unwrap().count_ones();
            let new_distance = state.candidate.hamming_distance(&true_id).unwrap();
            assert_eq!(new_distance + flipped_now, distance);
            distance = new_distance;
        }
        for i in 0..24 {
            if state.ever_flipped[i] {
                assert_eq!(state.candidate[i], true_id[i]);
            }
        }
    }

    #[test]
    fn zero_iterations_leave_candidate_and_confidence_at_zero() {
        let mut r = rng(43);
        let true_id = BitString::random(8, &mut r);
        let initial = BitString::random(8, &mut r);
        let (state, report) =
            scene1_run(&true_id, &initial, &Scene1Config::new(0, 8), &ideal(), &mut r).unwrap();
        assert_eq!(state.candidate, initial);
        assert!(report.per_bit_confidence.iter().all(|&c| c == 0.0));
        assert_eq!(report.overall_confidence, 0.0);
        assert_eq!(report.unconfirmed_count, 8);
    }

    // Ten clean iterations on 32 already-correct bits price the candidate at
    // (1 − 2^{−10})^32 ≈ 0.969.
    #[test]
    fn confidence_product_matches_closed_form() {
        let mut r = rng(44);
        let true_id = BitString::random(32, &mut r);
        let (_, report) = scene1_run(
            &true_id,
            &true_id.clone(),
            &Scene1Config::new(10, 32),
            &ideal(),
            &mut r,
        )
        .unwrap();
        let expected = (1.0 - 0.5f64.powi(10)).powi(32);
        assert!((report.overall_confidence - expected).abs() < 1e-12);
        assert!((expected - 0.969).abs() < 5e-4);
        assert_eq!(report.unconfirmed_count, 32);
    }

    #[test]
    fn confidence_with_33_unconfirmed_bits_after_12_iterations() {
        let mut r = rng(45);
        let true_id = BitString::random(33, &mut r);
        let (_, report) = scene1_run(
            &true_id,
            &true_id.clone(),
            &Scene1Config::new(12, 33),
            &ideal(),
            &mut r,
        )
        .unwrap();
        let expected = (1.0 - 0.5f64.powi(12)).powi(33);
        assert!((report.overall_confidence - expected).abs() < 1e-12);
        assert!((expected - 0.992).abs() < 5e-4);
    }

    #[test]
    fn lost_photons_yield_no_evidence() {
        let mut r = rng(46);
        let true_id: BitString = "0101".parse().unwrap();
        let mut state = AttackState::new("1010".parse().unwrap());
        let lossy = ChannelConfig::new(1.0, 0.0).unwrap();
        let config = Scene1Config::new(0, 4);
        for _ in 0..20 {
            scene1_iteration(&mut state, &true_id, &config, &lossy, &mut r).unwrap();
        }
        assert_eq!(state.candidate.to_string(), "1010");
        assert!(state.observation_count.iter().all(|&o| o == 0));
        assert!(state.match_count.iter().all(|&m| m == 0));
        assert_eq!(state.iterations_run, 20);
    }

    // Under channel noise the first-mismatch rule corrupts correct bits; the
    // majority-vote rule keeps them.
    #[test]
    fn majority_vote_resists_noise_better_than_first_mismatch() {
        let noisy = ChannelConfig::new(0.0, 0.05).unwrap();
        let run = |policy: FlipPolicy| -> usize {
            (0..50)
                .map(|trial| {
                    let mut r = RandomSource::derive(47, trial);
                    let true_id = BitString::random(16, &mut r);
                    let config = Scene1Config {
                        iterations: 20,
                        decoy_len: 16,
                        flip_policy: policy,
                    };
                    let (state, _) =
                        scene1_run(&true_id, &true_id.clone(), &config, &noisy, &mut r).unwrap();
                    state.candidate.hamming_distance(&true_id).unwrap()
                })
                .sum()
        };
        let first = run(FlipPolicy::FirstMismatch);
        let majority = run(FlipPolicy::majority_default());
        assert!(
            majority < first,
            "majority {majority} vs first-mismatch {first}"
        );
    }

    #[test]
    fn iteration_log_records_flips_and_losses() {
        let mut r = rng(48);
        let true_id: BitString = "11".parse().unwrap();
        let (state, _, log) = scene1_run_logged(
            &true_id,
            &"00".parse().unwrap(),
            &Scene1Config::new(6, 2),
            &ideal(),
            &mut r,
        )
        .unwrap();
        assert_eq!(log.len(), 12);
        let flips_logged = log.iter().filter(|e| e.flipped).count();
        let flips_state = state.ever_flipped.iter().filter(|&&f| f).count();
        assert_eq!(flips_logged, flips_state);
        let csv = iteration_log_csv(&log);
        assert!(csv.starts_with("iteration,position,sent_state,announced_bit,flipped\n"));
        assert_eq!(csv.lines().count(), 13);
    }

    #[test]
    fn scene2_with_true_identity_recovers_ciphertext_exactly() {
        let mut r = rng(49);
        for _ in 0..100 {
            let message = BitString::random(16, &mut r);
            let sender_id = BitString::random(16, &mut r);
            let receiver_id = BitString::random(8, &mut r);
            let outcome = scene2_intercept(
                &message,
                &sender_id,
                &receiver_id,
                &receiver_id.clone(),
                &ideal(),
                &VerificationPolicy::default(),
                &mut r,
            )
            .unwrap();
            assert_eq!(outcome.alice_verdict, Verdict::Accept);
            let ciphertext = outcome.recovered_ciphertext.unwrap();
            assert_eq!(ciphertext, message.xor(&sender_id).unwrap());
            assert_eq!(
                xor_recover_known_plaintext(&ciphertext, &message).unwrap(),
                sender_id
            );
        }
    }

    // One wrong candidate bit produces at most one mismatch in 64, and
    // 1/64 < 0.02, so the inclusive threshold always accepts.
    #[test]
    fn scene2_single_wrong_bit_within_tolerance_always_accepts() {
        let mut r = rng(50);
        let receiver_id = BitString::random(64, &mut r);
        let mut oscar_id = receiver_id.clone();
        oscar_id.flip(17);
        for _ in 0..200 {
            let outcome = scene2_intercept(
                &BitString::random(8, &mut r),
                &BitString::random(8, &mut r),
                &receiver_id,
                &oscar_id,
                &ideal(),
                &VerificationPolicy::new(0.02).unwrap(),
                &mut r,
            )
            .unwrap();
            assert_eq!(outcome.alice_verdict, Verdict::Accept);
        }
    }

    // With zero tolerated mismatches the same single wrong bit survives
    // verification only when its cross-basis measurement happens to announce
    // the expected value: probability 1/2.
    #[test]
    fn scene2_single_wrong_bit_at_zero_tolerance_accepts_half_the_time() {
        let mut r = rng(51);
        let receiver_id = BitString::random(64, &mut r);
        let mut oscar_id = receiver_id.clone();
        oscar_id.flip(3);
        let trials = 10_000;
        let mut accepts = 0usize;
        for _ in 0..trials {
            let outcome = scene2_intercept(
                &BitString::random(4, &mut r),
                &BitString::random(4, &mut r),
                &receiver_id,
                &oscar_id,
                &ideal(),
                &VerificationPolicy::new(0.0).unwrap(),
                &mut r,
            )
            .unwrap();
            if outcome.alice_verdict.is_accept() {
                accepts += 1;
            }
        }
        let freq = accepts as f64 / trials as f64;
        assert!((freq - 0.5).abs() <= 0.02, "freq {freq}");
    }

    #[test]
    fn known_plaintext_recovery_examples() {
        let c: BitString = "1101".parse().unwrap();
        let m: BitString = "1011".parse().unwrap();
        assert_eq!(xor_recover_known_plaintext(&c, &m).unwrap().to_string(), "0110");
        assert_eq!(
            xor_recover_known_plaintext(&c, &c).unwrap(),
            BitString::zeros(4)
        );
    }

    #[test]
    fn recovered_key_reencrypts_plaintext() {
        let mut r = rng(52);
        for _ in 0..1000 {
            let m = BitString::random(24, &mut r);
            let key = BitString::random(24, &mut r);
            let c = m.xor(&key).unwrap();
            let recovered = xor_recover_known_plaintext(&c, &m).unwrap();
            assert_eq!(m.xor(&recovered).unwrap(), c);
        }
    }

    #[test]
    fn all_zero_plaintexts_reveal_key_exactly() {
        let mut r = rng(53);
        let key = BitString::random(32, &mut r);
        let ciphertexts: Vec<BitString> = (0..3)
            .map(|_| BitString::zeros(32).xor(&key).unwrap())
            .collect();
        let model = PlaintextModel::BiasedBits { bias: 1.0 };
        let (estimate, majority) = xor_recover_biased(&ciphertexts, &model).unwrap();
        assert_eq!(estimate, key);
        assert!(majority.iter().all(|&v| v == 1.0));
    }

    // With one ciphertext the vote is the ciphertext itself, correct exactly
    // when the plaintext bit was 0.
    #[test]
    fn single_ciphertext_correctness_equals_bias() {
        let mut r = rng(54);
        let model = PlaintextModel::BiasedBits { bias: 0.75 };
        let trials = 100_000;
        let mut correct = 0usize;
        for _ in 0..trials {
            let key = BitString::random(1, &mut r);
            let plaintext: BitString = [!r.chance(0.75)].into_iter().collect();
            let ciphertext = plaintext.xor(&key).unwrap();
            let (estimate, _) = xor_recover_biased(&[ciphertext], &model).unwrap();
            if estimate == key {
                correct += 1;
            }
        }
        let freq = correct as f64 / trials as f64;
        assert!((freq - 0.75).abs() <= 0.01, "freq {freq}");
    }

    #[test]
    fn majority_ties_break_toward_zero() {
        let a: BitString = "1".parse().unwrap();
        let b: BitString = "0".parse().unwrap();
        let model = PlaintextModel::BiasedBits { bias: 0.9 };
        let (estimate, majority) = xor_recover_biased(&[a, b], &model).unwrap();
        assert_eq!(estimate.to_string(), "0");
        assert_eq!(majority, vec![0.5]);
    }

    #[test]
    fn biased_recovery_input_validation() {
        let model = PlaintextModel::BiasedBits { bias: 0.9 };
        assert_eq!(
            xor_recover_biased(&[], &model),
            Err(Error::EmptyCiphertextList)
        );
        assert_eq!(
            xor_recover_biased(&[BitString::zeros(1)], &PlaintextModel::KnownPlaintext),
            Err(Error::WrongPlaintextModel)
        );
        assert!(matches!(
            xor_recover_biased(
                &[BitString::zeros(2)],
                &PlaintextModel::BiasedBits { bias: 0.5 }
            ),
            Err(Error::InvalidProbability { .. })
        ));
        assert!(matches!(
            xor_recover_biased(&[BitString::zeros(2), BitString::zeros(3)], &model),
            Err(Error::LengthMismatch { .. })
        ));
    }
}
