//! Closed-form attack-success probabilities, the reference tables, and the
//! Monte Carlo harness that cross-checks formulas against simulation.

use std::collections::BTreeMap;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::attack::{scene1_run, FlipPolicy, Scene1Config};
use crate::bits::BitString;
use crate::error::Error;
use crate::qubit::ChannelConfig;
use crate::rng::RandomSource;

/// Identity-string lengths tabulated in the reference tables.
pub const TABLE_ID_LENGTHS: [u32; 3] = [32, 64, 128];
/// Iteration counts tabulated in the reference tables.
pub const TABLE_ITERATIONS: [u32; 4] = [10, 11, 12, 13];

/// Probability that all `unconfirmed` never-flipped candidate bits are
/// correct after `iterations` clean observations each: (1 − 2^{−k})^x.
pub fn worst_case_probability(iterations: u32, unconfirmed: u32) -> f64 {
    let per_bit = 1.0 - 0.5f64.powi(iterations.min(i32::MAX as u32) as i32);
    per_bit.powi(unconfirmed.min(i32::MAX as u32) as i32)
}

/// Expected number of wrong candidate bits corrected within `iterations`
/// sessions, out of `wrong_bits` initially wrong: ⌈(1 − (3/4)^k)·t⌉.
///
/// Evaluated exactly as t − ⌊t·3^k/4^k⌋ in integer arithmetic.
pub fn expected_corrected(iterations: u32, wrong_bits: u32) -> u32 {
    if wrong_bits == 0 {
        return 0;
    }
    let t = wrong_bits as u128;
    let surviving = if iterations < 64 {
        3u128
            .checked_pow(iterations)
            .and_then(|p| p.checked_mul(t))
            .map(|numerator| numerator >> (2 * iterations))
    } else {
        None
    };
    let surviving = surviving
        .unwrap_or_else(|| (t as f64 * 0.75f64.powi(iterations as i32)).floor() as u128);
    wrong_bits - surviving as u32
}

/// Success probability crediting the expected corrections, with half the
/// identity string initially wrong: (1 − 2^{−k})^{u − ⌈(1−(3/4)^k)·u/2⌉}.
pub fn average_case_probability(iterations: u32, id_len: u32) -> Result<f64, Error> {
    if !id_len.is_multiple_of(2) {
        return Err(Error::OddLength {
            context: "average_case_probability identity length",
            len: id_len as usize,
        });
    }
    let corrected = expected_corrected(iterations, id_len / 2);
    Ok(worst_case_probability(iterations, id_len - corrected))
}

/// Which accounting a table uses.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TableKind {
    /// No credit for corrected bits: all bits count as unconfirmed.
    Worst,
    /// Expected corrections credited, starting from half the bits wrong.
    Average,
}

/// One table row: success probabilities per identity-string length.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TableRow {
    pub k: u32,
    pub probabilities: BTreeMap<u32, f64>,
}

/// The 4×3 reference table for k ∈ {10..13} and u ∈ {32, 64, 128}.
pub fn generate_table(kind: TableKind) -> Vec<TableRow> {
    TABLE_ITERATIONS
        .iter()
        .map(|&k| {
            let probabilities = TABLE_ID_LENGTHS
                .iter()
                .map(|&u| {
                    let p = match kind {
                        TableKind::Worst => worst_case_probability(k, u),
                        TableKind::Average => {
                            average_case_probability(k, u).expect("tabulated lengths are even")
                        }
                    };
                    (u, p)
                })
                .collect();
            TableRow { k, probabilities }
        })
        .collect()
}

/// Format a probability as a percentage truncated (not rounded) to one
/// decimal place, matching the reference tables' printed values.
pub fn truncate_percent(p: f64) -> String {
    format!("{:.1}", (p * 1000.0).floor() / 10.0)
}

/// Render a table as CSV with header `k,u32,u64,u128`.
pub fn table_csv(rows: &[TableRow]) -> String {
    let mut out = String::from("k,u32,u64,u128\n");
    for row in rows {
        out.push_str(&row.k.to_string());
        for &u in &TABLE_ID_LENGTHS {
            out.push(',');
            out.push_str(&truncate_percent(row.probabilities[&u]));
        }
        out.push('\n');
    }
    out
}

/// Two-sided z for a 99% confidence level.
pub const Z_99: f64 = 2.575_829_303_548_900_4;

/// Wilson score interval for a binomial proportion.
pub fn wilson_interval(successes: u64, trials: u64, z: f64) -> (f64, f64) {
    if trials == 0 {
        return (0.0, 1.0);
    }
    let n = trials as f64;
    let p_hat = successes as f64 / n;
    let z2 = z * z;
    let denom = 1.0 + z2 / n;
    let center = (p_hat + z2 / (2.0 * n)) / denom;
    let half = z * (p_hat * (1.0 - p_hat) / n + z2 / (4.0 * n * n)).sqrt() / denom;
    ((center - half).max(0.0), (center + half).min(1.0))
}

/// Result of a Monte Carlo estimation run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MonteCarloReport {
    pub trials: u64,
    pub successes: u64,
    pub point_estimate: f64,
    pub confidence_level: f64,
    pub confidence_interval: (f64, f64),
    /// Closed-form reference value, when one exists for the configuration.
    pub oracle_value: Option<f64>,
    pub seed: u64,
    /// Stable hex digest of the run configuration, for reproducibility
    /// bookkeeping.
    pub config_hash: String,
}

/// Configuration of a phase-one Monte Carlo run: per trial, a fresh random
/// true identity string and initial candidate, refined for `iterations`
/// sessions; success means exact recovery.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Scene1Trials {
    pub id_len: usize,
    pub iterations: u32,
    pub trials: u64,
    pub channel: ChannelConfig,
    pub flip_policy: FlipPolicy,
    pub decoy_len: usize,
    pub seed: u64,
}

impl Scene1Trials {
    pub fn new(id_len: usize, iterations: u32, trials: u64, seed: u64) -> Self {
        Self {
            id_len,
            iterations,
            trials,
            channel: ChannelConfig::ideal(),
            flip_policy: FlipPolicy::FirstMismatch,
            decoy_len: id_len,
            seed,
        }
    }

    fn canonical(&self) -> String {
        format!(
            "scene1|u={}|k={}|trials={}|p_loss={}|p_flip={}|policy={:?}|decoy={}|seed={}",
            self.id_len,
            self.iterations,
            self.trials,
            self.channel.p_loss,
            self.channel.p_flip,
            self.flip_policy,
            self.decoy_len,
            self.seed
        )
    }
}

/// FNV-1a 64-bit digest as fixed-width hex.
pub fn stable_hash_hex(input: &str) -> String {
    let mut hash: u64 = 0xCBF2_9CE4_8422_2325;
    for byte in input.bytes() {
        hash ^= byte as u64;
        hash = hash.wrapping_mul(0x0000_0100_0000_01B3);
    }
    format!("{hash:016x}")
}

/// Frequency of exact identity recovery over independent seeded trials,
/// with a 99% Wilson interval.
///
/// Trials run in parallel on derived per-trial seeds; the report is
/// identical for any thread count. On the ideal channel under the
/// first-mismatch policy the closed-form reference (1 − 2^{−(k+1)})^u is
/// attached; noisy or majority-vote runs are simulation-only.
pub fn monte_carlo_scene1(cfg: &Scene1Trials) -> MonteCarloReport {
    let scene = Scene1Config {
        iterations: cfg.iterations,
        decoy_len: cfg.decoy_len,
        flip_policy: cfg.flip_policy,
    };
    let successes: u64 = (0..cfg.trials)
        .into_par_iter()
        .map(|trial| {
            let mut rng = RandomSource::derive(cfg.seed, trial);
            let true_id = BitString::random(cfg.id_len, &mut rng);
            let initial = BitString::random(cfg.id_len, &mut rng);
            let (state, _) = scene1_run(&true_id, &initial, &scene, &cfg.channel, &mut rng)
                .expect("lengths agree by construction");
            u64::from(state.candidate == true_id)
        })
        .sum();

    let oracle_value = if cfg.channel.is_ideal() && cfg.flip_policy == FlipPolicy::FirstMismatch {
        Some(recovery_oracle(cfg.iterations, cfg.id_len as u32))
    } else {
        None
    };
    let point_estimate = if cfg.trials == 0 {
        0.0
    } else {
        successes as f64 / cfg.trials as f64
    };
    MonteCarloReport {
        trials: cfg.trials,
        successes,
        point_estimate,
        confidence_level: 0.99,
        confidence_interval: wilson_interval(successes, cfg.trials, Z_99),
        oracle_value,
        seed: cfg.seed,
        config_hash: stable_hash_hex(&cfg.canonical()),
    }
}

/// Exact recovery probability from a uniformly random initial candidate on
/// the ideal channel: each bit is independently correct after k sessions
/// with probability 1 − 2^{−(k+1)}.
pub fn recovery_oracle(iterations: u32, id_len: u32) -> f64 {
    worst_case_probability(iterations + 1, id_len)
}
