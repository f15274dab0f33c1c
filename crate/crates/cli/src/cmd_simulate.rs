//! The `simulate` subcommand: honest sessions over a configurable channel,
//! reporting acceptance rate, a mismatch-rate histogram, and round-trip
//! success.

use std::fs;

use rayon::prelude::*;
use serde::Serialize;

use qsdc_core::protocol::run_session;
use qsdc_core::{BitString, ChannelConfig, RandomSource, SessionRecord, VerificationPolicy};

use crate::envelope::{kv_csv, Envelope};
use crate::SimulateArgs;

pub const HISTOGRAM_BUCKETS: usize = 20;

#[derive(Serialize)]
struct SimulateConfig {
    n: usize,
    u: usize,
    trials: u64,
    seed: u64,
    channel: ChannelConfig,
    error_threshold: f64,
}

#[derive(Serialize)]
struct SimulateReport {
    accept_count: u64,
    accept_rate: f64,
    /// Sessions whose decrypted message equalled the sent message.
    roundtrip_count: u64,
    roundtrip_rate: f64,
    mean_mismatch_rate: f64,
    /// Mismatch-rate counts in `HISTOGRAM_BUCKETS` equal buckets over [0, 1].
    mismatch_histogram: Vec<u64>,
    histogram_bucket_width: f64,
}

struct TrialOutcome {
    accepted: bool,
    roundtrip: bool,
    mismatch_rate: f64,
    record: Option<SessionRecord>,
}

fn one_session(
    trial: u64,
    args: &SimulateArgs,
    channel: &ChannelConfig,
    policy: &VerificationPolicy,
    keep_record: bool,
) -> anyhow::Result<TrialOutcome> {
    let mut rng = RandomSource::derive(args.seed, trial);
    let message = BitString::random(args.n, &mut rng);
    let sender_id = BitString::random(args.n, &mut rng);
    let receiver_id = BitString::random(args.u, &mut rng);
    let record = run_session(&message, &sender_id, &receiver_id, channel, policy, &mut rng)?;
    Ok(TrialOutcome {
        accepted: record.alice_verdict.is_accept(),
        roundtrip: record.decrypted_message.as_ref() == Some(&message),
        mismatch_rate: record.mismatch_rate,
        record: keep_record.then_some(record),
    })
}

pub fn run(args: &SimulateArgs) -> anyhow::Result<()> {
    let channel = args.channel.channel()?;
    let policy = args.channel.policy()?;
    let keep_records = args.records.is_some();

    let outcomes: Vec<TrialOutcome> = (0..args.trials)
        .into_par_iter()
        .map(|trial| one_session(trial, args, &channel, &policy, keep_records))
        .collect::<anyhow::Result<_>>()?;

    let accept_count = outcomes.iter().filter(|o| o.accepted).count() as u64;
    let roundtrip_count = outcomes.iter().filter(|o| o.roundtrip).count() as u64;
    let mut histogram = vec![0u64; HISTOGRAM_BUCKETS];
    let mut rate_sum = 0.0;
    for outcome in &outcomes {
        rate_sum += outcome.mismatch_rate;
        let bucket = ((outcome.mismatch_rate * HISTOGRAM_BUCKETS as f64) as usize)
            .min(HISTOGRAM_BUCKETS - 1);
        histogram[bucket] += 1;
    }

    if let Some(path) = &args.records {
        let mut lines = String::new();
        for outcome in &outcomes {
            let record = outcome.record.as_ref().expect("records kept");
            lines.push_str(&serde_json::to_string(record)?);
            lines.push('\n');
        }
        fs::write(path, lines)?;
    }

    let trials = args.trials.max(1) as f64;
    let report = SimulateReport {
        accept_count,
        accept_rate: accept_count as f64 / trials,
        roundtrip_count,
        roundtrip_rate: roundtrip_count as f64 / trials,
        mean_mismatch_rate: rate_sum / trials,
        mismatch_histogram: histogram,
        histogram_bucket_width: 1.0 / HISTOGRAM_BUCKETS as f64,
    };
    let config = SimulateConfig {
        n: args.n,
        u: args.u,
        trials: args.trials,
        seed: args.seed,
        channel,
        error_threshold: policy.error_threshold,
    };

    let pretty = || {
        let mut out = format!(
            "honest sessions: {} (n={}, u={}, p_loss={}, p_flip={}, threshold={}, seed={})\n",
            args.trials, args.n, args.u, channel.p_loss, channel.p_flip,
            policy.error_threshold, args.seed
        );
        out.push_str(&format!(
            "accept rate:     {:.4} ({accept_count}/{})\n",
            report.accept_rate, args.trials
        ));
        out.push_str(&format!(
            "round-trip rate: {:.4} ({roundtrip_count}/{})\n",
            report.roundtrip_rate, args.trials
        ));
        out.push_str(&format!(
            "mean mismatch rate: {:.5}\n",
            report.mean_mismatch_rate
        ));
        out.push_str("mismatch-rate histogram (nonempty buckets):\n");
        for (i, &count) in report.mismatch_histogram.iter().enumerate() {
            if count > 0 {
                out.push_str(&format!(
                    "  [{:.2}, {:.2}): {count}\n",
                    i as f64 * report.histogram_bucket_width,
                    (i + 1) as f64 * report.histogram_bucket_width,
                ));
            }
        }
        out
    };
    let csv = || {
        kv_csv(&[
            ("accept_rate", format!("{}", report.accept_rate)),
            ("roundtrip_rate", format!("{}", report.roundtrip_rate)),
            (
                "mean_mismatch_rate",
                format!("{}", report.mean_mismatch_rate),
            ),
        ])
    };

    let envelope = Envelope::new("simulate", config, &report);
    crate::envelope::render(
        args.output.format,
        args.output.output.as_deref(),
        &envelope,
        pretty,
        csv,
    )
}
