//! Command-line front end for the simulation laboratory: reference tables,
//! honest-session simulation, the two-phase attack, and the
//! mutual-authentication defense demo, all reproducible from a seed.

mod cmd_attack;
mod cmd_modified;
mod cmd_simulate;
mod cmd_tables;
mod envelope;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use qsdc_core::analysis::TableKind;
use qsdc_core::attack::{FlipPolicy, PlaintextModel};
use qsdc_core::{ChannelConfig, VerificationPolicy};

use envelope::Format;

/// Default seed used by every subcommand; pass `--seed` to change it.
pub const DEFAULT_SEED: u64 = 42;

#[derive(Parser)]
#[command(
    name = "qsdc",
    version,
    about = "Single-photon direct-communication protocol lab: simulation, attack, analysis, defense",
    after_help = "Runs are deterministic: the same seed reproduces byte-identical output.\n\
                  Environment variables are never consulted; flags only."
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Print the attack success-probability reference tables.
    Tables(TablesArgs),
    /// Run honest protocol sessions and report acceptance and round-trip
    /// statistics.
    Simulate(SimulateArgs),
    /// Run the two-phase identity-recovery attack end to end.
    Attack(AttackArgs),
    /// Compare the attack against the original and the hardened protocol.
    ModifiedDemo(ModifiedDemoArgs),
}

#[derive(Clone, Copy, ValueEnum)]
enum KindArg {
    Worst,
    Average,
}

impl From<KindArg> for TableKind {
    fn from(kind: KindArg) -> Self {
        match kind {
            KindArg::Worst => TableKind::Worst,
            KindArg::Average => TableKind::Average,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum FlipPolicyArg {
    /// Flip a candidate bit on its first mismatching announcement.
    FirstMismatch,
    /// Flip only when mismatches exceed a fraction of observations.
    Majority,
}

#[derive(Clone, Copy, ValueEnum)]
enum PlaintextModelArg {
    /// The attacker knows one plaintext and XORs it away.
    Known,
    /// The attacker majority-votes over ciphertexts of biased plaintexts.
    Biased,
}

#[derive(Clone, Copy, ValueEnum)]
enum InitialArg {
    /// Uniformly random initial candidate.
    Random,
    /// All-zero initial candidate.
    Zeros,
}

#[derive(Args)]
struct OutputArgs {
    /// Output format.
    #[arg(long, value_enum, default_value_t = Format::Pretty)]
    format: Format,
    /// Write the report here instead of stdout.
    #[arg(long)]
    output: Option<PathBuf>,
}

#[derive(Args)]
struct ChannelArgs {
    /// Photon loss probability of the channel.
    #[arg(long, default_value_t = 0.0)]
    p_loss: f64,
    /// Same-basis flip probability of the channel.
    #[arg(long, default_value_t = 0.0)]
    p_flip: f64,
    /// Maximum tolerated mismatch rate during verification.
    #[arg(long, default_value_t = 0.02)]
    threshold: f64,
}

impl ChannelArgs {
    fn channel(&self) -> anyhow::Result<ChannelConfig> {
        Ok(ChannelConfig::new(self.p_loss, self.p_flip)?)
    }

    fn policy(&self) -> anyhow::Result<VerificationPolicy> {
        Ok(VerificationPolicy::new(self.threshold)?)
    }
}

#[derive(Args)]
struct TablesArgs {
    /// Which accounting to tabulate.
    #[arg(long, value_enum)]
    kind: KindArg,
    #[command(flatten)]
    output: OutputArgs,
}

#[derive(Args)]
struct SimulateArgs {
    /// Message (and sender identity) length in bits.
    #[arg(long, default_value_t = 64)]
    n: usize,
    /// Receiver identity length in bits.
    #[arg(long, default_value_t = 64)]
    u: usize,
    /// Number of independent sessions.
    #[arg(long, default_value_t = 10_000)]
    trials: u64,
    /// Base seed; session i derives its own stream from it.
    #[arg(long, default_value_t = DEFAULT_SEED)]
    seed: u64,
    #[command(flatten)]
    channel: ChannelArgs,
    /// Write every session transcript as JSON lines to this file.
    #[arg(long)]
    records: Option<PathBuf>,
    #[command(flatten)]
    output: OutputArgs,
}

#[derive(Args)]
struct AttackArgs {
    /// Receiver identity length in bits.
    #[arg(long, default_value_t = 64)]
    u: usize,
    /// Message (and sender identity) length in bits.
    #[arg(long, default_value_t = 64)]
    n: usize,
    /// Fake sessions per attack run.
    #[arg(long, default_value_t = 13)]
    k: u32,
    /// Independent attack runs for the aggregate statistics.
    #[arg(long, default_value_t = 10_000)]
    trials: u64,
    #[arg(long, default_value_t = DEFAULT_SEED)]
    seed: u64,
    #[command(flatten)]
    channel: ChannelArgs,
    /// When to flip a candidate bit.
    #[arg(long, value_enum, default_value_t = FlipPolicyArg::FirstMismatch)]
    flip_policy: FlipPolicyArg,
    /// Majority policy: mismatch fraction that triggers a flip.
    #[arg(long, default_value_t = 0.25)]
    flip_fraction: f64,
    /// Majority policy: observations required before flipping.
    #[arg(long, default_value_t = 4)]
    min_observations: u32,
    /// Initial candidate for the identity string.
    #[arg(long, value_enum, default_value_t = InitialArg::Random)]
    initial: InitialArg,
    /// How the XOR break obtains plaintext information.
    #[arg(long, value_enum, default_value_t = PlaintextModelArg::Known)]
    plaintext_model: PlaintextModelArg,
    /// Biased model: probability that a plaintext bit is 0.
    #[arg(long, default_value_t = 0.9)]
    bias: f64,
    /// Biased model: intercepted ciphertexts per key recovery.
    #[arg(long, default_value_t = 25)]
    ciphertexts: u64,
    /// Write the demo run's per-iteration mismatch log as CSV.
    #[arg(long)]
    mismatch_log: Option<PathBuf>,
    #[command(flatten)]
    output: OutputArgs,
}

impl AttackArgs {
    fn flip_policy(&self) -> FlipPolicy {
        match self.flip_policy {
            FlipPolicyArg::FirstMismatch => FlipPolicy::FirstMismatch,
            FlipPolicyArg::Majority => FlipPolicy::MajorityVote {
                flip_fraction: self.flip_fraction,
                min_observations: self.min_observations,
            },
        }
    }

    fn plaintext_model(&self) -> anyhow::Result<PlaintextModel> {
        let model = match self.plaintext_model {
            PlaintextModelArg::Known => PlaintextModel::KnownPlaintext,
            PlaintextModelArg::Biased => PlaintextModel::BiasedBits { bias: self.bias },
        };
        model.validate()?;
        Ok(model)
    }
}

#[derive(Args)]
struct ModifiedDemoArgs {
    /// Receiver identity length in bits.
    #[arg(long, default_value_t = 64)]
    u: usize,
    /// Message (and shared key) length in bits.
    #[arg(long, default_value_t = 64)]
    n: usize,
    /// Fake sessions the attacker runs against the original protocol.
    #[arg(long, default_value_t = 13)]
    k: u32,
    /// Sender verification qubits per session (half the sender identity
    /// length).
    #[arg(long, default_value_t = 16)]
    auth_len: usize,
    /// Fake sessions against the hardened protocol, and cap for the honest
    /// round-trip count.
    #[arg(long, default_value_t = 10_000)]
    trials: u64,
    #[arg(long, default_value_t = DEFAULT_SEED)]
    seed: u64,
    #[command(flatten)]
    channel: ChannelArgs,
    #[command(flatten)]
    output: OutputArgs,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Tables(args) => cmd_tables::run(&args),
        Command::Simulate(args) => cmd_simulate::run(&args),
        Command::Attack(args) => cmd_attack::run(&args),
        Command::ModifiedDemo(args) => cmd_modified::run(&args),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err:#}");
            ExitCode::FAILURE
        }
    }
}
