//! Output plumbing: every subcommand emits a versioned envelope in one of
//! three formats, to stdout or to a file. Diagnostics never mix into the
//! data stream.

use std::fs;
use std::io::Write;
use std::path::Path;

use clap::ValueEnum;
use serde::Serialize;

use qsdc_core::analysis::stable_hash_hex;

/// Version of the JSON output schema.
pub const SCHEMA_VERSION: u32 = 1;

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    /// Human-readable text.
    Pretty,
    /// Flat comma-separated rows.
    Csv,
    /// Versioned JSON envelope.
    Json,
}

/// The JSON envelope wrapping every report.
#[derive(Serialize)]
pub struct Envelope<C: Serialize, R: Serialize> {
    pub schema_version: u32,
    pub command: &'static str,
    /// Stable digest of the configuration, for run bookkeeping.
    pub config_hash: String,
    pub config: C,
    pub report: R,
}

impl<C: Serialize, R: Serialize> Envelope<C, R> {
    pub fn new(command: &'static str, config: C, report: R) -> Self {
        let canonical =
            serde_json::to_string(&config).expect("config serializes infallibly");
        Self {
            schema_version: SCHEMA_VERSION,
            command,
            config_hash: stable_hash_hex(&canonical),
            config,
            report,
        }
    }
}

/// Write rendered output to the chosen sink, ending with a newline.
pub fn emit(output: Option<&Path>, body: &str) -> anyhow::Result<()> {
    let text = if body.ends_with('\n') {
        body.to_string()
    } else {
        format!("{body}\n")
    };
    match output {
        Some(path) => {
            fs::write(path, text)?;
        }
        None => {
            let stdout = std::io::stdout();
            let mut lock = stdout.lock();
            lock.write_all(text.as_bytes())?;
        }
    }
    Ok(())
}

/// Render one report in the requested format and emit it.
pub fn render<C: Serialize, R: Serialize>(
    format: Format,
    output: Option<&Path>,
    envelope: &Envelope<C, R>,
    pretty: impl FnOnce() -> String,
    csv: impl FnOnce() -> String,
) -> anyhow::Result<()> {
    let body = match format {
        Format::Pretty => pretty(),
        Format::Csv => csv(),
        Format::Json => serde_json::to_string_pretty(envelope)?,
    };
    emit(output, &body)
}

/// Flat `key,value` CSV rows for summary reports.
pub fn kv_csv(rows: &[(&str, String)]) -> String {
    let mut out = String::from("key,value\n");
    for (key, value) in rows {
        out.push_str(&format!("{key},{value}\n"));
    }
    out
}
