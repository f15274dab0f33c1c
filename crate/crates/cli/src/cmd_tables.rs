//! The `tables` subcommand: the 4×3 reference tables of attack success
//! probabilities, printed with one-decimal truncation.

use serde::Serialize;

use qsdc_core::analysis::{
    generate_table, table_csv, truncate_percent, TableKind, TableRow, TABLE_ID_LENGTHS,
};

use crate::envelope::Envelope;
use crate::TablesArgs;

#[derive(Serialize)]
struct TablesConfig {
    kind: TableKind,
}

#[derive(Serialize)]
struct TablesReport {
    rows: Vec<TableRow>,
    /// The same rows as printed strings, truncated to one decimal.
    formatted: Vec<Vec<String>>,
}

pub fn run(args: &TablesArgs) -> anyhow::Result<()> {
    let kind: TableKind = args.kind.into();
    let rows = generate_table(kind);
    let formatted: Vec<Vec<String>> = rows
        .iter()
        .map(|row| {
            TABLE_ID_LENGTHS
                .iter()
                .map(|u| truncate_percent(row.probabilities[u]))
                .collect()
        })
        .collect();

    let pretty = || {
        let mut out = String::from("k, u=32, u=64, u=128\n");
        for (row, cells) in rows.iter().zip(&formatted) {
            out.push_str(&format!("{}, {}\n", row.k, cells.join(", ")));
        }
        out
    };
    let csv = || table_csv(&rows);

    let envelope = Envelope::new(
        "tables",
        TablesConfig { kind },
        TablesReport {
            rows: rows.clone(),
            formatted: formatted.clone(),
        },
    );
    crate::envelope::render(
        args.output.format,
        args.output.output.as_deref(),
        &envelope,
        pretty,
        csv,
    )
}
