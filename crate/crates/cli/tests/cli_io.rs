//! Interface contract of the binary: exit codes, stream discipline, JSON
//! schema shape, and file outputs.

use std::process::{Command, Output};

use serde_json::Value;

fn qsdc(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_qsdc"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn stdout_json(args: &[&str]) -> Value {
    let output = qsdc(args);
    assert!(output.status.success(), "{args:?} failed");
    serde_json::from_slice(&output.stdout).expect("valid JSON on stdout")
}

fn assert_envelope(value: &Value, command: &str) {
    assert_eq!(value["schema_version"], 1);
    assert_eq!(value["command"], command);
    let hash = value["config_hash"].as_str().unwrap();
    assert_eq!(hash.len(), 16);
    assert!(hash.chars().all(|c| c.is_ascii_hexdigit()));
    assert!(value["config"].is_object());
    assert!(value["report"].is_object());
}

#[test]
fn help_and_version_succeed() {
    assert!(qsdc(&["--help"]).status.success());
    assert!(qsdc(&["--version"]).status.success());
    for sub in ["tables", "simulate", "attack", "modified-demo"] {
        assert!(qsdc(&[sub, "--help"]).status.success(), "{sub} --help");
    }
}

#[test]
fn usage_errors_exit_nonzero_on_stderr() {
    let output = qsdc(&["nonsense"]);
    assert_eq!(output.status.code(), Some(2));

    let output = qsdc(&["simulate", "--p-flip", "1.5"]);
    assert_eq!(output.status.code(), Some(1));
    assert!(output.stdout.is_empty(), "data stream polluted on error");
    assert!(String::from_utf8_lossy(&output.stderr).contains("p_flip"));

    let output = qsdc(&["simulate", "--threshold=-0.1"]);
    assert_eq!(output.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&output.stderr).contains("error_threshold"));

    let output = qsdc(&["attack", "--plaintext-model", "biased", "--bias", "0.3"]);
    assert_eq!(output.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&output.stderr).contains("bias"));

    let output = qsdc(&["tables"]);
    assert_eq!(output.status.code(), Some(2), "--kind is required");
}

#[test]
fn tables_json_shape() {
    let value = stdout_json(&["tables", "--kind", "worst", "--format", "json"]);
    assert_envelope(&value, "tables");
    let rows = value["report"]["rows"].as_array().unwrap();
    assert_eq!(rows.len(), 4);
    for row in rows {
        assert_eq!(row["probabilities"].as_object().unwrap().len(), 3);
    }
    let formatted = value["report"]["formatted"].as_array().unwrap();
    assert_eq!(formatted.len(), 4);
    assert_eq!(formatted[0].as_array().unwrap().len(), 3);
}

#[test]
fn simulate_json_shape_and_ideal_rates() {
    let value = stdout_json(&[
        "simulate", "--trials", "300", "--seed", "5", "--format", "json",
    ]);
    assert_envelope(&value, "simulate");
    let report = &value["report"];
    assert_eq!(report["accept_rate"], 1.0);
    assert_eq!(report["roundtrip_rate"], 1.0);
    assert_eq!(report["mismatch_histogram"].as_array().unwrap().len(), 20);
    assert_eq!(value["config"]["seed"], 5);
}

#[test]
fn attack_with_zero_iterations_leaves_candidate_unchanged() {
    let value = stdout_json(&[
        "attack", "--k", "0", "--trials", "200", "--seed", "3", "--format", "json",
    ]);
    assert_envelope(&value, "attack");
    let scene1 = &value["report"]["scene1"];
    assert_eq!(scene1["initial_candidate"], scene1["recovered_candidate"]);
    assert_eq!(scene1["hamming_initial"], scene1["hamming_final"]);
    // Both correction counts are reported, and a random 64-bit candidate
    // essentially never deceives the sender.
    assert_eq!(scene1["corrections"]["paper_formula"], 0);
    assert_eq!(scene1["corrections"]["simulated"], 0);
    let aggregate = &value["report"]["aggregate"];
    assert_eq!(aggregate["scene1_success_count"], 0);
    assert_eq!(aggregate["deception_count"], 0);
    let oracle = aggregate["scene1_oracle"].as_f64().unwrap();
    assert!(oracle < 1e-18);
}

#[test]
fn attack_json_reports_both_correction_counts() {
    let value = stdout_json(&[
        "attack", "--trials", "100", "--seed", "11", "--format", "json",
    ]);
    let corrections = &value["report"]["scene1"]["corrections"];
    assert!(corrections["paper_formula"].is_u64());
    assert!(corrections["simulated"].is_u64());
    assert!(value["report"]["aggregate"]["scene1_oracle"].is_f64());
}

#[test]
fn modified_demo_json_contrasts_bits_learned() {
    let value = stdout_json(&[
        "modified-demo", "--trials", "500", "--seed", "13", "--format", "json",
    ]);
    assert_envelope(&value, "modified-demo");
    let report = &value["report"];
    assert!(report["original"]["bits_observed"].as_u64().unwrap() > 0);
    assert_eq!(report["modified"]["bits_observed"], 0);
    assert_eq!(report["modified"]["deceived_sessions"], 0);
    assert_eq!(report["honest"]["completed_rate"], 1.0);
    assert_eq!(report["honest"]["all_messages_round_tripped"], true);
}

#[test]
fn output_flag_writes_file_and_keeps_stdout_clean() {
    let dir = std::env::temp_dir().join("qsdc-cli-io-test");
    std::fs::create_dir_all(&dir).unwrap();
    let path = dir.join("tables.json");
    let output = qsdc(&[
        "tables", "--kind", "average", "--format", "json",
        "--output", path.to_str().unwrap(),
    ]);
    assert!(output.status.success());
    assert!(output.stdout.is_empty());
    let value: Value = serde_json::from_str(&std::fs::read_to_string(&path).unwrap()).unwrap();
    assert_envelope(&value, "tables");
}

#[test]
fn simulate_records_are_json_lines_of_session_transcripts() {
    let dir = std::env::temp_dir().join("qsdc-cli-io-test");
    std::fs::create_dir_all(&dir).unwrap();
    let path = dir.join("records.jsonl");
    let output = qsdc(&[
        "simulate", "--trials", "25", "--n", "8", "--u", "4", "--seed", "2",
        "--records", path.to_str().unwrap(),
    ]);
    assert!(output.status.success());
    let body = std::fs::read_to_string(&path).unwrap();
    let lines: Vec<&str> = body.lines().collect();
    assert_eq!(lines.len(), 25);
    for line in lines {
        let record: Value = serde_json::from_str(line).unwrap();
        assert!(record["sent"]["qubits"].is_array());
        assert_eq!(record["alice_verdict"], "accept");
        assert_eq!(record["received_mask"].as_array().unwrap().len(), 4);
    }
}

#[test]
fn attack_mismatch_log_is_csv() {
    let dir = std::env::temp_dir().join("qsdc-cli-io-test");
    std::fs::create_dir_all(&dir).unwrap();
    let path = dir.join("mismatch.csv");
    let output = qsdc(&[
        "attack", "--u", "8", "--k", "5", "--trials", "10", "--seed", "4",
        "--mismatch-log", path.to_str().unwrap(),
    ]);
    assert!(output.status.success());
    let body = std::fs::read_to_string(&path).unwrap();
    let mut lines = body.lines();
    assert_eq!(
        lines.next(),
        Some("iteration,position,sent_state,announced_bit,flipped")
    );
    // 5 iterations over 8 positions.
    assert_eq!(lines.count(), 40);
}

#[test]
fn pretty_output_is_seed_deterministic() {
    let first = qsdc(&["modified-demo", "--trials", "200", "--seed", "21"]);
    let second = qsdc(&["modified-demo", "--trials", "200", "--seed", "21"]);
    assert_eq!(first.stdout, second.stdout);
    let changed = qsdc(&["modified-demo", "--trials", "200", "--seed", "22"]);
    assert_ne!(first.stdout, changed.stdout);
}

// A 10% flip channel against a 2% threshold rejects at least 99% of honest
// sessions: the acceptance probability is the binomial tail
// P(Bin(64, 0.1) <= 1), just below 1%.
#[test]
fn simulate_noisy_channel_rejects() {
    let value = stdout_json(&[
        "simulate", "--p-flip", "0.1", "--threshold", "0.02", "--u", "64",
        "--trials", "10000", "--seed", "42", "--format", "json",
    ]);
    let accept_rate = value["report"]["accept_rate"].as_f64().unwrap();
    assert!(accept_rate <= 0.01, "accept rate {accept_rate}");
}

// Seeded output is identical regardless of how many worker threads the
// trial pool uses.
#[test]
fn output_is_thread_count_invariant() {
    let run = |threads: &str| {
        let output = Command::new(env!("CARGO_BIN_EXE_qsdc"))
            .args(["attack", "--trials", "400", "--seed", "17", "--format", "json"])
            .env("RAYON_NUM_THREADS", threads)
            .output()
            .expect("binary runs");
        assert!(output.status.success());
        output.stdout
    };
    assert_eq!(run("1"), run("4"));
}
