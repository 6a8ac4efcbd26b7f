//! End-to-end tests for the `sheetpress` binary: exit codes, deterministic
//! output, and the report files the eval subcommand writes.

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_sheetpress"))
}

fn write_file(dir: &Path, name: &str, text: &str) -> PathBuf {
    let path = dir.join(name);
    std::fs::write(&path, text).expect("fixture write");
    path
}

fn stdout_of(output: &Output) -> String {
    String::from_utf8(output.stdout.clone()).expect("stdout is UTF-8")
}

fn stderr_of(output: &Output) -> String {
    String::from_utf8(output.stderr.clone()).expect("stderr is UTF-8")
}

const SMALL_SHEET: &str = r#"{
  "name": "Profits",
  "cells": [
    {"addr": "A1", "v": "Year", "bold": true},
    {"addr": "B1", "v": "Profit", "bold": true},
    {"addr": "A2", "v": "1998"},
    {"addr": "B2", "v": "12.10"},
    {"addr": "A3", "v": "1999"},
    {"addr": "B3", "v": "18.55"},
    {"addr": "A4", "v": "2000"},
    {"addr": "B4", "v": "16.00"}
  ]
}"#;

#[test]
fn encode_vanilla_is_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    let sheet = write_file(dir.path(), "small.json", SMALL_SHEET);

    let first = bin().arg("encode").arg(&sheet).output().unwrap();
    assert!(first.status.success(), "stderr: {}", stderr_of(&first));
    let text = stdout_of(&first);
    assert!(text.starts_with("|A1,Year|B1,Profit\n"), "unexpected encoding:\n{text}");

    for _ in 0..4 {
        let again = bin().arg("encode").arg(&sheet).output().unwrap();
        assert_eq!(again.stdout, first.stdout);
    }
}

#[test]
fn encode_compress_writes_stats() {
    let dir = tempfile::tempdir().unwrap();
    let sheet = write_file(dir.path(), "small.json", SMALL_SHEET);
    let stats_path = dir.path().join("stats.json");

    let output = bin()
        .arg("encode")
        .arg(&sheet)
        .arg("--compress")
        .arg("--stats")
        .arg(&stats_path)
        .output()
        .unwrap();
    assert!(output.status.success(), "stderr: {}", stderr_of(&output));
    assert!(stdout_of(&output).contains("(Year|A1)"), "aggregated encoding expected");

    let stats: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(&stats_path).unwrap()).unwrap();
    assert_eq!(stats["sheet"], "Profits");
    assert_eq!(stats["rows"], 4);
    assert_eq!(stats["cols"], 2);
    assert_eq!(stats["modules"], "1&2&3");
    let vanilla = stats["vanilla_tokens"].as_u64().unwrap();
    let encoded = stats["encoded_tokens"].as_u64().unwrap();
    let ratio = stats["ratio"].as_f64().unwrap();
    assert!(vanilla > 0 && encoded > 0);
    assert!(ratio >= 1.0, "compression should not inflate this sheet: {ratio}");
    // The reported ratio is rounded to four decimals.
    assert!((ratio - vanilla as f64 / encoded as f64).abs() < 5e-5);
}

#[test]
fn encode_module_subset_is_labeled() {
    let dir = tempfile::tempdir().unwrap();
    let sheet = write_file(dir.path(), "small.json", SMALL_SHEET);
    let stats_path = dir.path().join("stats.json");

    let output = bin()
        .arg("encode")
        .arg(&sheet)
        .arg("--compress")
        .arg("--modules")
        .arg("1,3")
        .arg("--stats")
        .arg(&stats_path)
        .output()
        .unwrap();
    assert!(output.status.success(), "stderr: {}", stderr_of(&output));
    let stats: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(&stats_path).unwrap()).unwrap();
    assert_eq!(stats["modules"], "1&3");
}

#[test]
fn encode_format_flag_appends_format_block() {
    let dir = tempfile::tempdir().unwrap();
    let sheet = write_file(
        dir.path(),
        "fmt.json",
        r#"{"cells":[
            {"addr":"A1","v":"Total","bold":true,"borders":["top"]},
            {"addr":"A2","v":"1200","fill":"FFCC00"}
        ]}"#,
    );

    let plain = bin().arg("encode").arg(&sheet).output().unwrap();
    let formatted = bin().arg("encode").arg(&sheet).arg("--format").output().unwrap();
    assert!(plain.status.success() && formatted.status.success());
    let plain = stdout_of(&plain);
    let formatted = stdout_of(&formatted);
    assert!(formatted.len() > plain.len(), "--format should add a block");
    assert!(formatted.starts_with(plain.trim_end_matches('\n')));
    assert!(formatted.contains("Font Bold"), "style block lists bold:\n{formatted}");
    assert!(formatted.contains("Top Border"), "style block lists borders:\n{formatted}");
    assert!(formatted.contains("Fill Color"), "style block lists fills:\n{formatted}");
}

#[test]
fn encode_missing_file_exits_two() {
    let output = bin().arg("encode").arg("/nonexistent/sheet.json").output().unwrap();
    assert_eq!(output.status.code(), Some(2));
    assert!(stderr_of(&output).contains("error:"));
}

#[test]
fn malformed_sheet_exits_two() {
    let dir = tempfile::tempdir().unwrap();
    let sheet = write_file(dir.path(), "bad.json", "not a sheet");
    let output = bin().arg("encode").arg(&sheet).output().unwrap();
    assert_eq!(output.status.code(), Some(2));
}

#[test]
fn unknown_extension_exits_two() {
    let dir = tempfile::tempdir().unwrap();
    let sheet = write_file(dir.path(), "sheet.csv", "a,b\n1,2\n");
    let output = bin().arg("encode").arg(&sheet).output().unwrap();
    assert_eq!(output.status.code(), Some(2));
    assert!(stderr_of(&output).contains("csv"));
}

#[test]
fn conflicting_encode_flags_are_usage_errors() {
    let dir = tempfile::tempdir().unwrap();
    let sheet = write_file(dir.path(), "small.json", SMALL_SHEET);

    let both = bin().arg("encode").arg(&sheet).arg("--vanilla").arg("--compress").output().unwrap();
    assert_eq!(both.status.code(), Some(2));

    let orphan_modules =
        bin().arg("encode").arg(&sheet).arg("--modules").arg("1").output().unwrap();
    assert_eq!(orphan_modules.status.code(), Some(2));

    let bad_modules = bin()
        .arg("encode")
        .arg(&sheet)
        .arg("--compress")
        .arg("--modules")
        .arg("1,9")
        .output()
        .unwrap();
    assert_eq!(bad_modules.status.code(), Some(2));
    assert!(stderr_of(&bad_modules).contains("unknown module"));
}

#[test]
fn detect_mock_is_reproducible() {
    let dir = tempfile::tempdir().unwrap();
    let sheet = write_file(dir.path(), "small.json", SMALL_SHEET);
    let mock = write_file(dir.path(), "mock.json", r#"["table at {'range': 'A1:B4'}"]"#);

    let first = bin().arg("detect").arg(&sheet).arg("--mock").arg(&mock).output().unwrap();
    assert!(first.status.success(), "stderr: {}", stderr_of(&first));
    let parsed: serde_json::Value = serde_json::from_str(&stdout_of(&first)).unwrap();
    assert_eq!(parsed["sheet"], "Profits");
    assert_eq!(parsed["ranges"][0], "A1:B4");
    assert_eq!(parsed["raw_response"], "table at {'range': 'A1:B4'}");

    for _ in 0..4 {
        let again = bin().arg("detect").arg(&sheet).arg("--mock").arg(&mock).output().unwrap();
        assert_eq!(again.stdout, first.stdout);
    }
}

#[test]
fn qa_mock_reports_fused_answer() {
    let dir = tempfile::tempdir().unwrap();
    let sheet = write_file(dir.path(), "small.json", SMALL_SHEET);
    let mock = write_file(
        dir.path(),
        "mock.json",
        r#"["{'range': 'A1:B4'}", "The profit in 1999 was {[B3]}"]"#,
    );

    let output = bin()
        .arg("qa")
        .arg(&sheet)
        .arg("--question")
        .arg("What was the profit in 1999?")
        .arg("--mock")
        .arg(&mock)
        .output()
        .unwrap();
    assert!(output.status.success(), "stderr: {}", stderr_of(&output));
    let parsed: serde_json::Value = serde_json::from_str(&stdout_of(&output)).unwrap();
    assert_eq!(parsed["table_range"], "A1:B4");
    assert_eq!(parsed["split"], false);
    assert_eq!(parsed["answer"], "B3");
    assert_eq!(parsed["answers"][0]["expression"], "B3");
    assert_eq!(parsed["answers"][0]["rows"], serde_json::json!([1, 4]));
}

#[test]
fn qa_exhausted_mock_exits_one() {
    let dir = tempfile::tempdir().unwrap();
    let sheet = write_file(dir.path(), "small.json", SMALL_SHEET);
    let mock = write_file(dir.path(), "mock.json", r#"["{'range': 'A1:B4'}"]"#);

    let output = bin()
        .arg("qa")
        .arg(&sheet)
        .arg("--question")
        .arg("What was the profit in 1999?")
        .arg("--mock")
        .arg(&mock)
        .output()
        .unwrap();
    assert_eq!(output.status.code(), Some(1), "stderr: {}", stderr_of(&output));
}

#[test]
fn live_mode_without_token_exits_three() {
    let dir = tempfile::tempdir().unwrap();
    let sheet = write_file(dir.path(), "small.json", SMALL_SHEET);
    let config = write_file(
        dir.path(),
        "live.toml",
        "[llm]\nendpoint = \"https://model.invalid/v1/complete\"\n",
    );

    let output = bin()
        .arg("detect")
        .arg(&sheet)
        .arg("--live")
        .arg("--config")
        .arg(&config)
        .env_remove("LLM_API_KEY")
        .output()
        .unwrap();
    assert_eq!(output.status.code(), Some(3));
    assert!(stderr_of(&output).contains("LLM_API_KEY"));
}

#[test]
fn live_mode_without_endpoint_exits_three() {
    let dir = tempfile::tempdir().unwrap();
    let sheet = write_file(dir.path(), "small.json", SMALL_SHEET);

    let output = bin()
        .arg("qa")
        .arg(&sheet)
        .arg("--question")
        .arg("total?")
        .arg("--live")
        .env("LLM_API_KEY", "k-123")
        .output()
        .unwrap();
    assert_eq!(output.status.code(), Some(3));
    assert!(stderr_of(&output).contains("endpoint"));
}

#[test]
fn invalid_config_exits_three() {
    let dir = tempfile::tempdir().unwrap();
    let sheet = write_file(dir.path(), "small.json", SMALL_SHEET);
    let config = write_file(dir.path(), "bad.toml", "theta = 3.5\n");

    let output =
        bin().arg("encode").arg(&sheet).arg("--config").arg(&config).output().unwrap();
    assert_eq!(output.status.code(), Some(3));
}

#[test]
fn eval_writes_reports_and_flags_mismatches() {
    let dir = tempfile::tempdir().unwrap();
    write_file(dir.path(), "small.json", SMALL_SHEET);
    write_file(
        dir.path(),
        "wide.json",
        r#"{"name":"Wide","cells":[
            {"addr":"A1","v":"Item","bold":true},{"addr":"B1","v":"Count","bold":true},
            {"addr":"A2","v":"bolts"},{"addr":"B2","v":"40"},
            {"addr":"A3","v":"nuts"},{"addr":"B3","v":"55"}
        ]}"#,
    );
    let gold = write_file(
        dir.path(),
        "gold.json",
        r#"[
            {"sheet": "small.json", "tables": ["A1:B4"]},
            {"sheet": "wide.json", "tables": ["A1:B3"]}
        ]"#,
    );
    let pred = write_file(
        dir.path(),
        "pred.json",
        r#"[
            {"sheet": "small.json", "tables": ["A1:B4"]},
            {"sheet": "ghost.json", "tables": ["A1:C9"]}
        ]"#,
    );
    let out_dir = dir.path().join("reports");

    let output = bin()
        .arg("eval")
        .arg("--gold")
        .arg(&gold)
        .arg("--pred")
        .arg(&pred)
        .arg("--out")
        .arg(&out_dir)
        .output()
        .unwrap();
    assert!(output.status.success(), "stderr: {}", stderr_of(&output));

    let warnings = stderr_of(&output);
    assert!(warnings.contains("ghost.json"), "unknown prediction should be flagged");
    assert!(warnings.contains("wide.json"), "unmatched gold sheet should be flagged");

    for name in ["scores.csv", "scores.json", "ratios.csv", "ratios.json"] {
        assert!(out_dir.join(name).is_file(), "{name} missing");
    }
    let scores: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(out_dir.join("scores.json")).unwrap())
            .unwrap();
    let rows = scores.as_array().unwrap();
    assert_eq!(rows.last().unwrap()["scope"], "overall");
    assert_eq!(rows.last().unwrap()["tp"], 1, "only the matched sheet is scored");

    let ratios: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(out_dir.join("ratios.json")).unwrap())
            .unwrap();
    assert_eq!(ratios.as_array().unwrap().len(), 8, "all module combinations reported");

    let csv = std::fs::read_to_string(out_dir.join("scores.csv")).unwrap();
    assert!(csv.starts_with("scope,tp,fp,fn,precision,recall,f1\n"));
}

#[test]
fn eval_run_mock_matches_prediction_file() {
    let dir = tempfile::tempdir().unwrap();
    write_file(dir.path(), "small.json", SMALL_SHEET);
    let gold =
        write_file(dir.path(), "gold.json", r#"[{"sheet": "small.json", "tables": ["A1:B4"]}]"#);
    let pred =
        write_file(dir.path(), "pred.json", r#"[{"sheet": "small.json", "tables": ["A1:B4"]}]"#);
    let mock = write_file(dir.path(), "mock.json", r#"["{'range': 'A1:B4'}"]"#);

    let from_pred = dir.path().join("from_pred");
    let from_mock = dir.path().join("from_mock");
    let pred_run = bin()
        .arg("eval")
        .arg("--gold")
        .arg(&gold)
        .arg("--pred")
        .arg(&pred)
        .arg("--out")
        .arg(&from_pred)
        .output()
        .unwrap();
    assert!(pred_run.status.success(), "stderr: {}", stderr_of(&pred_run));
    let mock_run = bin()
        .arg("eval")
        .arg("--gold")
        .arg(&gold)
        .arg("--run-mock")
        .arg(&mock)
        .arg("--out")
        .arg(&from_mock)
        .output()
        .unwrap();
    assert!(mock_run.status.success(), "stderr: {}", stderr_of(&mock_run));

    for name in ["scores.csv", "scores.json", "ratios.csv", "ratios.json"] {
        let a = std::fs::read_to_string(from_pred.join(name)).unwrap();
        let b = std::fs::read_to_string(from_mock.join(name)).unwrap();
        assert_eq!(a, b, "{name} differs between --pred and --run-mock");
    }
}

#[test]
fn eval_requires_exactly_one_prediction_source() {
    let dir = tempfile::tempdir().unwrap();
    let gold =
        write_file(dir.path(), "gold.json", r#"[{"sheet": "small.json", "tables": ["A1:B4"]}]"#);

    let neither = bin().arg("eval").arg("--gold").arg(&gold).output().unwrap();
    assert_eq!(neither.status.code(), Some(2));

    let both = bin()
        .arg("eval")
        .arg("--gold")
        .arg(&gold)
        .arg("--pred")
        .arg("p.json")
        .arg("--run-mock")
        .arg("m.json")
        .output()
        .unwrap();
    assert_eq!(both.status.code(), Some(2));
}
