//! Command-line front end: encode sheets, detect tables, answer questions,
//! and score prediction files. All outputs are deterministic for fixed
//! inputs and mock scripts; exit codes are 0 success, 1 pipeline error,
//! 2 input error, 3 configuration error.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{anyhow, Context};
use clap::{Args, Parser, Subcommand};

use sheetpress::eval::{
    aggregate_scores, load_detection_gold, load_predictions, ranges_to_strings, DetectionGold,
};
use sheetpress::grid::{ingest_json, ingest_xlsx};
use sheetpress::pipeline::{HttpLlmClient, LlmClient, MockLlmClient, PipelineError};
use sheetpress::{
    bucketize, compression_ratio, compression_report, encode_vanilla, encode_with_modules,
    render_range, run_cos_qa, run_detection, score_detection, CellRange, Config, ModuleSet,
    QaOutcome, Sheet,
};

#[derive(Parser)]
#[command(name = "sheetpress", version, about = "Spreadsheet encoding, compression, and table QA")]
struct Cli {
    /// TOML configuration file (all keys optional).
    #[arg(long, short, global = true, value_name = "PATH")]
    config: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Encode a sheet as prompt text.
    Encode(EncodeArgs),
    /// Detect table ranges with a model over the compressed encoding.
    Detect(DetectArgs),
    /// Answer a question about a sheet in two model stages.
    Qa(QaArgs),
    /// Score detection predictions and report compression ratios.
    Eval(EvalArgs),
}

#[derive(Args)]
struct EncodeArgs {
    /// Input sheet (.json or .xlsx).
    input: PathBuf,
    /// Worksheet index inside an .xlsx workbook.
    #[arg(long, default_value_t = 0, value_name = "INDEX")]
    sheet: usize,
    /// Plain address,value encoding (the default).
    #[arg(long, conflicts_with = "compress")]
    vanilla: bool,
    /// Compressed encoding: anchor extraction, value index, typed areas.
    #[arg(long)]
    compress: bool,
    /// Module subset for --compress: comma-separated from {1,2,3}
    /// (1 extraction, 2 index translation, 3 type aggregation).
    #[arg(long, value_name = "LIST", requires = "compress", value_parser = parse_modules)]
    modules: Option<ModuleSet>,
    /// Append the number-format block to the vanilla encoding.
    #[arg(long, conflicts_with = "compress")]
    format: bool,
    /// Write token statistics (before/after counts and ratio) as JSON.
    #[arg(long, value_name = "PATH")]
    stats: Option<PathBuf>,
}

#[derive(Args)]
struct DetectArgs {
    /// Input sheet (.json or .xlsx).
    input: PathBuf,
    /// Worksheet index inside an .xlsx workbook.
    #[arg(long, default_value_t = 0, value_name = "INDEX")]
    sheet: usize,
    /// Replay canned responses from a JSON array of strings.
    #[arg(long, value_name = "PATH", conflicts_with = "live", required_unless_present = "live")]
    mock: Option<PathBuf>,
    /// Call the configured HTTP endpoint; the bearer token is read from the
    /// environment variable named in the configuration.
    #[arg(long)]
    live: bool,
}

#[derive(Args)]
struct QaArgs {
    /// Input sheet (.json or .xlsx).
    input: PathBuf,
    /// Worksheet index inside an .xlsx workbook.
    #[arg(long, default_value_t = 0, value_name = "INDEX")]
    sheet: usize,
    /// The question to answer.
    #[arg(long, value_name = "TEXT")]
    question: String,
    /// Replay canned responses from a JSON array of strings.
    #[arg(long, value_name = "PATH", conflicts_with = "live", required_unless_present = "live")]
    mock: Option<PathBuf>,
    /// Call the configured HTTP endpoint; the bearer token is read from the
    /// environment variable named in the configuration.
    #[arg(long)]
    live: bool,
}

#[derive(Args)]
struct EvalArgs {
    /// Detection gold file: JSON array of {sheet, tables, alt?}. Sheet paths
    /// are resolved relative to this file's directory.
    #[arg(long, value_name = "PATH")]
    gold: PathBuf,
    /// Predictions file: JSON array of {sheet, tables}.
    #[arg(long, value_name = "PATH", conflicts_with = "run_mock", required_unless_present = "run_mock")]
    pred: Option<PathBuf>,
    /// Produce predictions by running detection with canned responses,
    /// consumed in gold-file order (one response per sheet).
    #[arg(long, value_name = "PATH")]
    run_mock: Option<PathBuf>,
    /// Directory for scores.{csv,json} and ratios.{csv,json}.
    #[arg(long, default_value = ".", value_name = "DIR")]
    out: PathBuf,
}

/// Errors carry the exit code class they belong to.
enum CliError {
    /// The pipeline itself failed (model call, stage parsing, output I/O).
    Pipeline(anyhow::Error),
    /// Unreadable or ill-formed input data.
    Input(anyhow::Error),
    /// Invalid configuration, including live mode without credentials.
    Config(anyhow::Error),
}

impl CliError {
    fn code(&self) -> u8 {
        match self {
            CliError::Pipeline(_) => 1,
            CliError::Input(_) => 2,
            CliError::Config(_) => 3,
        }
    }

    fn message(&self) -> &anyhow::Error {
        match self {
            CliError::Pipeline(e) | CliError::Input(e) | CliError::Config(e) => e,
        }
    }
}

impl From<PipelineError> for CliError {
    fn from(err: PipelineError) -> Self {
        match err {
            PipelineError::Config(e) => CliError::Config(anyhow!(e)),
            other => CliError::Pipeline(anyhow!(other)),
        }
    }
}

fn input_err(err: impl Into<anyhow::Error>) -> CliError {
    CliError::Input(err.into())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let config = match load_config(cli.config.as_deref()) {
        Ok(config) => config,
        Err(err) => return fail(err),
    };
    let result = match cli.command {
        Command::Encode(args) => cmd_encode(args, &config),
        Command::Detect(args) => cmd_detect(args, &config),
        Command::Qa(args) => cmd_qa(args, &config),
        Command::Eval(args) => cmd_eval(args, &config),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => fail(err),
    }
}

fn fail(err: CliError) -> ExitCode {
    eprintln!("error: {:#}", err.message());
    ExitCode::from(err.code())
}

fn load_config(path: Option<&Path>) -> Result<Config, CliError> {
    match path {
        None => Ok(Config::default()),
        Some(p) => sheetpress::config::load(p).map_err(|e| CliError::Config(anyhow!(e))),
    }
}

fn parse_modules(text: &str) -> Result<ModuleSet, String> {
    let mut set = ModuleSet::none();
    for part in text.split(',') {
        match part.trim() {
            "1" => set.extraction = true,
            "2" => set.translation = true,
            "3" => set.aggregation = true,
            other => return Err(format!("unknown module `{other}` (expected 1, 2, or 3)")),
        }
    }
    Ok(set)
}

fn module_label(set: &ModuleSet) -> String {
    let mut parts = Vec::new();
    if set.extraction {
        parts.push("1");
    }
    if set.translation {
        parts.push("2");
    }
    if set.aggregation {
        parts.push("3");
    }
    if parts.is_empty() {
        "none".to_string()
    } else {
        parts.join("&")
    }
}

/// Loads one worksheet from a .json or .xlsx file.
fn load_sheet(path: &Path, index: usize) -> Result<Sheet, CliError> {
    let bytes = std::fs::read(path)
        .with_context(|| format!("reading {}", path.display()))
        .map_err(CliError::Input)?;
    let extension = path.extension().and_then(|e| e.to_str()).unwrap_or_default();
    match extension.to_ascii_lowercase().as_str() {
        "xlsx" => {
            let sheets = ingest_xlsx(&bytes).map_err(input_err)?;
            let count = sheets.len();
            sheets.into_iter().nth(index).ok_or_else(|| {
                input_err(anyhow!(
                    "{} has {count} worksheet(s); index {index} is out of range",
                    path.display()
                ))
            })
        }
        "json" => {
            if index != 0 {
                return Err(input_err(anyhow!("JSON sheets hold one worksheet; use --sheet 0")));
            }
            ingest_json(&bytes).map_err(input_err)
        }
        other => Err(input_err(anyhow!(
            "{}: unsupported extension `{other}` (expected .json or .xlsx)",
            path.display()
        ))),
    }
}

fn build_client(
    mock: Option<&Path>,
    config: &Config,
) -> Result<Box<dyn LlmClient>, CliError> {
    match mock {
        Some(path) => {
            let bytes = std::fs::read(path)
                .with_context(|| format!("reading {}", path.display()))
                .map_err(CliError::Input)?;
            let client = MockLlmClient::from_json(&bytes).map_err(|e| input_err(anyhow!(e)))?;
            Ok(Box::new(client))
        }
        None => {
            if config.llm.endpoint.is_empty() {
                return Err(CliError::Config(anyhow!(
                    "live mode needs llm.endpoint in the configuration"
                )));
            }
            if std::env::var(&config.llm.auth_env).map(|v| v.is_empty()).unwrap_or(true) {
                return Err(CliError::Config(anyhow!(
                    "live mode needs the {} environment variable",
                    config.llm.auth_env
                )));
            }
            let client = HttpLlmClient::new(
                &config.llm.endpoint,
                &config.llm.model,
                &config.llm.auth_env,
                config.llm_timeout(),
            )
            .map_err(|e| CliError::Config(anyhow!(e)))?;
            Ok(Box::new(client))
        }
    }
}

fn cmd_encode(args: EncodeArgs, config: &Config) -> Result<(), CliError> {
    let sheet = load_sheet(&args.input, args.sheet)?;
    let tokenizer = config.tokenizer().map_err(|e| CliError::Config(anyhow!(e)))?;
    let options = config.compress_options().map_err(|e| CliError::Config(anyhow!(e)))?;

    let vanilla_tokens = encode_vanilla(&sheet, false, tokenizer.as_ref()).token_count;
    let (label, encoded) = if args.compress {
        let modules = args.modules.unwrap_or_else(ModuleSet::all);
        let encoded = encode_with_modules(&sheet, &modules, &options, tokenizer.as_ref());
        (module_label(&modules), encoded)
    } else {
        let encoded = encode_vanilla(&sheet, args.format, tokenizer.as_ref());
        ("vanilla".to_string(), encoded)
    };

    print!("{}", encoded.text);
    if !encoded.text.ends_with('\n') {
        println!();
    }

    if let Some(stats_path) = &args.stats {
        let ratio = compression_ratio(vanilla_tokens, encoded.token_count)
            .map_err(|e| CliError::Pipeline(anyhow!(e)))?;
        let ratio = (ratio * 10_000.0).round() / 10_000.0;
        let stats = serde_json::json!({
            "input": args.input.display().to_string(),
            "sheet": sheet.name(),
            "rows": sheet.rows(),
            "cols": sheet.cols(),
            "modules": label,
            "vanilla_tokens": vanilla_tokens,
            "encoded_tokens": encoded.token_count,
            "ratio": ratio,
        });
        let text = serde_json::to_string_pretty(&stats).expect("stats serialize");
        std::fs::write(stats_path, text + "\n")
            .with_context(|| format!("writing {}", stats_path.display()))
            .map_err(CliError::Pipeline)?;
    }
    Ok(())
}

fn cmd_detect(args: DetectArgs, config: &Config) -> Result<(), CliError> {
    let sheet = load_sheet(&args.input, args.sheet)?;
    let client = build_client(args.mock.as_deref(), config)?;
    let result = run_detection(&sheet, config, client.as_ref())?;
    let output = serde_json::json!({
        "sheet": sheet.name(),
        "ranges": ranges_to_strings(&result.ranges),
        "raw_response": result.raw_response,
    });
    println!("{}", serde_json::to_string_pretty(&output).expect("output serializes"));
    Ok(())
}

fn qa_json(sheet: &Sheet, outcome: &QaOutcome) -> serde_json::Value {
    let answers: Vec<serde_json::Value> = outcome
        .answers
        .iter()
        .map(|chunk| {
            serde_json::json!({
                "rows": [chunk.rows.0 + 1, chunk.rows.1 + 1],
                "expression": chunk.answer.expression,
                "raw_response": chunk.answer.raw_response,
            })
        })
        .collect();
    serde_json::json!({
        "sheet": sheet.name(),
        "table_range": render_range(&outcome.table_range),
        "split": outcome.split,
        "answers": answers,
        "answer": outcome.first_non_empty().map(|a| a.expression.clone()),
    })
}

fn cmd_qa(args: QaArgs, config: &Config) -> Result<(), CliError> {
    let sheet = load_sheet(&args.input, args.sheet)?;
    let client = build_client(args.mock.as_deref(), config)?;
    let outcome = run_cos_qa(&sheet, &args.question, config, client.as_ref())?;
    let output = qa_json(&sheet, &outcome);
    println!("{}", serde_json::to_string_pretty(&output).expect("output serializes"));
    Ok(())
}

fn cmd_eval(args: EvalArgs, config: &Config) -> Result<(), CliError> {
    let gold_text = std::fs::read_to_string(&args.gold)
        .with_context(|| format!("reading {}", args.gold.display()))
        .map_err(CliError::Input)?;
    let gold = load_detection_gold(&gold_text).map_err(input_err)?;
    let gold_dir = args.gold.parent().unwrap_or_else(|| Path::new("."));

    let mut sheets = Vec::with_capacity(gold.len());
    for entry in &gold {
        sheets.push(load_sheet(&gold_dir.join(&entry.sheet), 0)?);
    }

    let tokenizer = config.tokenizer().map_err(|e| CliError::Config(anyhow!(e)))?;
    let options = config.compress_options().map_err(|e| CliError::Config(anyhow!(e)))?;

    let (scored, predictions) = match (&args.pred, &args.run_mock) {
        (Some(pred_path), None) => {
            let pred_text = std::fs::read_to_string(pred_path)
                .with_context(|| format!("reading {}", pred_path.display()))
                .map_err(CliError::Input)?;
            let preds = load_predictions(&pred_text).map_err(input_err)?;
            matched_predictions(&gold, preds)
        }
        (None, Some(mock_path)) => {
            let bytes = std::fs::read(mock_path)
                .with_context(|| format!("reading {}", mock_path.display()))
                .map_err(CliError::Input)?;
            let client = MockLlmClient::from_json(&bytes).map_err(|e| input_err(anyhow!(e)))?;
            let mut preds = Vec::with_capacity(gold.len());
            for (entry, sheet) in gold.iter().zip(&sheets) {
                let result = run_detection(sheet, config, &client)?;
                preds.push((entry.sheet.clone(), result.ranges));
            }
            ((0..gold.len()).collect(), preds)
        }
        _ => unreachable!("clap enforces exactly one prediction source"),
    };

    let mut per_sheet = Vec::with_capacity(scored.len());
    let mut scored_sheets = Vec::with_capacity(scored.len());
    for (gold_idx, (_, ranges)) in scored.iter().zip(&predictions) {
        let bucket = bucketize(&sheets[*gold_idx], tokenizer.as_ref());
        let tally = score_detection(ranges, &gold[*gold_idx]);
        per_sheet.push((bucket, tally));
        scored_sheets.push(sheets[*gold_idx].clone());
    }
    if per_sheet.is_empty() {
        return Err(input_err(anyhow!("no prediction matches any gold sheet id")));
    }

    let scores = aggregate_scores(&per_sheet);
    let ratios = compression_report(&scored_sheets, &options, tokenizer.as_ref())
        .map_err(|e| input_err(anyhow!(e)))?;

    std::fs::create_dir_all(&args.out)
        .with_context(|| format!("creating {}", args.out.display()))
        .map_err(CliError::Pipeline)?;
    let outputs = [
        ("scores.csv", scores.to_csv()),
        ("scores.json", scores.to_json() + "\n"),
        ("ratios.csv", ratios.to_csv()),
        ("ratios.json", ratios.to_json() + "\n"),
    ];
    for (name, text) in outputs {
        let path = args.out.join(name);
        std::fs::write(&path, text)
            .with_context(|| format!("writing {}", path.display()))
            .map_err(CliError::Pipeline)?;
    }

    let overall = scores.overall();
    println!(
        "scored {} sheet(s): precision {:.4}, recall {:.4}, F1 {:.4}",
        per_sheet.len(),
        overall.precision,
        overall.recall,
        overall.f1
    );
    if let Some(full) = ratios.ratio_for("1&2&3") {
        println!("full-compression ratio: {full}");
    }
    println!("reports written to {}", args.out.display());
    Ok(())
}

/// Pairs prediction rows with gold rows by sheet id; mismatches on either
/// side are listed on stderr and excluded from scoring. Returns the gold
/// indices that were scored plus the predictions, aligned and in gold order.
fn matched_predictions(
    gold: &[DetectionGold],
    preds: Vec<(String, Vec<CellRange>)>,
) -> (Vec<usize>, Vec<(String, Vec<CellRange>)>) {
    let mut by_sheet: std::collections::BTreeMap<&str, &Vec<CellRange>> = Default::default();
    let mut unknown = Vec::new();
    for (sheet, ranges) in &preds {
        if gold.iter().any(|g| g.sheet == *sheet) {
            by_sheet.insert(sheet, ranges);
        } else {
            unknown.push(sheet.clone());
        }
    }
    for sheet in &unknown {
        eprintln!("warning: prediction for unknown sheet `{sheet}` excluded");
    }

    let mut scored = Vec::new();
    let mut aligned = Vec::new();
    for (idx, entry) in gold.iter().enumerate() {
        match by_sheet.get(entry.sheet.as_str()) {
            Some(ranges) => {
                scored.push(idx);
                aligned.push((entry.sheet.clone(), (*ranges).clone()));
            }
            None => eprintln!("warning: gold sheet `{}` has no prediction; excluded", entry.sheet),
        }
    }
    (scored, aligned)
}
