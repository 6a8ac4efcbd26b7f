//! Scoring and reporting: exact-boundary detection metrics, answer
//! normalization, size buckets, token-cost estimates, and per-module
//! compression reports.

use std::sync::OnceLock;

use regex::Regex;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::compress::{encode_with_modules, CompressOptions, ModuleSet};
use crate::encode::{encode_vanilla, Tokenizer};
use crate::grid::{parse_range, render_range, CellRange, Sheet};
use crate::pipeline::QaAnswer;

#[derive(Debug, Error)]
pub enum EvalError {
    #[error("gold file: {0}")]
    Gold(String),
    #[error("empty corpus")]
    EmptyCorpus,
    #[error("module combination `{modules}` encoded to zero tokens")]
    ZeroTokens { modules: String },
}

/// True when prediction and gold agree on all four boundaries.
pub fn eob0_match(pred: &CellRange, gold: &CellRange) -> bool {
    pred == gold
}

/// Reference labeling for one sheet: the primary table list plus any
/// equally-acceptable alternatives.
#[derive(Debug, Clone)]
pub struct DetectionGold {
    pub sheet: String,
    pub tables: Vec<CellRange>,
    pub alt_labelings: Vec<Vec<CellRange>>,
}

/// Match counts with the derived precision/recall/F1.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Tally {
    pub tp: usize,
    pub fp: usize,
    #[serde(rename = "fn")]
    pub fn_: usize,
}

impl Tally {
    pub fn add(&mut self, other: &Tally) {
        self.tp += other.tp;
        self.fp += other.fp;
        self.fn_ += other.fn_;
    }

    pub fn precision(&self) -> f64 {
        ratio_or_zero(self.tp, self.tp + self.fp)
    }

    pub fn recall(&self) -> f64 {
        ratio_or_zero(self.tp, self.tp + self.fn_)
    }

    pub fn f1(&self) -> f64 {
        let (p, r) = (self.precision(), self.recall());
        if p + r > 0.0 {
            2.0 * p * r / (p + r)
        } else {
            0.0
        }
    }
}

fn ratio_or_zero(num: usize, den: usize) -> f64 {
    if den == 0 {
        0.0
    } else {
        num as f64 / den as f64
    }
}

fn tally_against(preds: &[CellRange], labeling: &[CellRange]) -> Tally {
    let mut unmatched: Vec<&CellRange> = labeling.iter().collect();
    let mut tally = Tally::default();
    for pred in preds {
        match unmatched.iter().position(|gold| eob0_match(pred, gold)) {
            Some(i) => {
                unmatched.swap_remove(i);
                tally.tp += 1;
            }
            None => tally.fp += 1,
        }
    }
    tally.fn_ = unmatched.len();
    tally
}

/// Scores predictions by one-to-one exact-boundary matching. When the gold
/// entry carries alternative labelings, every labeling is scored and the one
/// with the best F1 wins (ties keep the primary).
pub fn score_detection(preds: &[CellRange], gold: &DetectionGold) -> Tally {
    let mut best = tally_against(preds, &gold.tables);
    for alt in &gold.alt_labelings {
        let candidate = tally_against(preds, alt);
        if candidate.f1() > best.f1() {
            best = candidate;
        }
    }
    best
}

/// Prompt-size class of a sheet's plain encoding.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SizeBucket {
    Small,
    Medium,
    Large,
    Huge,
}

impl SizeBucket {
    pub fn name(&self) -> &'static str {
        match self {
            SizeBucket::Small => "small",
            SizeBucket::Medium => "medium",
            SizeBucket::Large => "large",
            SizeBucket::Huge => "huge",
        }
    }

    pub fn all() -> [SizeBucket; 4] {
        [SizeBucket::Small, SizeBucket::Medium, SizeBucket::Large, SizeBucket::Huge]
    }
}

impl std::fmt::Display for SizeBucket {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

/// Half-open bucket boundaries: [0,4k) [4k,8k) [8k,32k) [32k,∞).
pub fn bucket_for_tokens(tokens: usize) -> SizeBucket {
    match tokens {
        0..=3_999 => SizeBucket::Small,
        4_000..=7_999 => SizeBucket::Medium,
        8_000..=31_999 => SizeBucket::Large,
        _ => SizeBucket::Huge,
    }
}

/// Buckets a sheet by the token count of its plain (uncompressed) encoding.
pub fn bucketize(sheet: &Sheet, tokenizer: &dyn Tokenizer) -> SizeBucket {
    bucket_for_tokens(encode_vanilla(sheet, false, tokenizer).token_count)
}

static CALL_RE: OnceLock<Regex> = OnceLock::new();

/// Canonical form of an answer expression: uppercased, whitespace dropped,
/// commutative-function arguments and "X AND Y" members sorted.
pub fn normalize_expression(text: &str) -> String {
    let upper = text.trim().to_uppercase();
    let spaced = upper.split_whitespace().collect::<Vec<_>>().join(" ");
    if spaced.contains(" AND ") {
        let mut parts: Vec<String> =
            spaced.split(" AND ").map(normalize_expression).collect();
        parts.sort();
        return parts.join(" AND ");
    }
    let tight: String = spaced.chars().filter(|c| !c.is_whitespace()).collect();
    let call = CALL_RE.get_or_init(|| {
        Regex::new(r"^(SUM|AVG|AVERAGE|MIN|MAX|COUNT)\((.+)\)$").expect("call pattern compiles")
    });
    if let Some(caps) = call.captures(&tight) {
        let mut args: Vec<&str> = caps[2].split(',').collect();
        args.sort_unstable();
        return format!("{}({})", &caps[1], args.join(","));
    }
    tight
}

/// Whether two answer expressions are equivalent under normalization.
pub fn score_expression(answer: &str, gold: &str) -> bool {
    normalize_expression(answer) == normalize_expression(gold)
}

/// [`score_expression`] over a parsed answer.
pub fn score_qa(answer: &QaAnswer, gold: &str) -> bool {
    score_expression(&answer.expression, gold)
}

/// Price of a token count at a given rate per thousand tokens.
pub fn estimate_cost(tokens: f64, price_per_1k: f64) -> f64 {
    tokens * price_per_1k / 1000.0
}

/// One module combination's corpus-wide totals.
#[derive(Debug, Clone, Serialize)]
pub struct ComboStat {
    pub modules: String,
    pub tokens: usize,
    pub ratio: f64,
}

/// Token totals and ratios for all eight module combinations.
#[derive(Debug, Clone, Serialize)]
pub struct CompressionReport {
    pub rows: Vec<ComboStat>,
}

/// Encodes every sheet under all eight module combinations and reports each
/// combination's total tokens and its ratio against the plain encoding.
pub fn compression_report(
    sheets: &[Sheet],
    options: &CompressOptions,
    tokenizer: &dyn Tokenizer,
) -> Result<CompressionReport, EvalError> {
    if sheets.is_empty() {
        return Err(EvalError::EmptyCorpus);
    }
    let totals: Vec<(ModuleSet, usize)> = ModuleSet::combinations()
        .into_iter()
        .map(|modules| {
            let total = sheets
                .iter()
                .map(|s| encode_with_modules(s, &modules, options, tokenizer).token_count)
                .sum();
            (modules, total)
        })
        .collect();
    let vanilla = totals[0].1;
    let rows = totals
        .into_iter()
        .map(|(modules, tokens)| {
            if tokens == 0 {
                return Err(EvalError::ZeroTokens { modules: modules.to_string() });
            }
            Ok(ComboStat {
                modules: modules.to_string(),
                tokens,
                ratio: round4(vanilla as f64 / tokens as f64),
            })
        })
        .collect::<Result<Vec<_>, _>>()?;
    Ok(CompressionReport { rows })
}

impl CompressionReport {
    pub fn ratio_for(&self, modules: &str) -> Option<f64> {
        self.rows.iter().find(|r| r.modules == modules).map(|r| r.ratio)
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("modules,tokens,ratio\n");
        for row in &self.rows {
            out.push_str(&format!("{},{},{}\n", row.modules, row.tokens, row.ratio));
        }
        out
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(&self.rows).expect("report serializes")
    }
}

fn round4(x: f64) -> f64 {
    (x * 10_000.0).round() / 10_000.0
}

/// One scored scope (overall or one size bucket) in a detection report.
#[derive(Debug, Clone, Serialize)]
pub struct ScoreRow {
    pub scope: String,
    pub tp: usize,
    pub fp: usize,
    #[serde(rename = "fn")]
    pub fn_: usize,
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
}

fn score_row(scope: &str, tally: &Tally) -> ScoreRow {
    ScoreRow {
        scope: scope.to_string(),
        tp: tally.tp,
        fp: tally.fp,
        fn_: tally.fn_,
        precision: round4(tally.precision()),
        recall: round4(tally.recall()),
        f1: round4(tally.f1()),
    }
}

/// Detection scores micro-aggregated overall and per size bucket.
#[derive(Debug, Clone, Serialize)]
pub struct ScoreReport {
    pub rows: Vec<ScoreRow>,
}

/// Builds the per-bucket + overall report from per-sheet tallies. Buckets
/// with no sheets are omitted.
pub fn aggregate_scores(per_sheet: &[(SizeBucket, Tally)]) -> ScoreReport {
    let mut overall = Tally::default();
    let mut rows = Vec::new();
    for bucket in SizeBucket::all() {
        let mut sum = Tally::default();
        let mut seen = false;
        for (b, tally) in per_sheet {
            if *b == bucket {
                sum.add(tally);
                seen = true;
            }
        }
        if seen {
            rows.push(score_row(bucket.name(), &sum));
            overall.add(&sum);
        }
    }
    rows.push(score_row("overall", &overall));
    ScoreReport { rows }
}

impl ScoreReport {
    pub fn overall(&self) -> &ScoreRow {
        self.rows.last().expect("reports always carry the overall row")
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("scope,tp,fp,fn,precision,recall,f1\n");
        for r in &self.rows {
            out.push_str(&format!(
                "{},{},{},{},{},{},{}\n",
                r.scope, r.tp, r.fp, r.fn_, r.precision, r.recall, r.f1
            ));
        }
        out
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(&self.rows).expect("report serializes")
    }
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawGold {
    sheet: String,
    tables: Vec<String>,
    #[serde(default)]
    alt: Vec<Vec<String>>,
}

fn parse_labeling(sheet: &str, ranges: &[String]) -> Result<Vec<CellRange>, EvalError> {
    if ranges.is_empty() {
        return Err(EvalError::Gold(format!("{sheet}: empty table labeling")));
    }
    ranges
        .iter()
        .map(|r| {
            parse_range(r).map_err(|e| EvalError::Gold(format!("{sheet}: range `{r}`: {e}")))
        })
        .collect()
}

/// Loads a gold file: a JSON array of `{sheet, tables, alt?}` entries with
/// A1-style ranges.
pub fn load_detection_gold(text: &str) -> Result<Vec<DetectionGold>, EvalError> {
    let raw: Vec<RawGold> =
        serde_json::from_str(text).map_err(|e| EvalError::Gold(e.to_string()))?;
    raw.into_iter()
        .map(|entry| {
            let tables = parse_labeling(&entry.sheet, &entry.tables)?;
            let alt_labelings = entry
                .alt
                .iter()
                .map(|l| parse_labeling(&entry.sheet, l))
                .collect::<Result<Vec<_>, _>>()?;
            Ok(DetectionGold { sheet: entry.sheet, tables, alt_labelings })
        })
        .collect()
}

/// One question with its reference answer.
#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct QaGold {
    pub sheet: String,
    pub question: String,
    pub answer: String,
}

/// Loads a QA gold file: a JSON array of `{sheet, question, answer}`.
pub fn load_qa_gold(text: &str) -> Result<Vec<QaGold>, EvalError> {
    serde_json::from_str(text).map_err(|e| EvalError::Gold(e.to_string()))
}

/// Prediction files mirror gold files without alternatives.
#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawPrediction {
    sheet: String,
    tables: Vec<String>,
}

/// Loads a prediction file: a JSON array of `{sheet, tables}`. Empty table
/// lists are allowed (a sheet where nothing was found).
pub fn load_predictions(text: &str) -> Result<Vec<(String, Vec<CellRange>)>, EvalError> {
    let raw: Vec<RawPrediction> =
        serde_json::from_str(text).map_err(|e| EvalError::Gold(e.to_string()))?;
    raw.into_iter()
        .map(|entry| {
            let tables = entry
                .tables
                .iter()
                .map(|r| {
                    parse_range(r).map_err(|e| {
                        EvalError::Gold(format!("{}: range `{r}`: {e}", entry.sheet))
                    })
                })
                .collect::<Result<Vec<_>, _>>()?;
            Ok((entry.sheet, tables))
        })
        .collect()
}

/// Renders ranges for prediction/gold files.
pub fn ranges_to_strings(ranges: &[CellRange]) -> Vec<String> {
    ranges.iter().map(render_range).collect()
}
