//! Markdown-style cell-per-cell encoding and token accounting.

use thiserror::Error;

use crate::anchors::CoordinateMap;
use crate::grid::{render_a1, CellAddress, Sheet};

#[derive(Debug, Error)]
pub enum EncodeError {
    #[error("compression ratio is undefined for an empty encoding")]
    UndefinedRatio,
}

/// Counts tokens in encoded text. Implementations must be deterministic:
/// equal input, equal count.
pub trait Tokenizer: Send + Sync {
    fn name(&self) -> &'static str;
    fn count(&self, text: &str) -> usize;
}

/// Default estimator: every maximal alphanumeric run of length `L` costs
/// `ceil(L/4)` tokens, every other non-whitespace character costs one, and
/// whitespace is free.
pub struct HeuristicTokenizer;

impl Tokenizer for HeuristicTokenizer {
    fn name(&self) -> &'static str {
        "heuristic"
    }

    fn count(&self, text: &str) -> usize {
        default_token_estimate(text)
    }
}

/// Coarser estimator: `ceil(chars/4)` over the whole text. Useful as a
/// cheap alternative when per-character classes don't matter.
pub struct CharQuadTokenizer;

impl Tokenizer for CharQuadTokenizer {
    fn name(&self) -> &'static str {
        "char4"
    }

    fn count(&self, text: &str) -> usize {
        text.chars().count().div_ceil(4)
    }
}

/// See [`HeuristicTokenizer`].
pub fn default_token_estimate(text: &str) -> usize {
    let mut total = 0usize;
    let mut run = 0usize;
    for ch in text.chars() {
        if ch.is_alphanumeric() {
            run += 1;
        } else {
            total += run.div_ceil(4);
            run = 0;
            if !ch.is_whitespace() {
                total += 1;
            }
        }
    }
    total + run.div_ceil(4)
}

/// An encoded sheet: the prompt text, its token count, and (when structure
/// extraction ran) the map from compressed coordinates back to the original.
#[derive(Debug, Clone)]
pub struct EncodedSheet {
    pub text: String,
    pub token_count: usize,
    pub coord_map: Option<CoordinateMap>,
}

/// Cell-per-cell encoding: each cell becomes `|<address>,<value>` and each
/// row ends with a newline. Empty cells keep their address with an empty
/// value slot. With `include_format`, a second block (separated by a blank
/// line) lists per-cell style tokens in the same layout.
pub fn encode_vanilla(sheet: &Sheet, include_format: bool, tokenizer: &dyn Tokenizer) -> EncodedSheet {
    encode_vanilla_at(sheet, include_format, CellAddress::new(0, 0), tokenizer)
}

/// [`encode_vanilla`] with addresses shifted by `origin`, so a cropped
/// region can be rendered under its original sheet coordinates.
pub fn encode_vanilla_at(
    sheet: &Sheet,
    include_format: bool,
    origin: CellAddress,
    tokenizer: &dyn Tokenizer,
) -> EncodedSheet {
    let mut text = encode_rows_at(sheet, 0, sheet.rows(), origin);
    if include_format {
        text.push('\n');
        for r in 0..sheet.rows() {
            for c in 0..sheet.cols() {
                let cell = sheet.cell(r, c);
                text.push('|');
                text.push_str(&render_a1(CellAddress::new(origin.row + r, origin.col + c)));
                text.push(',');
                let mut tokens = Vec::new();
                for side in cell.style.borders.sides() {
                    tokens.push(format!("{side} Border"));
                }
                if cell.style.fill_color.is_some() {
                    tokens.push("Fill Color".to_string());
                }
                if cell.style.bold {
                    tokens.push("Font Bold".to_string());
                }
                text.push_str(&tokens.join(","));
            }
            text.push('\n');
        }
    }
    let token_count = tokenizer.count(&text);
    EncodedSheet { text, token_count, coord_map: None }
}

/// Renders rows `[row_start, row_end)` of the value block, addresses offset
/// by `origin`. Building block for header+chunk prompts.
pub(crate) fn encode_rows_at(
    sheet: &Sheet,
    row_start: usize,
    row_end: usize,
    origin: CellAddress,
) -> String {
    let mut text = String::new();
    for r in row_start..row_end {
        for c in 0..sheet.cols() {
            text.push('|');
            text.push_str(&render_a1(CellAddress::new(origin.row + r, origin.col + c)));
            text.push(',');
            text.push_str(&sheet.cell(r, c).value);
        }
        text.push('\n');
    }
    text
}

/// Token-count compression ratio (original over compressed).
pub fn compression_ratio(tokens_before: usize, tokens_after: usize) -> Result<f64, EncodeError> {
    if tokens_after == 0 {
        return Err(EncodeError::UndefinedRatio);
    }
    Ok(tokens_before as f64 / tokens_after as f64)
}
