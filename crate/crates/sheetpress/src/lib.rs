//! Spreadsheet encoding, compression, and question answering.
//!
//! The library turns dense spreadsheets into compact prompt encodings via
//! three composable stages — structural-anchor skeleton extraction, lossless
//! inverted-index translation, and format-aware type aggregation — and runs
//! a two-stage table-detection / question-answering pipeline on top of them.

pub mod aggregate;
pub mod anchors;
pub mod compress;
pub mod config;
pub mod encode;
pub mod eval;
pub mod grid;
pub mod index;
pub mod pipeline;
pub mod synth;

pub use aggregate::{aggregate_identical, recognize_type, DataType, TypeRules, TypedArea};
pub use anchors::{derive_anchors, extract_skeleton, AnchorParams, AnchorSet, CoordinateMap};
pub use compress::{encode_with_modules, CompressOptions, ModuleSet};
pub use config::Config;
pub use encode::{
    compression_ratio, default_token_estimate, encode_vanilla, EncodedSheet, HeuristicTokenizer,
    Tokenizer,
};
pub use eval::{
    bucketize, compression_report, eob0_match, estimate_cost, score_detection, score_qa,
    DetectionGold, ScoreReport, SizeBucket, Tally,
};
pub use grid::{
    parse_a1, parse_range, render_a1, render_range, Cell, CellAddress, CellRange, GridError,
    Sheet, SheetBuilder,
};
pub use index::{invert, render_index, restore, IndexStyle, ValueIndex};
pub use synth::{boundary_marked_sheet, figure_like_sheet, random_sheet, two_table_sheet};
pub use pipeline::{
    run_cos_qa, run_detection, DetectionResult, LlmClient, LlmRequest, MockLlmClient, QaAnswer,
    QaOutcome,
};
