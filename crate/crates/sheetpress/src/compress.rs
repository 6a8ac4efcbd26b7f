//! Composition of the three compression stages — structure extraction,
//! value indexing, and format aggregation — into one encode call.

use std::fmt;

use thiserror::Error;

use crate::aggregate::{aggregate_identical_with, render_aggregated, TypeRules};
use crate::anchors::{derive_anchors, extract_skeleton, AnchorParams};
use crate::encode::{encode_vanilla, EncodedSheet, Tokenizer};
use crate::grid::Sheet;
use crate::index::{invert, render_index, singleton_index, IndexStyle};

#[derive(Debug, Error)]
pub enum CompressError {
    #[error("unknown module `{0}`; expected 1, 2, or 3")]
    UnknownModule(String),
}

/// Which of the three stages are active.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ModuleSet {
    /// Stage 1: structural-anchor skeleton extraction.
    pub extraction: bool,
    /// Stage 2: lossless value-to-range index translation.
    pub translation: bool,
    /// Stage 3: format-aware type aggregation.
    pub aggregation: bool,
}

impl ModuleSet {
    pub fn none() -> Self {
        ModuleSet { extraction: false, translation: false, aggregation: false }
    }

    pub fn all() -> Self {
        ModuleSet { extraction: true, translation: true, aggregation: true }
    }

    /// Parses a comma-separated module list like `"1,3"`. An empty string
    /// selects no modules (plain encoding).
    pub fn from_list(list: &str) -> Result<Self, CompressError> {
        let mut set = ModuleSet::none();
        for part in list.split(',') {
            match part.trim() {
                "" => {}
                "1" => set.extraction = true,
                "2" => set.translation = true,
                "3" => set.aggregation = true,
                other => return Err(CompressError::UnknownModule(other.to_string())),
            }
        }
        Ok(set)
    }

    /// All eight combinations in report order: none, single, pairs, all.
    pub fn combinations() -> [ModuleSet; 8] {
        let mk = |e, t, a| ModuleSet { extraction: e, translation: t, aggregation: a };
        [
            mk(false, false, false),
            mk(true, false, false),
            mk(false, true, false),
            mk(false, false, true),
            mk(true, true, false),
            mk(true, false, true),
            mk(false, true, true),
            mk(true, true, true),
        ]
    }
}

impl fmt::Display for ModuleSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut parts = Vec::new();
        if self.extraction {
            parts.push("1");
        }
        if self.translation {
            parts.push("2");
        }
        if self.aggregation {
            parts.push("3");
        }
        if parts.is_empty() {
            f.write_str("none")
        } else {
            f.write_str(&parts.join("&"))
        }
    }
}

/// Knobs shared by every compression run.
#[derive(Debug, Clone)]
pub struct CompressOptions {
    pub anchor: AnchorParams,
    /// Neighborhood half-width around each anchor line.
    pub k: usize,
    pub rules: TypeRules,
}

impl CompressOptions {
    pub fn new() -> Self {
        CompressOptions { anchor: AnchorParams::default(), k: 4, rules: TypeRules::default() }
    }
}

impl Default for CompressOptions {
    fn default() -> Self {
        CompressOptions::new()
    }
}

/// Encodes a sheet under the selected module combination. With no modules
/// this is the plain cell-per-cell encoding; extraction swaps in the anchor
/// skeleton (and records the coordinate map); translation swaps the layout
/// for the value index; aggregation folds typed areas into the index.
pub fn encode_with_modules(
    sheet: &Sheet,
    modules: &ModuleSet,
    options: &CompressOptions,
    tokenizer: &dyn Tokenizer,
) -> EncodedSheet {
    let (working, coord_map) = if modules.extraction {
        let anchors = derive_anchors(sheet, &options.anchor);
        let (skeleton, map) = extract_skeleton(sheet, &anchors, options.k);
        (skeleton, Some(map))
    } else {
        (sheet.clone(), None)
    };

    let text = match (modules.translation, modules.aggregation) {
        (false, false) => {
            let mut enc = encode_vanilla(&working, false, tokenizer);
            enc.coord_map = coord_map;
            return enc;
        }
        (true, false) => render_index(&invert(&working), IndexStyle::Detection),
        (translation, true) => {
            let index =
                if translation { invert(&working) } else { singleton_index(&working) };
            let areas = aggregate_identical_with(&working, &options.rules);
            render_aggregated(&areas, &index)
        }
    };
    let token_count = tokenizer.count(&text);
    EncodedSheet { text, token_count, coord_map }
}
