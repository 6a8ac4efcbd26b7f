//! Lossless value index: maps each distinct cell value to the rectangles it
//! occupies, discarding empty cells entirely.

use indexmap::IndexMap;
use thiserror::Error;

use crate::grid::{render_range, CellRange, Sheet, SheetBuilder};

#[derive(Debug, Error)]
pub enum IndexError {
    #[error("range {0} extends beyond the recorded sheet bounds")]
    OutOfBounds(String),
    #[error("ranges {0} and {1} overlap; the index does not describe a valid sheet")]
    Overlap(String, String),
}

/// Value-to-regions index over a sheet. Entry order is the first row-major
/// occurrence of each value, making renders deterministic.
#[derive(Debug, Clone, PartialEq)]
pub struct ValueIndex {
    entries: IndexMap<String, Vec<CellRange>>,
    rows: usize,
    cols: usize,
}

impl ValueIndex {
    pub fn entries(&self) -> impl Iterator<Item = (&str, &[CellRange])> {
        self.entries.iter().map(|(v, r)| (v.as_str(), r.as_slice()))
    }

    pub fn get(&self, value: &str) -> Option<&[CellRange]> {
        self.entries.get(value).map(|r| r.as_slice())
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Original sheet dimensions, kept so restoration can rebuild the exact
    /// grid even when trailing lines hold no values.
    pub fn bounds(&self) -> (usize, usize) {
        (self.rows, self.cols)
    }

    /// JSON object rendering `{value: [ranges...]}` in entry order.
    pub fn to_json(&self) -> String {
        let mut map = serde_json::Map::new();
        for (value, ranges) in &self.entries {
            let list: Vec<serde_json::Value> =
                ranges.iter().map(|r| serde_json::Value::String(render_range(r))).collect();
            map.insert(value.clone(), serde_json::Value::Array(list));
        }
        serde_json::to_string_pretty(&serde_json::Value::Object(map))
            .expect("index JSON serialization cannot fail")
    }
}

/// Greedy row-major maximal-rectangle cover of equal-valued cells: grow a
/// run rightward from the first uncovered cell, then grow the strip downward
/// while every column in the next row still matches.
fn cover_from(
    sheet: &Sheet,
    covered: &mut [bool],
    start_row: usize,
    start_col: usize,
    value: &str,
) -> CellRange {
    let (m, n) = (sheet.rows(), sheet.cols());
    let mut right = start_col;
    while right + 1 < n
        && !covered[start_row * n + right + 1]
        && sheet.cell(start_row, right + 1).value == value
    {
        right += 1;
    }
    let mut bottom = start_row;
    'grow: while bottom + 1 < m {
        for c in start_col..=right {
            if covered[(bottom + 1) * n + c] || sheet.cell(bottom + 1, c).value != value {
                break 'grow;
            }
        }
        bottom += 1;
    }
    for r in start_row..=bottom {
        for c in start_col..=right {
            covered[r * n + c] = true;
        }
    }
    CellRange::new(start_row, start_col, bottom, right)
}

/// Builds the value index: every non-empty cell lands in exactly one range,
/// identical values share one entry, empty cells are omitted.
pub fn invert(sheet: &Sheet) -> ValueIndex {
    let (m, n) = (sheet.rows(), sheet.cols());
    let mut covered = vec![false; m * n];
    let mut entries: IndexMap<String, Vec<CellRange>> = IndexMap::new();
    for r in 0..m {
        for c in 0..n {
            if covered[r * n + c] {
                continue;
            }
            let value = &sheet.cell(r, c).value;
            if value.is_empty() {
                continue;
            }
            let range = cover_from(sheet, &mut covered, r, c, value);
            entries.entry(value.clone()).or_default().push(range);
        }
    }
    ValueIndex { entries, rows: m, cols: n }
}

/// One single-cell range per non-empty cell, in row-major order — the
/// degenerate index used when rectangle merging is disabled.
pub(crate) fn singleton_index(sheet: &Sheet) -> ValueIndex {
    let mut entries: IndexMap<String, Vec<CellRange>> = IndexMap::new();
    for (addr, cell) in sheet.iter() {
        if !cell.is_empty_value() {
            entries.entry(cell.value.clone()).or_default().push(CellRange::single(addr));
        }
    }
    ValueIndex { entries, rows: sheet.rows(), cols: sheet.cols() }
}

/// Rebuilds the value grid from an index. Fails if ranges leave the recorded
/// bounds or overlap (each cell must come from exactly one range).
pub fn restore(index: &ValueIndex) -> Result<Sheet, IndexError> {
    let (rows, cols) = index.bounds();
    let mut owner: Vec<Option<usize>> = vec![None; rows * cols];
    let mut flat: Vec<(&CellRange, &str)> = Vec::new();
    for (value, ranges) in index.entries.iter() {
        for range in ranges {
            flat.push((range, value));
        }
    }
    let mut builder = SheetBuilder::new("restored");
    for (ri, &(range, value)) in flat.iter().enumerate() {
        if range.bottom >= rows || range.right >= cols {
            return Err(IndexError::OutOfBounds(render_range(range)));
        }
        for addr in range.cells() {
            let slot = &mut owner[addr.row * cols + addr.col];
            if let Some(prev) = slot {
                let prev_range = flat[*prev].0;
                return Err(IndexError::Overlap(render_range(prev_range), render_range(range)));
            }
            *slot = Some(ri);
            builder.set_value(addr.row, addr.col, value);
        }
    }
    let sheet = builder.build().expect("restored ranges were bounds-checked");
    // Reinstate the recorded bounds: trailing valueless lines are part of
    // the original geometry.
    if sheet.rows() == rows && sheet.cols() == cols {
        return Ok(sheet);
    }
    let mut cells = Vec::with_capacity(rows * cols);
    for r in 0..rows {
        for c in 0..cols {
            if r < sheet.rows() && c < sheet.cols() {
                cells.push(sheet.cell(r, c).clone());
            } else {
                cells.push(Default::default());
            }
        }
    }
    Ok(Sheet::from_parts("restored".to_string(), rows, cols, cells))
}

/// Inter-tuple separator for rendered indexes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum IndexStyle {
    /// Single line, tuples joined by commas — compact prompt form.
    Detection,
    /// One tuple per line — easier to scan in answer-stage prompts.
    Qa,
}

impl IndexStyle {
    fn separator(&self) -> &'static str {
        match self {
            IndexStyle::Detection => ",",
            IndexStyle::Qa => "\n",
        }
    }
}

pub(crate) fn render_tuple(content: &str, ranges: &[CellRange]) -> String {
    let list: Vec<String> = ranges.iter().map(render_range).collect();
    format!("({}|{})", content, list.join(","))
}

/// Renders the index as `(value|range,range)` tuples in entry order.
pub fn render_index(index: &ValueIndex, style: IndexStyle) -> String {
    let tuples: Vec<String> =
        index.entries.iter().map(|(v, ranges)| render_tuple(v, ranges)).collect();
    tuples.join(style.separator())
}
