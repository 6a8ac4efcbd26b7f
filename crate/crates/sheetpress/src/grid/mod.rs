//! In-memory spreadsheet model: dense cell grid plus per-cell style metadata.

pub mod a1;
mod json;
mod numfmt;
mod xlsx;

pub use a1::{parse_a1, parse_range, render_a1, render_range, CellAddress, CellRange, MAX_COLS, MAX_ROWS};
pub use json::{ingest_json, sheet_to_json};
pub use numfmt::{format_value, is_date_like_format, is_time_like_format};
pub use xlsx::ingest_xlsx;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum GridError {
    #[error("malformed cell address `{0}`")]
    BadAddress(String),
    #[error("malformed range `{0}`")]
    BadRange(String),
    #[error("{path}: {message}")]
    Schema { path: String, message: String },
    #[error("{path}: duplicate cell address `{addr}`")]
    DuplicateAddress { path: String, addr: String },
    #[error("merge range {range} is not anchored at its top-left cell {addr}")]
    BadMergeAnchor { addr: String, range: String },
    #[error("sheet would be {rows}x{cols}, beyond the {max_rows}x{max_cols} limit")]
    TooLarge { rows: usize, cols: usize, max_rows: usize, max_cols: usize },
    #[error("workbook: {0}")]
    Xlsx(String),
}

/// Which edges of a cell carry a border.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Hash)]
pub struct Borders {
    pub top: bool,
    pub bottom: bool,
    pub left: bool,
    pub right: bool,
}

impl Borders {
    pub fn none() -> Self {
        Borders::default()
    }

    pub fn all() -> Self {
        Borders { top: true, bottom: true, left: true, right: true }
    }

    pub fn count(&self) -> usize {
        [self.top, self.bottom, self.left, self.right].iter().filter(|b| **b).count()
    }

    pub fn is_empty(&self) -> bool {
        self.count() == 0
    }

    /// Edge names in a fixed top/bottom/left/right order, for rendering.
    pub fn sides(&self) -> Vec<&'static str> {
        let mut out = Vec::new();
        if self.top {
            out.push("Top");
        }
        if self.bottom {
            out.push("Bottom");
        }
        if self.left {
            out.push("Left");
        }
        if self.right {
            out.push("Right");
        }
        out
    }

    pub fn from_side_names<'a>(names: impl IntoIterator<Item = &'a str>) -> Option<Self> {
        let mut b = Borders::default();
        for name in names {
            match name.to_ascii_lowercase().as_str() {
                "top" => b.top = true,
                "bottom" => b.bottom = true,
                "left" => b.left = true,
                "right" => b.right = true,
                _ => return None,
            }
        }
        Some(b)
    }
}

/// Visual attributes that matter for structure detection.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct StyleAttrs {
    pub fill_color: Option<String>,
    pub bold: bool,
    pub borders: Borders,
}

impl StyleAttrs {
    pub fn is_default(&self) -> bool {
        self.fill_color.is_none() && !self.bold && self.borders.is_empty()
    }
}

/// One cell: display text, optional number-format string, style, and the
/// merged range it anchors (top-left cell of the merge only).
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Cell {
    pub value: String,
    pub nfs: Option<String>,
    pub style: StyleAttrs,
    pub merge: Option<CellRange>,
}

impl Cell {
    pub fn is_empty_value(&self) -> bool {
        self.value.is_empty()
    }

    /// True when the cell carries nothing at all: no text, format, style, or merge.
    pub fn is_blank(&self) -> bool {
        self.value.is_empty() && self.nfs.is_none() && self.style.is_default() && self.merge.is_none()
    }
}

/// Dense, row-major grid of cells. Trailing all-blank rows and columns are
/// trimmed when a sheet is built, so `rows x cols` is the used bounding box.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Sheet {
    name: String,
    rows: usize,
    cols: usize,
    cells: Vec<Cell>,
}

impl Sheet {
    /// An all-empty sheet of the given dimensions (minimum 1x1).
    pub fn empty(name: &str, rows: usize, cols: usize) -> Self {
        let rows = rows.max(1);
        let cols = cols.max(1);
        Sheet { name: name.to_string(), rows, cols, cells: vec![Cell::default(); rows * cols] }
    }

    /// Test/fixture helper: build a sheet from row-major value strings.
    pub fn from_values(name: &str, rows: &[Vec<&str>]) -> Self {
        let mut b = SheetBuilder::new(name);
        for (i, row) in rows.iter().enumerate() {
            for (j, v) in row.iter().enumerate() {
                if !v.is_empty() {
                    b.set_value(i, j, v);
                }
            }
        }
        b.build().expect("fixture sheets stay within limits")
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn cell(&self, row: usize, col: usize) -> &Cell {
        &self.cells[row * self.cols + col]
    }

    /// Row-major iteration over `(address, cell)`.
    pub fn iter(&self) -> impl Iterator<Item = (CellAddress, &Cell)> + '_ {
        self.cells
            .iter()
            .enumerate()
            .map(|(i, cell)| (CellAddress::new(i / self.cols, i % self.cols), cell))
    }

    pub fn count_non_empty(&self) -> usize {
        self.cells.iter().filter(|c| !c.is_empty_value()).count()
    }

    pub fn full_range(&self) -> CellRange {
        CellRange::new(0, 0, self.rows - 1, self.cols - 1)
    }

    /// Copies a rectangular region into a standalone sheet. Merge ranges are
    /// clipped to the region; clipped-to-nothing merges are dropped.
    pub fn crop(&self, range: &CellRange) -> Sheet {
        let bottom = range.bottom.min(self.rows - 1);
        let right = range.right.min(self.cols - 1);
        let top = range.top.min(bottom);
        let left = range.left.min(right);
        let rows = bottom - top + 1;
        let cols = right - left + 1;
        let mut cells = Vec::with_capacity(rows * cols);
        for r in top..=bottom {
            for c in left..=right {
                let mut cell = self.cell(r, c).clone();
                cell.merge = cell.merge.and_then(|m| {
                    let clipped = CellRange::new(
                        m.top.max(top) - top,
                        m.left.max(left) - left,
                        m.bottom.min(bottom) - top,
                        m.right.min(right) - left,
                    );
                    (clipped.area() > 1).then_some(clipped)
                });
                cells.push(cell);
            }
        }
        Sheet { name: self.name.clone(), rows, cols, cells }
    }

    pub(crate) fn from_parts(name: String, rows: usize, cols: usize, cells: Vec<Cell>) -> Self {
        debug_assert_eq!(cells.len(), rows * cols);
        Sheet { name, rows, cols, cells }
    }
}

/// Sparse-to-dense sheet assembler used by every ingestion path and by the
/// fixture generators. Cells can be set in any order; `build` computes the
/// used bounding box and materializes the dense grid.
#[derive(Debug, Clone)]
pub struct SheetBuilder {
    name: String,
    cells: std::collections::BTreeMap<(usize, usize), Cell>,
}

impl SheetBuilder {
    pub fn new(name: &str) -> Self {
        SheetBuilder { name: name.to_string(), cells: std::collections::BTreeMap::new() }
    }

    fn entry(&mut self, row: usize, col: usize) -> &mut Cell {
        self.cells.entry((row, col)).or_default()
    }

    pub fn set_value(&mut self, row: usize, col: usize, value: &str) -> &mut Self {
        self.entry(row, col).value = value.to_string();
        self
    }

    pub fn set_nfs(&mut self, row: usize, col: usize, nfs: &str) -> &mut Self {
        self.entry(row, col).nfs = Some(nfs.to_string());
        self
    }

    pub fn set_fill(&mut self, row: usize, col: usize, color: &str) -> &mut Self {
        self.entry(row, col).style.fill_color = Some(color.to_string());
        self
    }

    pub fn set_bold(&mut self, row: usize, col: usize, bold: bool) -> &mut Self {
        self.entry(row, col).style.bold = bold;
        self
    }

    pub fn set_borders(&mut self, row: usize, col: usize, borders: Borders) -> &mut Self {
        self.entry(row, col).style.borders = borders;
        self
    }

    /// Attaches a merge range to its top-left cell.
    pub fn set_merge(&mut self, range: CellRange) -> &mut Self {
        self.entry(range.top, range.left).merge = Some(range);
        self
    }

    pub fn has_cell(&self, row: usize, col: usize) -> bool {
        self.cells.contains_key(&(row, col))
    }

    pub fn build(self) -> Result<Sheet, GridError> {
        let mut max_row = 0usize;
        let mut max_col = 0usize;
        let mut any = false;
        for (&(row, col), cell) in &self.cells {
            if cell.is_blank() {
                continue;
            }
            any = true;
            max_row = max_row.max(row);
            max_col = max_col.max(col);
            if let Some(m) = &cell.merge {
                if (m.top, m.left) != (row, col) {
                    return Err(GridError::BadMergeAnchor {
                        addr: render_a1(CellAddress::new(row, col)),
                        range: render_range(m),
                    });
                }
                max_row = max_row.max(m.bottom);
                max_col = max_col.max(m.right);
            }
        }
        let (rows, cols) = if any { (max_row + 1, max_col + 1) } else { (1, 1) };
        if rows > MAX_ROWS || cols > MAX_COLS {
            return Err(GridError::TooLarge { rows, cols, max_rows: MAX_ROWS, max_cols: MAX_COLS });
        }
        let mut cells = vec![Cell::default(); rows * cols];
        for ((row, col), cell) in self.cells {
            if row < rows && col < cols && !cell.is_blank() {
                cells[row * cols + col] = cell;
            }
        }
        Ok(Sheet { name: self.name, rows, cols, cells })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn builder_trims_to_used_bounds() {
        let mut b = SheetBuilder::new("t");
        b.set_value(1, 1, "x");
        b.set_value(3, 2, "y");
        let s = b.build().unwrap();
        assert_eq!((s.rows(), s.cols()), (4, 3));
        assert_eq!(s.cell(1, 1).value, "x");
        assert_eq!(s.cell(3, 2).value, "y");
        assert!(s.cell(0, 0).is_blank());
    }

    #[test]
    fn empty_builder_yields_one_by_one() {
        let s = SheetBuilder::new("t").build().unwrap();
        assert_eq!((s.rows(), s.cols()), (1, 1));
        assert!(s.cell(0, 0).is_blank());
    }

    #[test]
    fn style_only_cells_count_toward_bounds() {
        let mut b = SheetBuilder::new("t");
        b.set_fill(2, 4, "FFCC00");
        let s = b.build().unwrap();
        assert_eq!((s.rows(), s.cols()), (3, 5));
        assert_eq!(s.count_non_empty(), 0);
    }

    #[test]
    fn merge_extends_bounds_and_must_anchor_top_left() {
        let mut b = SheetBuilder::new("t");
        b.set_value(0, 0, "title");
        b.set_merge(CellRange::new(0, 0, 0, 3));
        let s = b.build().unwrap();
        assert_eq!((s.rows(), s.cols()), (1, 4));

        let mut bad = SheetBuilder::new("t");
        bad.set_value(0, 1, "x");
        bad.entry(0, 1).merge = Some(CellRange::new(0, 0, 0, 3));
        assert!(matches!(bad.build(), Err(GridError::BadMergeAnchor { .. })));
    }

    #[test]
    fn crop_clips_merges() {
        let mut b = SheetBuilder::new("t");
        b.set_value(0, 0, "h");
        b.set_merge(CellRange::new(0, 0, 0, 5));
        b.set_value(4, 5, "z");
        let s = b.build().unwrap();
        let c = s.crop(&CellRange::new(0, 0, 2, 2));
        assert_eq!((c.rows(), c.cols()), (3, 3));
        assert_eq!(c.cell(0, 0).merge, Some(CellRange::new(0, 0, 0, 2)));
        // A merge clipped to a single cell disappears.
        let c1 = s.crop(&CellRange::new(0, 0, 0, 0));
        assert_eq!(c1.cell(0, 0).merge, None);
    }

    #[test]
    fn iter_is_row_major() {
        let s = Sheet::from_values("t", &[vec!["a", "b"], vec!["c", "d"]]);
        let values: Vec<_> = s.iter().map(|(_, c)| c.value.clone()).collect();
        assert_eq!(values, vec!["a", "b", "c", "d"]);
        let addrs: Vec<_> = s.iter().map(|(a, _)| render_a1(a)).collect();
        assert_eq!(addrs, vec!["A1", "B1", "A2", "B2"]);
    }
}
