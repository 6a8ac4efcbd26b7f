//! Structural anchors: find the rows and columns where the layout changes
//! (headers, table edges, blank separators) and keep only their k-neighborhood,
//! discarding the homogeneous interior that carries no structure.

use std::collections::BTreeSet;

use thiserror::Error;

use crate::aggregate::{recognize_type, DataType};
use crate::grid::{render_range, CellRange, Sheet};

#[derive(Debug, Error)]
pub enum AnchorError {
    #[error("range {range} lies outside the compressed sheet ({rows}x{cols})")]
    RangeOutsideMap { range: String, rows: usize, cols: usize },
}

/// Which line set drives skeleton extraction.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum AnchorSource {
    /// Heterogeneity discrepancies only.
    DiscrepancyLines,
    /// Edges of filtered candidate table boundaries (falls back to
    /// discrepancy lines when filtering leaves nothing).
    CandidateEdges,
    /// Union of both.
    #[default]
    Union,
}

/// Thresholds for anchor detection and candidate filtering.
#[derive(Debug, Clone)]
pub struct AnchorParams {
    /// Minimum change in a cell-class fraction for two neighboring lines to
    /// count as heterogeneous.
    pub theta: f64,
    /// Minimum fill density inside a candidate table boundary.
    pub delta: f64,
    /// Minimum fraction of header-like cells along a candidate's top row or
    /// left column.
    pub eta: f64,
    pub source: AnchorSource,
}

impl Default for AnchorParams {
    fn default() -> Self {
        AnchorParams { theta: 0.3, delta: 0.1, eta: 0.5, source: AnchorSource::default() }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Axis {
    Row,
    Col,
}

/// Aggregate features of one row or column.
#[derive(Debug, Clone, PartialEq)]
pub struct RowColProfile {
    pub axis: Axis,
    pub index: usize,
    pub frac_empty: f64,
    /// Fraction of cells holding a recognized data type (numbers, dates,
    /// currency, and similar).
    pub frac_numeric: f64,
    /// Fraction of cells holding unrecognized, non-empty text.
    pub frac_text: f64,
    pub border_count: usize,
    /// Canonical digest of the fill colors along the line ("color*count"
    /// pairs, sorted), so any change in filling is visible as inequality.
    pub fill_signature: String,
    /// Number of merged ranges crossing the line.
    pub merge_spans: usize,
    pub bold_count: usize,
}

#[derive(Clone, Copy, PartialEq)]
enum CellKind {
    Empty,
    Data,
    Text,
}

fn classify(value: &str) -> CellKind {
    if value.is_empty() {
        CellKind::Empty
    } else if recognize_type(value) != DataType::Others {
        CellKind::Data
    } else {
        CellKind::Text
    }
}

fn fill_signature(colors: &mut Vec<&str>) -> String {
    colors.sort_unstable();
    let mut parts: Vec<String> = Vec::new();
    let mut i = 0;
    while i < colors.len() {
        let j = colors[i..].iter().take_while(|c| **c == colors[i]).count();
        parts.push(format!("{}*{}", colors[i], j));
        i += j;
    }
    parts.join(";")
}

/// Per-cell class cache so row and column passes classify each cell once.
struct Classified {
    kinds: Vec<CellKind>,
    cols: usize,
}

impl Classified {
    fn new(sheet: &Sheet) -> Self {
        let kinds = sheet.iter().map(|(_, cell)| classify(&cell.value)).collect();
        Classified { kinds, cols: sheet.cols() }
    }

    fn kind(&self, r: usize, c: usize) -> CellKind {
        self.kinds[r * self.cols + c]
    }
}

fn profile_line(
    sheet: &Sheet,
    classes: &Classified,
    merges_on_sheet: &[CellRange],
    axis: Axis,
    index: usize,
) -> RowColProfile {
    let len = match axis {
        Axis::Row => sheet.cols(),
        Axis::Col => sheet.rows(),
    };
    let mut empty = 0usize;
    let mut data = 0usize;
    let mut text = 0usize;
    let mut borders = 0usize;
    let mut bold = 0usize;
    let mut colors: Vec<&str> = Vec::new();
    for i in 0..len {
        let (r, c) = match axis {
            Axis::Row => (index, i),
            Axis::Col => (i, index),
        };
        let cell = sheet.cell(r, c);
        match classes.kind(r, c) {
            CellKind::Empty => empty += 1,
            CellKind::Data => data += 1,
            CellKind::Text => text += 1,
        }
        borders += cell.style.borders.count();
        if cell.style.bold {
            bold += 1;
        }
        if let Some(color) = &cell.style.fill_color {
            colors.push(color);
        }
    }
    let merges = merges_on_sheet
        .iter()
        .filter(|m| match axis {
            Axis::Row => (m.top..=m.bottom).contains(&index),
            Axis::Col => (m.left..=m.right).contains(&index),
        })
        .count();
    let denom = len as f64;
    RowColProfile {
        axis,
        index,
        frac_empty: empty as f64 / denom,
        frac_numeric: data as f64 / denom,
        frac_text: text as f64 / denom,
        border_count: borders,
        fill_signature: fill_signature(&mut colors),
        merge_spans: merges,
        bold_count: bold,
    }
}

/// Profiles every row, then every column.
pub fn profile_lines(sheet: &Sheet) -> Vec<RowColProfile> {
    let classes = Classified::new(sheet);
    let merges: Vec<CellRange> = sheet.iter().filter_map(|(_, cell)| cell.merge).collect();
    let mut out = Vec::with_capacity(sheet.rows() + sheet.cols());
    for r in 0..sheet.rows() {
        out.push(profile_line(sheet, &classes, &merges, Axis::Row, r));
    }
    for c in 0..sheet.cols() {
        out.push(profile_line(sheet, &classes, &merges, Axis::Col, c));
    }
    out
}

/// Fractions of (empty, data, text) cells in one row — shared with header
/// prediction in the answering pipeline.
pub(crate) fn row_fractions(sheet: &Sheet, row: usize) -> (f64, f64, f64) {
    let classes = Classified::new(sheet);
    let n = sheet.cols() as f64;
    let mut counts = (0usize, 0usize, 0usize);
    for c in 0..sheet.cols() {
        match classes.kind(row, c) {
            CellKind::Empty => counts.0 += 1,
            CellKind::Data => counts.1 += 1,
            CellKind::Text => counts.2 += 1,
        }
    }
    (counts.0 as f64 / n, counts.1 as f64 / n, counts.2 as f64 / n)
}

/// Anchor line indices per axis.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct AnchorSet {
    pub rows: BTreeSet<usize>,
    pub cols: BTreeSet<usize>,
}

fn differs(a: &RowColProfile, b: &RowColProfile, theta: f64) -> bool {
    (a.frac_empty - b.frac_empty).abs() > theta
        || (a.frac_numeric - b.frac_numeric).abs() > theta
        || (a.frac_text - b.frac_text).abs() > theta
        || a.border_count != b.border_count
        || a.fill_signature != b.fill_signature
        || a.merge_spans != b.merge_spans
}

/// Marks a line as an anchor when its profile differs from either neighbor
/// beyond the thresholds. The first and last line of each axis are always
/// anchors (sheet edges are structure).
pub fn detect_anchor_lines(profiles: &[RowColProfile], theta: f64) -> AnchorSet {
    let mut set = AnchorSet::default();
    for axis in [Axis::Row, Axis::Col] {
        let lines: Vec<&RowColProfile> =
            profiles.iter().filter(|p| p.axis == axis).collect();
        let target = match axis {
            Axis::Row => &mut set.rows,
            Axis::Col => &mut set.cols,
        };
        for (i, p) in lines.iter().enumerate() {
            let edge = i == 0 || i == lines.len() - 1;
            let from_prev = i > 0 && differs(p, lines[i - 1], theta);
            let from_next = i + 1 < lines.len() && differs(p, lines[i + 1], theta);
            if edge || from_prev || from_next {
                target.insert(p.index);
            }
        }
    }
    set
}

/// A possible table boundary with the features the filter computed for it.
#[derive(Debug, Clone, PartialEq)]
pub struct CandidateBoundary {
    pub range: CellRange,
    /// Fraction of header-like cells (text, years, dates) along the top row.
    pub header_likeness: f64,
    /// Non-empty fraction over the whole rectangle.
    pub interior_density: f64,
}

/// Every rectangle spanned by a pair of anchor rows and a pair of anchor
/// columns.
pub fn propose_candidates(anchors: &AnchorSet) -> Vec<CandidateBoundary> {
    let rows: Vec<usize> = anchors.rows.iter().copied().collect();
    let cols: Vec<usize> = anchors.cols.iter().copied().collect();
    let mut out = Vec::new();
    for (i, &top) in rows.iter().enumerate() {
        for &bottom in &rows[i..] {
            for (j, &left) in cols.iter().enumerate() {
                for &right in &cols[j..] {
                    out.push(CandidateBoundary {
                        range: CellRange::new(top, left, bottom, right),
                        header_likeness: 0.0,
                        interior_density: 0.0,
                    });
                }
            }
        }
    }
    out
}

/// Prefix-sum tables over the cell classes for O(1) rectangle statistics.
struct ClassSums {
    rows: usize,
    cols: usize,
    non_empty: Vec<u32>,
    headerish: Vec<u32>,
}

impl ClassSums {
    fn new(sheet: &Sheet) -> Self {
        let (m, n) = (sheet.rows(), sheet.cols());
        let classes = Classified::new(sheet);
        let mut non_empty = vec![0u32; (m + 1) * (n + 1)];
        let mut headerish = vec![0u32; (m + 1) * (n + 1)];
        let w = n + 1;
        for r in 0..m {
            for c in 0..n {
                let kind = classes.kind(r, c);
                let ne = (kind != CellKind::Empty) as u32;
                // Header-like: text, or a year/date label (period headers).
                let hd = (kind == CellKind::Text || {
                    let t = recognize_type(&sheet.cell(r, c).value);
                    t == DataType::Year || t == DataType::Date
                }) as u32;
                non_empty[(r + 1) * w + c + 1] =
                    ne + non_empty[r * w + c + 1] + non_empty[(r + 1) * w + c] - non_empty[r * w + c];
                headerish[(r + 1) * w + c + 1] =
                    hd + headerish[r * w + c + 1] + headerish[(r + 1) * w + c] - headerish[r * w + c];
            }
        }
        ClassSums { rows: m, cols: n, non_empty, headerish }
    }

    fn rect(&self, table: &[u32], top: usize, left: usize, bottom: usize, right: usize) -> u32 {
        let w = self.cols + 1;
        table[(bottom + 1) * w + right + 1] + table[top * w + left]
            - table[top * w + right + 1]
            - table[(bottom + 1) * w + left]
    }

    fn non_empty_in(&self, r: &CellRange) -> u32 {
        self.rect(&self.non_empty, r.top, r.left, r.bottom, r.right)
    }

    fn headerish_in(&self, r: &CellRange) -> u32 {
        self.rect(&self.headerish, r.top, r.left, r.bottom, r.right)
    }
}

/// Drops candidates that cannot be tables: too small, too sparse, framed by
/// an empty edge line, or lacking a header-like top row and left column.
/// Survivors carry their computed features.
pub fn filter_candidates(
    sheet: &Sheet,
    candidates: Vec<CandidateBoundary>,
    params: &AnchorParams,
) -> Vec<CandidateBoundary> {
    let sums = ClassSums::new(sheet);
    let mut out = Vec::new();
    for mut cand in candidates {
        let r = cand.range;
        if r.bottom >= sums.rows || r.right >= sums.cols {
            continue;
        }
        if r.rows() < 2 || r.cols() < 2 {
            continue;
        }
        let density = sums.non_empty_in(&r) as f64 / r.area() as f64;
        if density < params.delta {
            continue;
        }
        let edge_empty = [
            CellRange::new(r.top, r.left, r.top, r.right),
            CellRange::new(r.bottom, r.left, r.bottom, r.right),
            CellRange::new(r.top, r.left, r.bottom, r.left),
            CellRange::new(r.top, r.right, r.bottom, r.right),
        ]
        .iter()
        .any(|edge| sums.non_empty_in(edge) == 0);
        if edge_empty {
            continue;
        }
        let top_row = CellRange::new(r.top, r.left, r.top, r.right);
        let left_col = CellRange::new(r.top, r.left, r.bottom, r.left);
        let top_score = sums.headerish_in(&top_row) as f64 / r.cols() as f64;
        let left_score = sums.headerish_in(&left_col) as f64 / r.rows() as f64;
        if top_score < params.eta && left_score < params.eta {
            continue;
        }
        cand.header_likeness = top_score;
        cand.interior_density = density;
        out.push(cand);
    }
    out
}

/// Resolves overlapping candidates: when two boundaries intersect, the one
/// with the more header-like top row survives; ties prefer the smaller area,
/// then the earlier top-left corner. Repeats until no overlaps remain.
pub fn resolve_overlaps(mut candidates: Vec<CandidateBoundary>) -> Vec<CandidateBoundary> {
    candidates.sort_by_key(|c| (c.range.top, c.range.left, c.range.bottom, c.range.right));
    loop {
        let mut clash = None;
        'search: for i in 0..candidates.len() {
            for j in i + 1..candidates.len() {
                if candidates[i].range.intersects(&candidates[j].range) {
                    clash = Some((i, j));
                    break 'search;
                }
            }
        }
        let Some((i, j)) = clash else { break };
        let (a, b) = (&candidates[i], &candidates[j]);
        let loser = if a.header_likeness != b.header_likeness {
            if a.header_likeness < b.header_likeness {
                i
            } else {
                j
            }
        } else if a.range.area() != b.range.area() {
            if a.range.area() > b.range.area() {
                i
            } else {
                j
            }
        } else {
            j
        };
        candidates.remove(loser);
    }
    candidates
}

/// Full anchor derivation: discrepancy lines, optionally replaced or
/// augmented by the edges of filtered candidate boundaries.
pub fn derive_anchors(sheet: &Sheet, params: &AnchorParams) -> AnchorSet {
    let profiles = profile_lines(sheet);
    let discrepancies = detect_anchor_lines(&profiles, params.theta);
    if params.source == AnchorSource::DiscrepancyLines {
        return discrepancies;
    }
    let candidates =
        resolve_overlaps(filter_candidates(sheet, propose_candidates(&discrepancies), params));
    let mut edges = AnchorSet::default();
    for cand in &candidates {
        edges.rows.insert(cand.range.top);
        edges.rows.insert(cand.range.bottom);
        edges.cols.insert(cand.range.left);
        edges.cols.insert(cand.range.right);
    }
    match params.source {
        AnchorSource::CandidateEdges => {
            if candidates.is_empty() {
                discrepancies
            } else {
                edges
            }
        }
        _ => AnchorSet {
            rows: edges.rows.union(&discrepancies.rows).copied().collect(),
            cols: edges.cols.union(&discrepancies.cols).copied().collect(),
        },
    }
}

/// Maps skeleton coordinates back to the original sheet: `kept_rows[i]` is
/// the original index of skeleton row `i`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CoordinateMap {
    pub kept_rows: Vec<usize>,
    pub kept_cols: Vec<usize>,
}

/// A range mapped back to original coordinates. `non_contiguous` flags that
/// the skeleton range spanned a gap, so the hull includes discarded lines.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MappedRange {
    pub range: CellRange,
    pub non_contiguous: bool,
}

fn kept_lines(total: usize, anchors: &BTreeSet<usize>, k: usize) -> Vec<usize> {
    if anchors.is_empty() {
        return (0..total).collect();
    }
    let mut keep = vec![false; total];
    for &a in anchors {
        if a >= total {
            continue;
        }
        let lo = a.saturating_sub(k);
        let hi = (a + k).min(total - 1);
        for slot in &mut keep[lo..=hi] {
            *slot = true;
        }
    }
    keep.iter().enumerate().filter_map(|(i, &k)| k.then_some(i)).collect()
}

/// Keeps the k-neighborhood of every anchor line and drops the rest,
/// producing the skeleton sheet plus the map back to original coordinates.
/// Merged-range metadata is consumed by profiling and is not carried over.
pub fn extract_skeleton(sheet: &Sheet, anchors: &AnchorSet, k: usize) -> (Sheet, CoordinateMap) {
    let kept_rows = kept_lines(sheet.rows(), &anchors.rows, k);
    let kept_cols = kept_lines(sheet.cols(), &anchors.cols, k);
    let mut cells = Vec::with_capacity(kept_rows.len() * kept_cols.len());
    for &r in &kept_rows {
        for &c in &kept_cols {
            let mut cell = sheet.cell(r, c).clone();
            cell.merge = None;
            cells.push(cell);
        }
    }
    let skeleton = Sheet::from_parts(
        sheet.name().to_string(),
        kept_rows.len(),
        kept_cols.len(),
        cells,
    );
    (skeleton, CoordinateMap { kept_rows, kept_cols })
}

fn span_has_gap(kept: &[usize], from: usize, to: usize) -> bool {
    kept[from..to].iter().zip(&kept[from + 1..=to]).any(|(a, b)| b - a > 1)
}

/// Maps a skeleton-space range to original coordinates (the hull over the
/// kept lines it covers), flagging spans that cross discarded lines.
pub fn map_range_to_original(
    range: &CellRange,
    map: &CoordinateMap,
) -> Result<MappedRange, AnchorError> {
    let (rows, cols) = (map.kept_rows.len(), map.kept_cols.len());
    if range.bottom >= rows || range.right >= cols {
        return Err(AnchorError::RangeOutsideMap { range: render_range(range), rows, cols });
    }
    let mapped = CellRange::new(
        map.kept_rows[range.top],
        map.kept_cols[range.left],
        map.kept_rows[range.bottom],
        map.kept_cols[range.right],
    );
    let non_contiguous = span_has_gap(&map.kept_rows, range.top, range.bottom)
        || span_has_gap(&map.kept_cols, range.left, range.right);
    Ok(MappedRange { range: mapped, non_contiguous })
}

/// Forward direction: original-space range to skeleton space. `None` when a
/// corner line was discarded.
pub fn map_range_from_original(range: &CellRange, map: &CoordinateMap) -> Option<CellRange> {
    let top = map.kept_rows.binary_search(&range.top).ok()?;
    let bottom = map.kept_rows.binary_search(&range.bottom).ok()?;
    let left = map.kept_cols.binary_search(&range.left).ok()?;
    let right = map.kept_cols.binary_search(&range.right).ok()?;
    Some(CellRange::new(top, left, bottom, right))
}
