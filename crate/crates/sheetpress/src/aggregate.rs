//! Rule-based cell typing and format-aware aggregation: contiguous cells
//! sharing a number format (or a recognized value type) collapse into typed
//! rectangular areas so the encoding keeps one keyword instead of every
//! distinct number.

use std::collections::HashSet;
use std::sync::OnceLock;

use regex::Regex;

use crate::grid::{Cell, CellAddress, CellRange, Sheet};
use crate::index::{render_tuple, ValueIndex};

/// Cell value categories, ordered by recognition precedence.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum DataType {
    Email,
    Percentage,
    Currency,
    ScientificNum,
    Date,
    Time,
    Year,
    Float,
    Integer,
    Others,
}

impl DataType {
    /// Stable identifier used as the aggregation key for cells without an
    /// explicit number-format string.
    pub fn tag(&self) -> &'static str {
        match self {
            DataType::Email => "Email",
            DataType::Percentage => "Percentage",
            DataType::Currency => "Currency",
            DataType::ScientificNum => "ScientificNum",
            DataType::Date => "Date",
            DataType::Time => "Time",
            DataType::Year => "Year",
            DataType::Float => "Float",
            DataType::Integer => "Integer",
            DataType::Others => "Others",
        }
    }

    /// Keyword substituted for member values when a typed area is rendered.
    pub fn display_key(&self) -> &'static str {
        match self {
            DataType::Email => "EmailData",
            DataType::Percentage => "PercentageNum",
            DataType::Currency => "CurrencyData",
            DataType::ScientificNum => "ScientificNum",
            DataType::Date => "DateData",
            DataType::Time => "TimeData",
            DataType::Year => "YearData",
            DataType::Float => "FloatNum",
            DataType::Integer => "IntNum",
            DataType::Others => "Others",
        }
    }

    fn from_display_key(key: &str) -> Option<DataType> {
        match key {
            "EmailData" => Some(DataType::Email),
            "PercentageNum" => Some(DataType::Percentage),
            "CurrencyData" => Some(DataType::Currency),
            "ScientificNum" => Some(DataType::ScientificNum),
            "DateData" => Some(DataType::Date),
            "TimeData" => Some(DataType::Time),
            "YearData" => Some(DataType::Year),
            "FloatNum" => Some(DataType::Float),
            "IntNum" => Some(DataType::Integer),
            _ => None,
        }
    }
}

/// Configurable pieces of the value grammar.
#[derive(Debug, Clone)]
pub struct TypeRules {
    pub currency_symbols: Vec<char>,
    pub extra_date_patterns: Vec<Regex>,
}

impl Default for TypeRules {
    fn default() -> Self {
        TypeRules { currency_symbols: vec!['$', '€', '£', '¥'], extra_date_patterns: Vec::new() }
    }
}

struct Grammar {
    email: Regex,
    percentage: Regex,
    scientific: Regex,
    date_iso: Regex,
    date_mon: Regex,
    time: Regex,
    float: Regex,
    integer: Regex,
    number: Regex,
}

fn grammar() -> &'static Grammar {
    static GRAMMAR: OnceLock<Grammar> = OnceLock::new();
    GRAMMAR.get_or_init(|| Grammar {
        email: Regex::new(r"^[A-Za-z0-9._%+-]+@[A-Za-z0-9-]+(\.[A-Za-z0-9-]+)*\.[A-Za-z]{2,}$")
            .unwrap(),
        percentage: Regex::new(r"^[+-]?(\d{1,3}(,\d{3})+|\d+)(\.\d+)?%$").unwrap(),
        scientific: Regex::new(r"^[+-]?\d+(\.\d+)?[eE][+-]?\d+$").unwrap(),
        date_iso: Regex::new(r"^(\d{4})([-/.])(\d{1,2})([-/.])(\d{1,2})$").unwrap(),
        date_mon: Regex::new(
            r"(?i)^\d{1,2}-(jan|feb|mar|apr|may|jun|jul|aug|sep|oct|nov|dec)-\d{2}(\d{2})?$",
        )
        .unwrap(),
        time: Regex::new(r"^(\d{1,2}):[0-5]\d(:[0-5]\d)?$").unwrap(),
        float: Regex::new(r"^[+-]?(\d{1,3}(,\d{3})+|\d+)\.\d+$").unwrap(),
        integer: Regex::new(r"^[+-]?(\d{1,3}(,\d{3})+|\d+)$").unwrap(),
        number: Regex::new(r"^[+-]?(\d{1,3}(,\d{3})+|\d+)(\.\d+)?$").unwrap(),
    })
}

fn is_valid_date(text: &str) -> bool {
    let g = grammar();
    if let Some(caps) = g.date_iso.captures(text) {
        // Require matching separators and a plausible month/day.
        if caps.get(2).map(|m| m.as_str()) != caps.get(4).map(|m| m.as_str()) {
            return false;
        }
        let month: u32 = caps[3].parse().unwrap_or(0);
        let day: u32 = caps[5].parse().unwrap_or(0);
        return (1..=12).contains(&month) && (1..=31).contains(&day);
    }
    g.date_mon.is_match(text)
}

fn is_valid_time(text: &str) -> bool {
    grammar()
        .time
        .captures(text)
        .is_some_and(|caps| caps[1].parse::<u32>().is_ok_and(|hour| hour <= 23))
}

/// Classifies a trimmed cell value, trying each grammar in precedence order.
/// The canonical display keys classify as their own type, so re-recognizing
/// an already-aggregated keyword is a fixed point.
pub fn recognize_type_with(value: &str, rules: &TypeRules) -> DataType {
    let v = value.trim();
    if v.is_empty() {
        return DataType::Others;
    }
    if let Some(dt) = DataType::from_display_key(v) {
        return dt;
    }
    let g = grammar();
    if g.email.is_match(v) {
        return DataType::Email;
    }
    if g.percentage.is_match(v) {
        return DataType::Percentage;
    }
    if !rules.currency_symbols.is_empty() {
        let stripped = v
            .strip_prefix(|c: char| rules.currency_symbols.contains(&c))
            .or_else(|| v.strip_suffix(|c: char| rules.currency_symbols.contains(&c)))
            .map(str::trim);
        if let Some(rest) = stripped {
            if g.number.is_match(rest) {
                return DataType::Currency;
            }
        }
    }
    if g.scientific.is_match(v) {
        return DataType::ScientificNum;
    }
    if is_valid_date(v) || rules.extra_date_patterns.iter().any(|p| p.is_match(v)) {
        return DataType::Date;
    }
    if is_valid_time(v) {
        return DataType::Time;
    }
    if g.integer.is_match(v) && !v.contains(',') {
        if let Ok(year) = v.parse::<i64>() {
            if v.len() == 4 && (1000..=2999).contains(&year) {
                return DataType::Year;
            }
        }
    }
    if g.float.is_match(v) {
        return DataType::Float;
    }
    if g.integer.is_match(v) {
        return DataType::Integer;
    }
    DataType::Others
}

/// [`recognize_type_with`] under the default rules.
pub fn recognize_type(value: &str) -> DataType {
    recognize_type_with(value, &TypeRules::default())
}

/// The aggregation key of a cell: its number-format string when present,
/// otherwise the recognized type tag.
pub fn resolve_format_key(cell: &Cell) -> String {
    resolve_format_key_with(cell, &TypeRules::default())
}

pub fn resolve_format_key_with(cell: &Cell, rules: &TypeRules) -> String {
    match &cell.nfs {
        Some(nfs) => nfs.clone(),
        None => recognize_type_with(&cell.value, rules).tag().to_string(),
    }
}

/// What a typed area is keyed on.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum AreaKey {
    Type(DataType),
    Nfs(String),
}

impl AreaKey {
    pub fn is_others(&self) -> bool {
        matches!(self, AreaKey::Type(DataType::Others))
    }

    /// Keyword rendered in place of the member values.
    pub fn display(&self) -> &str {
        match self {
            AreaKey::Type(dt) => dt.display_key(),
            AreaKey::Nfs(nfs) => nfs,
        }
    }
}

/// A maximal 4-connected region of identically keyed cells, with its
/// bounding box and exact membership.
#[derive(Debug, Clone, PartialEq)]
pub struct TypedArea {
    pub range: CellRange,
    pub key: AreaKey,
    /// Member cells in row-major order.
    pub members: Vec<CellAddress>,
}

impl TypedArea {
    /// True when the members tile the bounding box exactly.
    pub fn fills_bounding_box(&self) -> bool {
        self.members.len() == self.range.area()
    }
}

/// Groups cells into typed areas: iterative depth-first traversal over the
/// 4-neighborhood graph of cells sharing a format key, seeded row-major.
/// Every cell (empty ones included) belongs to exactly one area.
pub fn aggregate_identical(sheet: &Sheet) -> Vec<TypedArea> {
    aggregate_identical_with(sheet, &TypeRules::default())
}

pub fn aggregate_identical_with(sheet: &Sheet, rules: &TypeRules) -> Vec<TypedArea> {
    let (m, n) = (sheet.rows(), sheet.cols());
    let keys: Vec<String> =
        sheet.iter().map(|(_, cell)| resolve_format_key_with(cell, rules)).collect();
    let mut visited = vec![false; m * n];
    let mut areas = Vec::new();

    for seed in 0..m * n {
        if visited[seed] {
            continue;
        }
        let key = &keys[seed];
        let mut stack = vec![seed];
        visited[seed] = true;
        let mut members = Vec::new();
        let (mut top, mut left, mut bottom, mut right) =
            (seed / n, seed % n, seed / n, seed % n);
        while let Some(idx) = stack.pop() {
            let (r, c) = (idx / n, idx % n);
            members.push(idx);
            top = top.min(r);
            left = left.min(c);
            bottom = bottom.max(r);
            right = right.max(c);
            let mut push = |ni: usize| {
                if !visited[ni] && keys[ni] == *key {
                    visited[ni] = true;
                    stack.push(ni);
                }
            };
            if r > 0 {
                push(idx - n);
            }
            if r + 1 < m {
                push(idx + n);
            }
            if c > 0 {
                push(idx - 1);
            }
            if c + 1 < n {
                push(idx + 1);
            }
        }
        members.sort_unstable();
        let sample = seed; // row-major first member == seed by construction
        let cell = sheet.cell(sample / n, sample % n);
        let key = match &cell.nfs {
            Some(nfs) => AreaKey::Nfs(nfs.clone()),
            None => AreaKey::Type(recognize_type_with(&cell.value, rules)),
        };
        areas.push(TypedArea {
            range: CellRange::new(top, left, bottom, right),
            key,
            members: members
                .into_iter()
                .map(|i| CellAddress::new(i / n, i % n))
                .collect(),
        });
    }
    areas
}

/// Greedy rectangle cover of an arbitrary cell set (same growth rule as the
/// value index, restricted to the membership set).
pub(crate) fn greedy_cover(cells: &[CellAddress]) -> Vec<CellRange> {
    let set: HashSet<(usize, usize)> = cells.iter().map(|a| (a.row, a.col)).collect();
    let mut covered: HashSet<(usize, usize)> = HashSet::new();
    let mut sorted: Vec<&CellAddress> = cells.iter().collect();
    sorted.sort_unstable();
    let mut out = Vec::new();
    for addr in sorted {
        let (r, c) = (addr.row, addr.col);
        if covered.contains(&(r, c)) {
            continue;
        }
        let mut right = c;
        while set.contains(&(r, right + 1)) && !covered.contains(&(r, right + 1)) {
            right += 1;
        }
        let mut bottom = r;
        'grow: loop {
            let nr = bottom + 1;
            for cc in c..=right {
                if !set.contains(&(nr, cc)) || covered.contains(&(nr, cc)) {
                    break 'grow;
                }
            }
            bottom = nr;
        }
        for rr in r..=bottom {
            for cc in c..=right {
                covered.insert((rr, cc));
            }
        }
        out.push(CellRange::new(r, c, bottom, right));
    }
    out
}

/// Renders an index with typed areas folded in: member cells of non-Others
/// areas disappear from their value entries and each area becomes a single
/// `(keyword|ranges)` tuple. Tuples are ordered by first member, row-major.
pub fn render_aggregated(areas: &[TypedArea], index: &ValueIndex) -> String {
    let mut replaced: HashSet<(usize, usize)> = HashSet::new();
    for area in areas {
        if !area.key.is_others() {
            for addr in &area.members {
                replaced.insert((addr.row, addr.col));
            }
        }
    }

    struct OutTuple {
        order: (usize, usize),
        text: String,
    }
    let mut tuples: Vec<OutTuple> = Vec::new();

    for (value, ranges) in index.entries() {
        let mut remaining: Vec<CellAddress> = Vec::new();
        for range in ranges {
            for addr in range.cells() {
                if !replaced.contains(&(addr.row, addr.col)) {
                    remaining.push(addr);
                }
            }
        }
        if remaining.is_empty() {
            continue;
        }
        remaining.sort_unstable();
        let order = (remaining[0].row, remaining[0].col);
        let cover = greedy_cover(&remaining);
        tuples.push(OutTuple { order, text: render_tuple(value, &cover) });
    }

    for area in areas {
        if area.key.is_others() || area.members.is_empty() {
            continue;
        }
        let first = area.members[0];
        let cover = if area.fills_bounding_box() {
            vec![area.range]
        } else {
            greedy_cover(&area.members)
        };
        tuples.push(OutTuple {
            order: (first.row, first.col),
            text: render_tuple(area.key.display(), &cover),
        });
    }

    tuples.sort_by_key(|t| t.order);
    tuples.into_iter().map(|t| t.text).collect::<Vec<_>>().join(",")
}
