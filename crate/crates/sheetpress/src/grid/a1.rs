//! A1-notation addresses and rectangular ranges.

use std::fmt;
use std::str::FromStr;

use serde::de::Error as _;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use super::GridError;

/// Hard ceiling on sheet height, matching the common spreadsheet limit.
pub const MAX_ROWS: usize = 1_048_576;
/// Hard ceiling on sheet width (column `XFD`).
pub const MAX_COLS: usize = 16_384;

/// Zero-based cell coordinate: `A1` is `(row: 0, col: 0)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct CellAddress {
    pub row: usize,
    pub col: usize,
}

impl CellAddress {
    pub fn new(row: usize, col: usize) -> Self {
        CellAddress { row, col }
    }
}

/// Parses an A1-style address ("AB5") into zero-based coordinates.
///
/// Column letters are bijective base-26 (`A`=0, `Z`=25, `AA`=26); the row
/// digits are one-based. Rejects anything outside the `MAX_ROWS`/`MAX_COLS`
/// domain so rendering always round-trips.
pub fn parse_a1(text: &str) -> Result<CellAddress, GridError> {
    let s = text.trim();
    let bad = || GridError::BadAddress(text.to_string());
    let split = s.find(|c: char| c.is_ascii_digit()).ok_or_else(bad)?;
    let (letters, digits) = s.split_at(split);
    if letters.is_empty() || digits.is_empty() {
        return Err(bad());
    }
    let mut col: usize = 0;
    for c in letters.chars() {
        if !c.is_ascii_alphabetic() {
            return Err(bad());
        }
        let d = (c.to_ascii_uppercase() as u8 - b'A') as usize;
        col = col
            .checked_mul(26)
            .and_then(|v| v.checked_add(d + 1))
            .ok_or_else(bad)?;
        if col > MAX_COLS {
            return Err(bad());
        }
    }
    if !digits.chars().all(|c| c.is_ascii_digit()) {
        return Err(bad());
    }
    let row: usize = digits.parse().map_err(|_| bad())?;
    if row == 0 || row > MAX_ROWS {
        return Err(bad());
    }
    Ok(CellAddress::new(row - 1, col - 1))
}

/// Renders zero-based coordinates as an A1-style address.
pub fn render_a1(addr: CellAddress) -> String {
    let mut letters = Vec::new();
    let mut c = addr.col;
    loop {
        letters.push(b'A' + (c % 26) as u8);
        if c < 26 {
            break;
        }
        c = c / 26 - 1;
    }
    letters.reverse();
    let mut out = String::from_utf8(letters).expect("column letters are ASCII");
    out.push_str(&(addr.row + 1).to_string());
    out
}

impl fmt::Display for CellAddress {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&render_a1(*self))
    }
}

impl FromStr for CellAddress {
    type Err = GridError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        parse_a1(s)
    }
}

/// Inclusive rectangle of cells, zero-based.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct CellRange {
    pub top: usize,
    pub left: usize,
    pub bottom: usize,
    pub right: usize,
}

impl CellRange {
    /// Builds a range, normalizing corner order so `top <= bottom` and
    /// `left <= right` always hold.
    pub fn new(top: usize, left: usize, bottom: usize, right: usize) -> Self {
        CellRange {
            top: top.min(bottom),
            left: left.min(right),
            bottom: top.max(bottom),
            right: left.max(right),
        }
    }

    pub fn single(addr: CellAddress) -> Self {
        CellRange::new(addr.row, addr.col, addr.row, addr.col)
    }

    pub fn rows(&self) -> usize {
        self.bottom - self.top + 1
    }

    pub fn cols(&self) -> usize {
        self.right - self.left + 1
    }

    pub fn area(&self) -> usize {
        self.rows() * self.cols()
    }

    pub fn is_single_cell(&self) -> bool {
        self.area() == 1
    }

    pub fn top_left(&self) -> CellAddress {
        CellAddress::new(self.top, self.left)
    }

    pub fn contains(&self, addr: CellAddress) -> bool {
        (self.top..=self.bottom).contains(&addr.row) && (self.left..=self.right).contains(&addr.col)
    }

    pub fn intersects(&self, other: &CellRange) -> bool {
        !(self.bottom < other.top
            || other.bottom < self.top
            || self.right < other.left
            || other.right < self.left)
    }

    /// Iterates the member cells in row-major order.
    pub fn cells(&self) -> impl Iterator<Item = CellAddress> + '_ {
        let (l, r) = (self.left, self.right);
        (self.top..=self.bottom)
            .flat_map(move |row| (l..=r).map(move |col| CellAddress::new(row, col)))
    }
}

/// Parses `"A1:D5"` or a bare `"A1"` (treated as a one-cell range).
pub fn parse_range(text: &str) -> Result<CellRange, GridError> {
    let s = text.trim();
    match s.split_once(':') {
        Some((a, b)) => {
            let start = parse_a1(a).map_err(|_| GridError::BadRange(text.to_string()))?;
            let end = parse_a1(b).map_err(|_| GridError::BadRange(text.to_string()))?;
            Ok(CellRange::new(start.row, start.col, end.row, end.col))
        }
        None => {
            let addr = parse_a1(s).map_err(|_| GridError::BadRange(text.to_string()))?;
            Ok(CellRange::single(addr))
        }
    }
}

/// Renders a range as `"A1:D5"`, collapsing one-cell ranges to `"A1"`.
pub fn render_range(range: &CellRange) -> String {
    let start = render_a1(CellAddress::new(range.top, range.left));
    if range.is_single_cell() {
        return start;
    }
    let end = render_a1(CellAddress::new(range.bottom, range.right));
    format!("{start}:{end}")
}

impl fmt::Display for CellRange {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&render_range(self))
    }
}

impl FromStr for CellRange {
    type Err = GridError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        parse_range(s)
    }
}

impl Serialize for CellRange {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.serialize_str(&render_range(self))
    }
}

impl<'de> Deserialize<'de> for CellRange {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let text = String::deserialize(deserializer)?;
        parse_range(&text).map_err(D::Error::custom)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Independent oracle: advance an A1 "odometer" cell by cell and check
    /// that parse/render agree with it over the first few thousand columns.
    fn column_letters_oracle(limit: usize) -> Vec<String> {
        let mut out = Vec::with_capacity(limit);
        let mut digits: Vec<u8> = vec![0]; // 0 = 'A'
        for _ in 0..limit {
            out.push(digits.iter().map(|d| (b'A' + d) as char).collect());
            // Increment bijective base-26 odometer.
            let mut i = digits.len();
            loop {
                if i == 0 {
                    digits.insert(0, 0);
                    break;
                }
                i -= 1;
                if digits[i] == 25 {
                    digits[i] = 0;
                } else {
                    digits[i] += 1;
                    break;
                }
            }
        }
        out
    }

    #[test]
    fn render_matches_odometer_oracle() {
        let oracle = column_letters_oracle(3000);
        for (col, letters) in oracle.iter().enumerate() {
            let rendered = render_a1(CellAddress::new(0, col));
            assert_eq!(&rendered, &format!("{letters}1"), "col {col}");
        }
    }

    #[test]
    fn parse_round_trips_oracle() {
        let oracle = column_letters_oracle(3000);
        for (col, letters) in oracle.iter().enumerate() {
            let addr = parse_a1(&format!("{letters}10")).unwrap();
            assert_eq!(addr, CellAddress::new(9, col));
        }
    }

    #[test]
    fn known_addresses() {
        assert_eq!(parse_a1("A1").unwrap(), CellAddress::new(0, 0));
        assert_eq!(parse_a1("Z3").unwrap(), CellAddress::new(2, 25));
        assert_eq!(parse_a1("AA1").unwrap(), CellAddress::new(0, 26));
        assert_eq!(parse_a1("AB5").unwrap(), CellAddress::new(4, 27));
        assert_eq!(render_a1(CellAddress::new(9, 26)), "AA10");
        assert_eq!(render_a1(CellAddress::new(0, 16_383)), "XFD1");
        assert_eq!(parse_a1("XFD1048576").unwrap(), CellAddress::new(1_048_575, 16_383));
    }

    #[test]
    fn lowercase_and_whitespace_tolerated() {
        assert_eq!(parse_a1(" ab5 ").unwrap(), CellAddress::new(4, 27));
    }

    #[test]
    fn malformed_addresses_error() {
        for bad in ["", "A", "5", "A0", "1A", "A1B", "A-1", "XFE1", "A1048577", "Ω1"] {
            assert!(parse_a1(bad).is_err(), "{bad:?} should not parse");
        }
    }

    #[test]
    fn range_round_trip() {
        let r = parse_range("B2:D5").unwrap();
        assert_eq!(r, CellRange::new(1, 1, 4, 3));
        assert_eq!(render_range(&r), "B2:D5");
        let single = parse_range("C7").unwrap();
        assert!(single.is_single_cell());
        assert_eq!(render_range(&single), "C7");
        // Reversed corners normalize.
        assert_eq!(parse_range("D5:B2").unwrap(), r);
    }

    #[test]
    fn range_geometry() {
        let r = CellRange::new(1, 1, 2, 3);
        assert_eq!(r.area(), 6);
        assert_eq!(r.cells().count(), 6);
        assert!(r.contains(CellAddress::new(2, 2)));
        assert!(!r.contains(CellAddress::new(3, 1)));
        assert!(r.intersects(&CellRange::new(2, 3, 5, 5)));
        assert!(!r.intersects(&CellRange::new(3, 1, 4, 3)));
    }

    #[test]
    fn exhaustive_round_trip_small_domain() {
        for row in 0..40 {
            for col in 0..900 {
                let addr = CellAddress::new(row, col);
                assert_eq!(parse_a1(&render_a1(addr)).unwrap(), addr);
            }
        }
    }
}
