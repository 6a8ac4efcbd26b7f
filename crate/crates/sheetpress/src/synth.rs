//! Deterministic synthetic sheets: a large two-table ledger for compression
//! studies, a small two-table sheet for pipeline tests, boundary-marked
//! random sheets for anchor-coverage checks, and fully random value grids
//! for round-trip properties.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::grid::{Borders, CellRange, Sheet, SheetBuilder};

const REGIONS: [&str; 4] = ["Northfield", "Riverton", "Lakewood", "Harborview"];
const STATUS: [&str; 3] = ["Approved", "Pending", "Closed"];
const RATES: [&str; 5] = ["$12.50", "$14.25", "$13.10", "$15.80", "$11.90"];
const HOURS: [&str; 6] = ["6.5", "7.5", "8.0", "9.25", "7.0", "8.75"];

const HEADS: [&str; 18] = [
    "Route", "Region", "Vehicle", "Service Date", "Departure", "Load", "Rate", "Cost", "Fuel",
    "Distance", "Hours", "Stops", "Revenue", "Margin", "Crew", "Status", "Note", "Audit",
];

/// Section-break rows of the big ledger (subtotal lines inside the data).
fn ledger_sections() -> Vec<usize> {
    (0..9).map(|j| 59 + 55 * j).collect()
}

fn iso_date(step: usize) -> String {
    let day_of_year = (step * 11) % 360;
    format!("2019-{:02}-{:02}", day_of_year / 30 + 1, day_of_year % 30 + 1)
}

/// A 576×23 ledger: a banner row with merged group headers over a column
/// header, long runs of typed data broken by bold subtotal lines, a small
/// contact table on the right, and a footnote far below — the shape where
/// skeleton extraction removes most rows and typed columns aggregate well.
pub fn figure_like_sheet() -> Sheet {
    let mut b = SheetBuilder::new("ledger");
    b.set_value(0, 0, "Fleet Operations Ledger 2019");
    b.set_value(0, 22, "v4");

    // Hierarchical header: merged group banner over the column labels.
    b.set_value(2, 0, "Operations");
    b.set_value(2, 6, "Financials");
    b.set_value(2, 14, "Review");
    for c in [0, 6, 14] {
        b.set_bold(2, c, true);
    }
    b.set_merge(CellRange::new(2, 0, 2, 5));
    b.set_merge(CellRange::new(2, 6, 2, 13));
    b.set_merge(CellRange::new(2, 14, 2, 17));
    for (c, head) in HEADS.iter().enumerate() {
        b.set_value(3, c, head);
        b.set_bold(3, c, true);
    }

    // Side table: contacts with an email column.
    for (c, head) in ["Contact", "Email", "Desk"].iter().enumerate() {
        b.set_value(3, 19 + c, head);
        b.set_bold(3, 19 + c, true);
    }
    for i in 0..27 {
        let r = 4 + i;
        b.set_value(r, 19, &format!("Desk lead {}", i + 1));
        b.set_value(r, 20, &format!("ops{}@fleet.example", i + 1));
        b.set_value(r, 21, &format!("{}", 400 + i));
    }

    // Main ledger body: typed columns in short runs, bold bordered subtotal
    // rows every 55 lines.
    let sections = ledger_sections();
    let mut block = 0usize;
    for r in 4..540 {
        if sections.contains(&r) {
            block += 1;
            b.set_value(r, 0, &format!("Block {block} close"));
            b.set_bold(r, 0, true);
            for c in 0..18 {
                b.set_borders(r, c, Borders { top: true, ..Borders::none() });
            }
            b.set_value(r, 7, &format!("{}.40", 61_000 + 137 * block));
            b.set_value(r, 8, &format!("{}.10", 9_000 + 59 * block));
            b.set_value(r, 12, &format!("{}.75", 88_000 + 211 * block));
            continue;
        }
        let run = r / 3;
        b.set_value(r, 0, &format!("{}", 100 + run % 12));
        b.set_value(r, 1, REGIONS[(r / 9) % 4]);
        b.set_value(r, 2, &format!("{}", 5_000 + (run * 7) % 260));
        b.set_value(r, 3, &iso_date(run));
        b.set_value(r, 4, &format!("{:02}:{:02}", 5 + run % 14, (run * 17) % 60));
        b.set_value(r, 5, &format!("{}%", 55 + (run * 13) % 45));
        b.set_value(r, 6, RATES[(r / 14) % 5]);
        b.set_value(r, 7, &format!("{}.{:02}", 900 + (run * 37) % 4_000, run % 100));
        b.set_value(r, 8, &format!("{}.{:02}", 120 + (run * 11) % 700, (run * 3) % 100));
        b.set_value(r, 9, &format!("{}", 40 + (run * 19) % 560));
        b.set_value(r, 10, HOURS[(r / 5) % 6]);
        b.set_value(r, 11, &format!("{}", 3 + run % 6));
        b.set_value(r, 12, &format!("{}.{:02}", 2_000 + (run * 53) % 9_000, (run * 7) % 100));
        b.set_value(r, 13, &format!("{}%", 8 + (run * 5) % 20));
        b.set_value(r, 14, &format!("{}", 2 + run % 4));
        b.set_value(r, 15, STATUS[(r / 16) % 3]);
        b.set_value(r, 16, &format!("chk {}", 4_000 + (r * 271) % 9_000));
        b.set_value(r, 17, &format!("{}", 2016 + block % 4));
    }

    // Grand total line, then empty space down to a footnote.
    b.set_value(540, 0, "Total");
    b.set_bold(540, 0, true);
    for c in 0..18 {
        b.set_borders(540, c, Borders { top: true, ..Borders::none() });
    }
    b.set_value(540, 7, "612417.88");
    b.set_value(540, 8, "96233.19");
    b.set_value(540, 12, "903174.02");
    b.set_value(575, 1, "Figures unaudited; internal draft.");

    b.build().expect("ledger fixture is well-formed")
}

/// A small sheet with two bordered tables separated by blank lines; returns
/// the sheet and the two ground-truth table ranges.
pub fn two_table_sheet() -> (Sheet, Vec<CellRange>) {
    let mut b = SheetBuilder::new("orders");
    let first = CellRange::new(1, 1, 8, 5);
    let second = CellRange::new(12, 1, 19, 7);

    let heads1 = ["Year", "Quarter", "Units", "Price", "Gross"];
    for (i, head) in heads1.iter().enumerate() {
        b.set_value(1, 1 + i, head);
        b.set_bold(1, 1 + i, true);
        b.set_fill(1, 1 + i, "D9E1F2");
    }
    for i in 0..7 {
        let r = 2 + i;
        b.set_value(r, 1, &format!("{}", 1998 + i));
        b.set_value(r, 2, ["Q1", "Q2", "Q3", "Q4"][i % 4]);
        b.set_value(r, 3, &format!("{}", 120 + 17 * i));
        b.set_value(r, 4, &format!("${}.{:02}", 9 + i, (i * 13) % 100));
        b.set_value(r, 5, &format!("{}.{:02}", 1_080 + 153 * i, (i * 29) % 100));
    }
    outline(&mut b, &first);

    let heads2 = ["Region", "Month", "Sales", "Cost", "Net", "Target", "Met"];
    for (i, head) in heads2.iter().enumerate() {
        b.set_value(12, 1 + i, head);
        b.set_bold(12, 1 + i, true);
        b.set_fill(12, 1 + i, "D9E1F2");
    }
    for i in 0..7 {
        let r = 13 + i;
        b.set_value(r, 1, REGIONS[i % 4]);
        b.set_value(r, 2, &format!("2020-{:02}-01", i + 1));
        b.set_value(r, 3, &format!("{}", 800 + 67 * i));
        b.set_value(r, 4, &format!("{}", 500 + 41 * i));
        b.set_value(r, 5, &format!("{}", 300 + 26 * i));
        b.set_value(r, 6, &format!("{}%", 70 + i));
        b.set_value(r, 7, if i % 2 == 0 { "yes" } else { "no" });
    }
    outline(&mut b, &second);

    let sheet = b.build().expect("two-table fixture is well-formed");
    (sheet, vec![first, second])
}

/// Draws box borders along a range's boundary cells.
fn outline(b: &mut SheetBuilder, range: &CellRange) {
    for r in range.top..=range.bottom {
        for c in range.left..=range.right {
            let borders = Borders {
                top: r == range.top,
                bottom: r == range.bottom,
                left: c == range.left,
                right: c == range.right,
            };
            if !borders.is_empty() {
                b.set_borders(r, c, borders);
            }
        }
    }
}

const TABLE_COLUMN_KINDS: usize = 5;

fn table_cell_value(rng: &mut ChaCha8Rng, kind: usize) -> String {
    match kind {
        0 => format!("itm {}", rng.gen_range(100..1_000)),
        1 => format!("{}", rng.gen_range(10..100_000)),
        2 => format!("{}.{:02}", rng.gen_range(1..5_000), rng.gen_range(0..100)),
        3 => format!("{}", rng.gen_range(1990..2030)),
        _ => format!("2021-{:02}-{:02}", rng.gen_range(1..13), rng.gen_range(1..29)),
    }
}

/// A random sheet whose table boundaries are marked the way real sheets
/// mark them — box borders, a filled bold header, and typed columns against
/// a homogeneous background (empty on even seeds, a constant value on odd).
/// Returns the sheet and the ground-truth table ranges.
pub fn boundary_marked_sheet(seed: u64) -> (Sheet, Vec<CellRange>) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let table_count = rng.gen_range(1..=2usize);
    // Scale the canvas with the table count so the kept neighborhoods stay a
    // small fraction of the sheet.
    let rows = rng.gen_range(75..=100) + 60 * (table_count - 1);
    let cols = rng.gen_range(20..=30);
    let numeric_filler = seed % 2 == 1;

    let mut b = SheetBuilder::new("marked");
    if numeric_filler {
        for r in 0..rows {
            for c in 0..cols {
                b.set_value(r, c, "0");
            }
        }
    }

    let mut tables = Vec::new();
    let mut cursor = rng.gen_range(4..=8);
    for _ in 0..table_count {
        let height = rng.gen_range(5..=8);
        let width = rng.gen_range(4..=6);
        if cursor + height + 4 > rows {
            break;
        }
        let left = rng.gen_range(3..=(cols - width - 3));
        let range =
            CellRange::new(cursor, left, cursor + height - 1, left + width - 1);

        for (i, c) in (range.left..=range.right).enumerate() {
            b.set_value(range.top, c, ["Item", "Count", "Amount", "Year", "Date", "Ref"][i]);
            b.set_bold(range.top, c, true);
            b.set_fill(range.top, c, "FFE699");
        }
        for r in range.top + 1..=range.bottom {
            for (i, c) in (range.left..=range.right).enumerate() {
                let value = table_cell_value(&mut rng, i % TABLE_COLUMN_KINDS);
                b.set_value(r, c, &value);
            }
        }
        outline(&mut b, &range);

        tables.push(range);
        cursor = range.bottom + rng.gen_range(4..=9);
    }

    if !numeric_filler {
        // Pin the intended geometry so edge gaps survive the bounds trim.
        b.set_value(rows - 1, cols - 1, "end");
    }
    (b.build().expect("marked fixture is well-formed"), tables)
}

/// A fully random value grid: duplicated values drawn from a small pool at
/// `dup_rate`, cells left empty at `empty_rate`, dimensions up to the caps.
pub fn random_sheet(
    seed: u64,
    max_rows: usize,
    max_cols: usize,
    dup_rate: f64,
    empty_rate: f64,
) -> Sheet {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let rows = rng.gen_range(1..=max_rows.max(1));
    let cols = rng.gen_range(1..=max_cols.max(1));
    let mut b = SheetBuilder::new("random");
    for r in 0..rows {
        for c in 0..cols {
            if rng.gen_bool(empty_rate.clamp(0.0, 1.0)) {
                continue;
            }
            let value = if rng.gen_bool(dup_rate.clamp(0.0, 1.0)) {
                format!("val{}", rng.gen_range(0..8))
            } else {
                format!("u{}", rng.gen::<u32>())
            };
            b.set_value(r, c, &value);
        }
    }
    b.build().expect("random sheets are well-formed")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::anchors::{derive_anchors, extract_skeleton, AnchorParams};
    use crate::compress::{encode_with_modules, CompressOptions, ModuleSet};
    use crate::encode::HeuristicTokenizer;

    #[test]
    fn ledger_dimensions_and_landmarks() {
        let sheet = figure_like_sheet();
        assert_eq!((sheet.rows(), sheet.cols()), (576, 23));
        assert_eq!(sheet.cell(0, 0).value, "Fleet Operations Ledger 2019");
        assert_eq!(sheet.cell(3, 0).value, "Route");
        assert_eq!(sheet.cell(4, 20).value, "ops1@fleet.example");
        assert_eq!(sheet.cell(575, 1).value, "Figures unaudited; internal draft.");
        // Subtotal rows carry the format marks that make them anchors.
        assert!(sheet.cell(59, 0).value.starts_with("Block"));
        assert!(sheet.cell(59, 0).style.bold);
        assert!(sheet.cell(59, 5).style.borders.top);
        // Deterministic construction.
        assert_eq!(figure_like_sheet(), sheet);
    }

    #[test]
    fn ledger_rows_are_mostly_removable() {
        let sheet = figure_like_sheet();
        let anchors = derive_anchors(&sheet, &AnchorParams::default());
        let (_, map) = extract_skeleton(&sheet, &anchors, 4);
        let kept = map.kept_rows.len();
        assert!(kept * 10 <= 576 * 3, "kept {kept} of 576 rows");
    }

    #[test]
    fn ledger_compression_ordering() {
        let sheet = figure_like_sheet();
        let options = CompressOptions::new();
        let tok = HeuristicTokenizer;
        let vanilla =
            encode_with_modules(&sheet, &ModuleSet::none(), &options, &tok).token_count;
        let m1 = encode_with_modules(
            &sheet,
            &ModuleSet { extraction: true, ..ModuleSet::none() },
            &options,
            &tok,
        )
        .token_count;
        let m12 = encode_with_modules(
            &sheet,
            &ModuleSet { extraction: true, translation: true, aggregation: false },
            &options,
            &tok,
        )
        .token_count;
        let m123 = encode_with_modules(&sheet, &ModuleSet::all(), &options, &tok).token_count;
        assert!(m123 < m12 && m12 < m1 && m1 < vanilla, "{m123} {m12} {m1} {vanilla}");
    }

    #[test]
    fn two_tables_fit_the_small_budget() {
        let (sheet, tables) = two_table_sheet();
        assert!(sheet.rows() <= 30 && sheet.cols() <= 14, "{}x{}", sheet.rows(), sheet.cols());
        assert_eq!(tables.len(), 2);
        for t in &tables {
            assert!(t.bottom < sheet.rows() && t.right < sheet.cols());
            assert!(sheet.cell(t.top, t.left).style.bold, "header starts the table");
            assert!(sheet.cell(t.bottom, t.right).style.borders.bottom);
        }
        assert_eq!(sheet.cell(2, 1).value, "1998");
    }

    #[test]
    fn marked_sheets_have_separated_outlined_tables() {
        for seed in 0..12u64 {
            let (sheet, tables) = boundary_marked_sheet(seed);
            assert!(!tables.is_empty(), "seed {seed} produced no tables");
            for t in &tables {
                assert!(t.bottom < sheet.rows() && t.right < sheet.cols());
                assert!(sheet.cell(t.top, t.left).style.borders.top);
                assert!(sheet.cell(t.top, t.left).style.borders.left);
                assert!(sheet.cell(t.bottom, t.right).style.borders.bottom);
                assert!(sheet.cell(t.bottom, t.right).style.borders.right);
                assert!(!sheet.cell(t.top, t.left).value.is_empty());
            }
            for pair in tables.windows(2) {
                assert!(pair[1].top > pair[0].bottom + 2, "tables keep a blank gap");
            }
            let (again, same_tables) = boundary_marked_sheet(seed);
            assert_eq!(again, sheet);
            assert_eq!(same_tables, tables);
        }
    }

    #[test]
    fn random_sheets_respect_caps_and_seeds() {
        let a = random_sheet(7, 50, 30, 0.5, 0.3);
        assert!(a.rows() <= 50 && a.cols() <= 30);
        assert_eq!(random_sheet(7, 50, 30, 0.5, 0.3), a);
        let empty_heavy = random_sheet(11, 20, 10, 0.0, 0.95);
        assert!(empty_heavy.rows() >= 1);
        // Extreme rates are valid inputs.
        let _ = random_sheet(13, 10, 10, 0.9, 0.0);
        let _ = random_sheet(17, 10, 10, 0.0, 0.0);
    }
}
