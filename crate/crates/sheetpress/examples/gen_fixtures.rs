//! Writes the built-in demo sheets as canonical JSON, ready for the CLI:
//! `cargo run -p sheetpress --example gen_fixtures -- <out-dir>`

use sheetpress::eval::ranges_to_strings;
use sheetpress::grid::sheet_to_json;
use sheetpress::{boundary_marked_sheet, figure_like_sheet, two_table_sheet};

fn main() {
    let out = std::env::args().nth(1).unwrap_or_else(|| ".".to_string());
    let out = std::path::Path::new(&out);
    std::fs::create_dir_all(out).expect("create output directory");

    let (two_table, two_table_gold) = two_table_sheet();
    let (marked, marked_gold) = boundary_marked_sheet(7);
    let fixtures =
        [("ledger.json", figure_like_sheet()), ("two_table.json", two_table), ("marked.json", marked)];
    for (name, sheet) in &fixtures {
        let path = out.join(name);
        std::fs::write(&path, sheet_to_json(sheet)).expect("write fixture");
        println!("{} ({} x {})", path.display(), sheet.rows(), sheet.cols());
    }

    // Matching detection gold for the two table-bearing fixtures.
    let gold = serde_json::json!([
        {"sheet": "two_table.json", "tables": ranges_to_strings(&two_table_gold)},
        {"sheet": "marked.json", "tables": ranges_to_strings(&marked_gold)},
    ]);
    let path = out.join("gold.json");
    std::fs::write(&path, serde_json::to_string_pretty(&gold).expect("gold serializes"))
        .expect("write gold");
    println!("{} ({} sheets)", path.display(), 2);
}
