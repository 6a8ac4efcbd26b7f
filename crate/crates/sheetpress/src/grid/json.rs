//! Canonical JSON sheet format: `{"name": ..., "cells": [{"addr": "A1", ...}]}`.

use serde::{Deserialize, Serialize};

use super::a1::{parse_a1, parse_range, render_a1, render_range};
use super::{Borders, GridError, Sheet, SheetBuilder};

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawCell {
    addr: String,
    #[serde(default, skip_serializing_if = "String::is_empty")]
    v: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    nfs: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    fill: Option<String>,
    #[serde(default, skip_serializing_if = "std::ops::Not::not")]
    bold: bool,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    borders: Vec<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    merge: Option<String>,
}

#[derive(Debug, Serialize)]
struct RawSheet {
    name: String,
    cells: Vec<RawCell>,
}

fn schema_err(path: &str, message: impl Into<String>) -> GridError {
    GridError::Schema { path: path.to_string(), message: message.into() }
}

/// Parses the canonical JSON sheet format. Errors carry the JSON path of the
/// offending element (for example `$.cells[3].addr`).
pub fn ingest_json(bytes: &[u8]) -> Result<Sheet, GridError> {
    let root: serde_json::Value =
        serde_json::from_slice(bytes).map_err(|e| schema_err("$", e.to_string()))?;
    let obj = root.as_object().ok_or_else(|| schema_err("$", "expected a JSON object"))?;
    for key in obj.keys() {
        if key != "name" && key != "cells" {
            return Err(schema_err("$", format!("unknown field `{key}`")));
        }
    }
    let name = match obj.get("name") {
        None => "Sheet1".to_string(),
        Some(serde_json::Value::String(s)) => s.clone(),
        Some(_) => return Err(schema_err("$.name", "expected a string")),
    };
    let cells = obj
        .get("cells")
        .ok_or_else(|| schema_err("$", "missing field `cells`"))?
        .as_array()
        .ok_or_else(|| schema_err("$.cells", "expected an array"))?;

    let mut builder = SheetBuilder::new(&name);
    let mut seen = std::collections::HashSet::new();
    for (i, raw) in cells.iter().enumerate() {
        let path = format!("$.cells[{i}]");
        let cell: RawCell =
            serde_json::from_value(raw.clone()).map_err(|e| schema_err(&path, e.to_string()))?;
        let addr = parse_a1(&cell.addr)
            .map_err(|_| schema_err(&format!("{path}.addr"), format!("malformed address `{}`", cell.addr)))?;
        if !seen.insert(addr) {
            return Err(GridError::DuplicateAddress { path: format!("{path}.addr"), addr: cell.addr });
        }
        if !cell.v.is_empty() {
            builder.set_value(addr.row, addr.col, &cell.v);
        }
        if let Some(nfs) = &cell.nfs {
            builder.set_nfs(addr.row, addr.col, nfs);
        }
        if let Some(fill) = &cell.fill {
            builder.set_fill(addr.row, addr.col, fill);
        }
        if cell.bold {
            builder.set_bold(addr.row, addr.col, true);
        }
        if !cell.borders.is_empty() {
            let borders = Borders::from_side_names(cell.borders.iter().map(String::as_str))
                .ok_or_else(|| {
                    schema_err(&format!("{path}.borders"), "sides must be top/bottom/left/right")
                })?;
            builder.set_borders(addr.row, addr.col, borders);
        }
        if let Some(merge) = &cell.merge {
            let range = parse_range(merge)
                .map_err(|_| schema_err(&format!("{path}.merge"), format!("malformed range `{merge}`")))?;
            if (range.top, range.left) != (addr.row, addr.col) {
                return Err(schema_err(
                    &format!("{path}.merge"),
                    format!("merge `{merge}` is not anchored at `{}`", cell.addr),
                ));
            }
            builder.set_merge(range);
        }
    }
    builder.build()
}

/// Serializes a sheet back to canonical JSON: cells in row-major order,
/// blank cells and default attributes omitted.
pub fn sheet_to_json(sheet: &Sheet) -> String {
    let mut cells = Vec::new();
    for (addr, cell) in sheet.iter() {
        if cell.is_blank() {
            continue;
        }
        cells.push(RawCell {
            addr: render_a1(addr),
            v: cell.value.clone(),
            nfs: cell.nfs.clone(),
            fill: cell.style.fill_color.clone(),
            bold: cell.style.bold,
            borders: cell.style.borders.sides().iter().map(|s| s.to_lowercase()).collect(),
            merge: cell.merge.as_ref().map(render_range),
        });
    }
    let raw = RawSheet { name: sheet.name().to_string(), cells };
    serde_json::to_string_pretty(&raw).expect("sheet JSON serialization cannot fail")
}
