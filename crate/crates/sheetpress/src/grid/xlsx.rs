//! Workbook (.xlsx) ingestion: unpacks the archive, resolves shared strings
//! and style records, and renders numeric cells to display text.

use std::collections::HashMap;
use std::io::{Cursor, Read};

use quick_xml::events::Event;
use quick_xml::Reader;

use super::a1::{parse_a1, parse_range};
use super::numfmt::format_value;
use super::{Borders, GridError, Sheet, SheetBuilder};

/// Parses every worksheet in an xlsx archive, in workbook order.
pub fn ingest_xlsx(bytes: &[u8]) -> Result<Vec<Sheet>, GridError> {
    let mut archive = zip::ZipArchive::new(Cursor::new(bytes))
        .map_err(|e| GridError::Xlsx(format!("not a readable archive: {e}")))?;
    let shared = match read_part(&mut archive, "xl/sharedStrings.xml")? {
        Some(xml) => parse_shared_strings(&xml)?,
        None => Vec::new(),
    };
    let styles = match read_part(&mut archive, "xl/styles.xml")? {
        Some(xml) => parse_styles(&xml)?,
        None => Styles::default(),
    };
    let workbook = read_part(&mut archive, "xl/workbook.xml")?
        .ok_or_else(|| GridError::Xlsx("missing xl/workbook.xml".into()))?;
    let sheet_refs = parse_workbook(&workbook)?;
    let rels = match read_part(&mut archive, "xl/_rels/workbook.xml.rels")? {
        Some(xml) => parse_rels(&xml)?,
        None => HashMap::new(),
    };

    let mut sheets = Vec::new();
    for (index, (name, rel_id)) in sheet_refs.iter().enumerate() {
        let path = rels
            .get(rel_id)
            .map(|target| resolve_target(target))
            .unwrap_or_else(|| format!("xl/worksheets/sheet{}.xml", index + 1));
        let xml = read_part(&mut archive, &path)?
            .ok_or_else(|| GridError::Xlsx(format!("missing worksheet part {path}")))?;
        sheets.push(parse_worksheet(&xml, name, &shared, &styles)?);
    }
    Ok(sheets)
}

fn read_part(
    archive: &mut zip::ZipArchive<Cursor<&[u8]>>,
    name: &str,
) -> Result<Option<Vec<u8>>, GridError> {
    match archive.by_name(name) {
        Ok(mut file) => {
            let mut buf = Vec::new();
            file.read_to_end(&mut buf)
                .map_err(|e| GridError::Xlsx(format!("reading {name}: {e}")))?;
            Ok(Some(buf))
        }
        Err(zip::result::ZipError::FileNotFound) => Ok(None),
        Err(e) => Err(GridError::Xlsx(format!("reading {name}: {e}"))),
    }
}

fn resolve_target(target: &str) -> String {
    if let Some(abs) = target.strip_prefix('/') {
        abs.to_string()
    } else {
        format!("xl/{target}")
    }
}

fn xml_err(part: &str, e: impl std::fmt::Display) -> GridError {
    GridError::Xlsx(format!("{part}: {e}"))
}

fn attr_value(e: &quick_xml::events::BytesStart<'_>, key: &[u8]) -> Option<String> {
    for attr in e.attributes().flatten() {
        if attr.key.as_ref() == key {
            return attr.unescape_value().ok().map(|v| v.into_owned());
        }
    }
    None
}

fn parse_shared_strings(xml: &[u8]) -> Result<Vec<String>, GridError> {
    let mut reader = Reader::from_reader(xml);
    let mut buf = Vec::new();
    let mut strings = Vec::new();
    let mut current = String::new();
    let mut in_si = false;
    let mut in_t = false;
    loop {
        match reader.read_event_into(&mut buf).map_err(|e| xml_err("sharedStrings", e))? {
            Event::Start(e) => match e.name().as_ref() {
                b"si" => {
                    in_si = true;
                    current.clear();
                }
                b"t" if in_si => in_t = true,
                _ => {}
            },
            Event::Text(t) if in_t => {
                current.push_str(&t.unescape().map_err(|e| xml_err("sharedStrings", e))?);
            }
            Event::End(e) => match e.name().as_ref() {
                b"si" => {
                    in_si = false;
                    strings.push(std::mem::take(&mut current));
                }
                b"t" => in_t = false,
                _ => {}
            },
            Event::Eof => break,
            _ => {}
        }
        buf.clear();
    }
    Ok(strings)
}

fn parse_rels(xml: &[u8]) -> Result<HashMap<String, String>, GridError> {
    let mut reader = Reader::from_reader(xml);
    let mut buf = Vec::new();
    let mut rels = HashMap::new();
    loop {
        match reader.read_event_into(&mut buf).map_err(|e| xml_err("workbook rels", e))? {
            Event::Start(e) | Event::Empty(e) if e.name().as_ref() == b"Relationship" => {
                if let (Some(id), Some(target)) = (attr_value(&e, b"Id"), attr_value(&e, b"Target"))
                {
                    rels.insert(id, target);
                }
            }
            Event::Eof => break,
            _ => {}
        }
        buf.clear();
    }
    Ok(rels)
}

fn parse_workbook(xml: &[u8]) -> Result<Vec<(String, String)>, GridError> {
    let mut reader = Reader::from_reader(xml);
    let mut buf = Vec::new();
    let mut sheets = Vec::new();
    loop {
        match reader.read_event_into(&mut buf).map_err(|e| xml_err("workbook", e))? {
            Event::Start(e) | Event::Empty(e) if e.name().as_ref() == b"sheet" => {
                let name = attr_value(&e, b"name").unwrap_or_else(|| "Sheet".into());
                let mut rel_id = String::new();
                for attr in e.attributes().flatten() {
                    let key = attr.key.as_ref();
                    if key == b"r:id" || key.ends_with(b":id") {
                        rel_id = attr.unescape_value().map(|v| v.into_owned()).unwrap_or_default();
                    }
                }
                sheets.push((name, rel_id));
            }
            Event::Eof => break,
            _ => {}
        }
        buf.clear();
    }
    if sheets.is_empty() {
        return Err(GridError::Xlsx("workbook lists no sheets".into()));
    }
    Ok(sheets)
}

#[derive(Debug, Default)]
struct Styles {
    /// numFmtId -> format code (custom formats; builtins resolved separately).
    num_fmts: HashMap<u32, String>,
    fonts_bold: Vec<bool>,
    fill_colors: Vec<Option<String>>,
    borders: Vec<Borders>,
    cell_xfs: Vec<Xf>,
}

#[derive(Debug, Default, Clone, Copy)]
struct Xf {
    num_fmt_id: u32,
    font_id: usize,
    fill_id: usize,
    border_id: usize,
}

impl Styles {
    fn for_index(&self, s: usize) -> (Option<&str>, bool, Option<&str>, Borders) {
        let Some(xf) = self.cell_xfs.get(s) else {
            return (None, false, None, Borders::none());
        };
        let code = match self.num_fmts.get(&xf.num_fmt_id) {
            Some(custom) => Some(custom.as_str()),
            None => builtin_format_code(xf.num_fmt_id),
        };
        let bold = self.fonts_bold.get(xf.font_id).copied().unwrap_or(false);
        let fill = self.fill_colors.get(xf.fill_id).and_then(|c| c.as_deref());
        let borders = self.borders.get(xf.border_id).copied().unwrap_or_default();
        (code, bold, fill, borders)
    }
}

/// Standard numFmtId table for the ids every producer relies on implicitly.
fn builtin_format_code(id: u32) -> Option<&'static str> {
    match id {
        1 => Some("0"),
        2 => Some("0.00"),
        3 => Some("#,##0"),
        4 => Some("#,##0.00"),
        9 => Some("0%"),
        10 => Some("0.00%"),
        11 => Some("0.00E+00"),
        14 => Some("m/d/yyyy"),
        15 => Some("d-mmm-yy"),
        16 => Some("d-mmm"),
        17 => Some("mmm-yy"),
        20 => Some("h:mm"),
        21 => Some("h:mm:ss"),
        22 => Some("m/d/yy h:mm"),
        37 => Some("#,##0"),
        38 => Some("#,##0"),
        39 => Some("#,##0.00"),
        40 => Some("#,##0.00"),
        45 => Some("mm:ss"),
        46 => Some("h:mm:ss"),
        47 => Some("mm:ss"),
        48 => Some("0.0E+00"),
        49 => Some("@"),
        _ => None,
    }
}

fn parse_styles(xml: &[u8]) -> Result<Styles, GridError> {
    let mut reader = Reader::from_reader(xml);
    let mut buf = Vec::new();
    let mut styles = Styles::default();
    let mut in_cell_xfs = false;
    let mut in_fonts = false;
    let mut in_fills = false;
    let mut in_borders = false;
    let mut current_border = Borders::none();
    let mut current_fill: Option<String> = None;
    let mut current_bold = false;
    let mut fill_is_solid = false;

    loop {
        let event = reader.read_event_into(&mut buf).map_err(|e| xml_err("styles", e))?;
        match &event {
            Event::Start(e) | Event::Empty(e) => {
                let empty = matches!(event, Event::Empty(_));
                match e.name().as_ref() {
                    b"cellXfs" => in_cell_xfs = !empty,
                    b"fonts" => in_fonts = !empty,
                    b"fills" => in_fills = !empty,
                    b"borders" => in_borders = !empty,
                    b"numFmt" => {
                        if let (Some(id), Some(code)) =
                            (attr_value(e, b"numFmtId"), attr_value(e, b"formatCode"))
                        {
                            if let Ok(id) = id.parse() {
                                styles.num_fmts.insert(id, code);
                            }
                        }
                    }
                    b"xf" if in_cell_xfs => {
                        let get = |key: &[u8]| {
                            attr_value(e, key).and_then(|v| v.parse::<usize>().ok()).unwrap_or(0)
                        };
                        styles.cell_xfs.push(Xf {
                            num_fmt_id: get(b"numFmtId") as u32,
                            font_id: get(b"fontId"),
                            fill_id: get(b"fillId"),
                            border_id: get(b"borderId"),
                        });
                    }
                    b"font" if in_fonts => {
                        current_bold = false;
                        if empty {
                            styles.fonts_bold.push(false);
                        }
                    }
                    b"b" if in_fonts => {
                        current_bold = attr_value(e, b"val").map_or(true, |v| v != "0" && v != "false");
                    }
                    b"fill" if in_fills => {
                        current_fill = None;
                        fill_is_solid = false;
                        if empty {
                            styles.fill_colors.push(None);
                        }
                    }
                    b"patternFill" if in_fills => {
                        fill_is_solid = attr_value(e, b"patternType").as_deref() == Some("solid");
                    }
                    b"fgColor" if in_fills && fill_is_solid => {
                        current_fill = attr_value(e, b"rgb")
                            .or_else(|| attr_value(e, b"theme").map(|t| format!("theme:{t}")))
                            .or_else(|| attr_value(e, b"indexed").map(|t| format!("indexed:{t}")));
                    }
                    b"border" if in_borders => {
                        current_border = Borders::none();
                        if empty {
                            styles.borders.push(Borders::none());
                        }
                    }
                    side @ (b"left" | b"right" | b"top" | b"bottom") if in_borders => {
                        if attr_value(e, b"style").is_some() {
                            match side {
                                b"left" => current_border.left = true,
                                b"right" => current_border.right = true,
                                b"top" => current_border.top = true,
                                b"bottom" => current_border.bottom = true,
                                _ => unreachable!(),
                            }
                        }
                    }
                    _ => {}
                }
            }
            Event::End(e) => match e.name().as_ref() {
                b"cellXfs" => in_cell_xfs = false,
                b"fonts" => in_fonts = false,
                b"fills" => in_fills = false,
                b"borders" => in_borders = false,
                b"font" => styles.fonts_bold.push(current_bold),
                b"fill" => styles.fill_colors.push(current_fill.take()),
                b"border" => styles.borders.push(current_border),
                _ => {}
            },
            Event::Eof => break,
            _ => {}
        }
        buf.clear();
    }
    Ok(styles)
}

fn parse_worksheet(
    xml: &[u8],
    name: &str,
    shared: &[String],
    styles: &Styles,
) -> Result<Sheet, GridError> {
    let mut reader = Reader::from_reader(xml);
    let mut buf = Vec::new();
    let mut builder = SheetBuilder::new(name);

    let mut current_row = 0usize;
    let mut next_col = 0usize;
    let mut cell_addr: Option<(usize, usize)> = None;
    let mut cell_type = String::new();
    let mut cell_style = 0usize;
    let mut value_text: Option<String> = None;
    let mut inline_text = String::new();
    let mut capture: Option<Capture> = None;

    #[derive(PartialEq)]
    enum Capture {
        Value,
        InlineT,
    }

    let flush_cell = |builder: &mut SheetBuilder,
                          addr: Option<(usize, usize)>,
                          ty: &str,
                          style: usize,
                          value: Option<String>,
                          inline: &str| {
        let Some((row, col)) = addr else { return };
        let (code, bold, fill, borders) = styles.for_index(style);
        let display = match ty {
            "s" => value
                .as_deref()
                .and_then(|v| v.trim().parse::<usize>().ok())
                .and_then(|i| shared.get(i).cloned())
                .unwrap_or_default(),
            "str" | "e" => value.unwrap_or_default(),
            "inlineStr" => inline.to_string(),
            "b" => match value.as_deref().map(str::trim) {
                Some("1") => "TRUE".to_string(),
                _ => "FALSE".to_string(),
            },
            _ => match value.as_deref().map(str::trim) {
                Some(v) if !v.is_empty() => match v.parse::<f64>() {
                    Ok(num) => format_value(num, code),
                    Err(_) => v.to_string(),
                },
                _ => String::new(),
            },
        };
        if !display.is_empty() {
            builder.set_value(row, col, &display);
        }
        if let Some(code) = code {
            if code != "@" && code != "General" {
                builder.set_nfs(row, col, code);
            }
        }
        if bold {
            builder.set_bold(row, col, true);
        }
        if let Some(fill) = fill {
            builder.set_fill(row, col, fill);
        }
        if !borders.is_empty() {
            builder.set_borders(row, col, borders);
        }
    };

    loop {
        let event = reader.read_event_into(&mut buf).map_err(|e| xml_err("worksheet", e))?;
        match &event {
            Event::Start(e) | Event::Empty(e) => {
                let empty = matches!(event, Event::Empty(_));
                match e.name().as_ref() {
                    b"row" => {
                        if let Some(r) = attr_value(e, b"r").and_then(|v| v.parse::<usize>().ok()) {
                            if r >= 1 {
                                current_row = r - 1;
                            }
                        }
                        next_col = 0;
                    }
                    b"c" => {
                        let addr = match attr_value(e, b"r").and_then(|r| parse_a1(&r).ok()) {
                            Some(a) => (a.row, a.col),
                            None => (current_row, next_col),
                        };
                        next_col = addr.1 + 1;
                        cell_type = attr_value(e, b"t").unwrap_or_default();
                        cell_style =
                            attr_value(e, b"s").and_then(|v| v.parse().ok()).unwrap_or(0);
                        value_text = None;
                        inline_text.clear();
                        if empty {
                            flush_cell(
                                &mut builder,
                                Some(addr),
                                &cell_type,
                                cell_style,
                                None,
                                "",
                            );
                        } else {
                            cell_addr = Some(addr);
                        }
                    }
                    b"v" if cell_addr.is_some() && !empty => capture = Some(Capture::Value),
                    b"t" if cell_addr.is_some() && !empty => capture = Some(Capture::InlineT),
                    b"mergeCell" => {
                        if let Some(range) =
                            attr_value(e, b"ref").and_then(|r| parse_range(&r).ok())
                        {
                            builder.set_merge(range);
                        }
                    }
                    _ => {}
                }
            }
            Event::Text(t) => {
                let text = t.unescape().map_err(|e| xml_err("worksheet", e))?;
                match capture {
                    Some(Capture::Value) => {
                        value_text.get_or_insert_with(String::new).push_str(&text)
                    }
                    Some(Capture::InlineT) => inline_text.push_str(&text),
                    None => {}
                }
            }
            Event::End(e) => match e.name().as_ref() {
                b"c" => {
                    flush_cell(
                        &mut builder,
                        cell_addr.take(),
                        &cell_type,
                        cell_style,
                        value_text.take(),
                        &inline_text,
                    );
                }
                b"v" | b"t" => capture = None,
                b"row" => current_row += 1,
                _ => {}
            },
            Event::Eof => break,
            _ => {}
        }
        buf.clear();
    }
    builder.build()
}
