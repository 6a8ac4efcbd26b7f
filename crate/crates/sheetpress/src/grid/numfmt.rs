//! Minimal number-format rendering: turns a raw numeric cell value plus a
//! format string into the display text a spreadsheet UI would show.
//!
//! Covers the format families that actually occur in workbooks we ingest:
//! general, fixed decimals, thousands separators, percentages, scientific,
//! currency, dates, and times. Anything unrecognized falls back to the
//! general rendering — display fidelity degrades gracefully, never errors.

/// True when the format string renders some date component (y/m/d tokens).
pub fn is_date_like_format(code: &str) -> bool {
    let c = strip_meta(code);
    c.contains('y') || c.contains("mmm") || (c.contains('d') && c.contains('m'))
}

/// True when the format string renders a time of day.
pub fn is_time_like_format(code: &str) -> bool {
    let c = strip_meta(code);
    c.contains('h') || c.contains('s') || c.contains("AM/PM") || c.contains("am/pm")
}

/// Drops locale prefixes like `[$-409]` and color tags like `[Red]` so token
/// scanning sees only the display tokens.
fn strip_meta(code: &str) -> String {
    let mut out = String::new();
    let mut chars = code.chars().peekable();
    while let Some(c) = chars.next() {
        if c == '[' {
            // Currency markers `[$€-407]` keep their symbol; everything else
            // inside brackets is formatting metadata.
            let mut inner = String::new();
            for c2 in chars.by_ref() {
                if c2 == ']' {
                    break;
                }
                inner.push(c2);
            }
            if let Some(rest) = inner.strip_prefix('$') {
                let symbol = rest.split('-').next().unwrap_or("");
                out.push_str(symbol);
            }
        } else {
            out.push(c);
        }
    }
    out
}

/// Renders a raw numeric value under the given format string; `None` means
/// the "General" format.
pub fn format_value(raw: f64, code: Option<&str>) -> String {
    let Some(code) = code else { return general(raw) };
    let code = match code.split(';').next() {
        Some(first) if !first.is_empty() => first,
        _ => code,
    };
    let c = strip_meta(code);
    if c == "General" || c == "@" || c.is_empty() {
        return general(raw);
    }
    if is_date_like_format(&c) && !c.contains('0') {
        return format_date_time(raw, &c);
    }
    if is_time_like_format(&c) && !c.contains('0') && !c.contains('#') {
        return format_date_time(raw, &c);
    }
    if c.contains('%') {
        let decimals = decimals_after_point(&c);
        return format!("{:.*}%", decimals, raw * 100.0);
    }
    if c.contains('E') || c.contains('e') {
        return scientific(raw, decimals_after_point(&c));
    }
    // Plain numeric pattern, possibly with a currency symbol and separators.
    let symbol = c.chars().find(|ch| "$€£¥".contains(*ch));
    let thousands = c.contains("#,##") || c.contains("0,00");
    let decimals = decimals_after_point(&c);
    let mut body = fixed(raw.abs(), decimals, thousands);
    if let Some(sym) = symbol {
        body = format!("{sym}{body}");
    }
    if raw < 0.0 {
        body.insert(0, '-');
    }
    body
}

fn decimals_after_point(code: &str) -> usize {
    match code.find('.') {
        Some(i) => code[i + 1..].chars().take_while(|c| *c == '0' || *c == '#').count(),
        None => 0,
    }
}

fn general(raw: f64) -> String {
    if raw == raw.trunc() && raw.abs() < 1e15 {
        format!("{}", raw as i64)
    } else {
        format!("{raw}")
    }
}

fn fixed(value: f64, decimals: usize, thousands: bool) -> String {
    let body = format!("{value:.decimals$}");
    if !thousands {
        return body;
    }
    let (int_part, frac_part) = match body.split_once('.') {
        Some((i, f)) => (i.to_string(), Some(f.to_string())),
        None => (body, None),
    };
    let mut grouped = String::new();
    let digits: Vec<char> = int_part.chars().collect();
    for (i, d) in digits.iter().enumerate() {
        if i > 0 && (digits.len() - i) % 3 == 0 {
            grouped.push(',');
        }
        grouped.push(*d);
    }
    match frac_part {
        Some(f) => format!("{grouped}.{f}"),
        None => grouped,
    }
}

fn scientific(value: f64, decimals: usize) -> String {
    if value == 0.0 {
        return format!("{:.*}E+00", decimals, 0.0);
    }
    let exp = value.abs().log10().floor() as i32;
    let mantissa = value / 10f64.powi(exp);
    // Guard against log10 edge rounding (e.g. 999.999... landing on 1000).
    let (mantissa, exp) =
        if mantissa.abs() >= 10.0 { (mantissa / 10.0, exp + 1) } else { (mantissa, exp) };
    format!("{:.*}E{}{:02}", decimals, mantissa, if exp < 0 { '-' } else { '+' }, exp.abs())
}

/// Days-to-civil-date conversion (Gregorian, proleptic), days since 1970-01-01.
fn civil_from_days(z: i64) -> (i64, u32, u32) {
    let z = z + 719_468;
    let era = if z >= 0 { z } else { z - 146_096 } / 146_097;
    let doe = z - era * 146_097;
    let yoe = (doe - doe / 1460 + doe / 36_524 - doe / 146_096) / 365;
    let y = yoe + era * 400;
    let doy = doe - (365 * yoe + yoe / 4 - yoe / 100);
    let mp = (5 * doy + 2) / 153;
    let d = (doy - (153 * mp + 2) / 5 + 1) as u32;
    let m = (if mp < 10 { mp + 3 } else { mp - 9 }) as u32;
    (if m <= 2 { y + 1 } else { y }, m, d)
}

/// Converts a 1900-system serial number to (year, month, day). Serials below
/// 61 predate the phantom 1900-02-29 and sit one day closer to the epoch.
fn serial_to_ymd(serial: i64) -> (i64, u32, u32) {
    let unix_days = if serial < 61 { serial - 25_568 } else { serial - 25_569 };
    civil_from_days(unix_days)
}

const MONTHS: [&str; 12] =
    ["Jan", "Feb", "Mar", "Apr", "May", "Jun", "Jul", "Aug", "Sep", "Oct", "Nov", "Dec"];

fn format_date_time(raw: f64, code: &str) -> String {
    let serial = raw.floor() as i64;
    let (y, mo, d) = serial_to_ymd(serial);
    let day_frac = raw - raw.floor();
    let total_secs = (day_frac * 86_400.0).round() as i64;
    let (hh, mi, ss) = (total_secs / 3600 % 24, total_secs / 60 % 60, total_secs % 60);

    let mut out = String::new();
    let chars: Vec<char> = code.chars().collect();
    let mut i = 0;
    // `m` means month except directly after an hour token or before seconds.
    let mut last_was_hour = false;
    while i < chars.len() {
        let c = chars[i];
        let run = chars[i..].iter().take_while(|&&x| x == c).count();
        match c {
            'y' | 'Y' => {
                out.push_str(&if run >= 4 { format!("{y:04}") } else { format!("{:02}", y % 100) });
                i += run;
                last_was_hour = false;
            }
            'm' | 'M' => {
                let minutes = last_was_hour || chars.get(i + run).copied() == Some(':');
                if minutes && run <= 2 {
                    out.push_str(&format!("{mi:02}"));
                } else if run >= 3 {
                    out.push_str(MONTHS[(mo - 1) as usize]);
                } else if run == 2 {
                    out.push_str(&format!("{mo:02}"));
                } else {
                    out.push_str(&mo.to_string());
                }
                i += run;
                last_was_hour = false;
            }
            'd' | 'D' => {
                out.push_str(&if run >= 2 { format!("{d:02}") } else { d.to_string() });
                i += run;
                last_was_hour = false;
            }
            'h' | 'H' => {
                out.push_str(&if run >= 2 { format!("{hh:02}") } else { hh.to_string() });
                i += run;
                last_was_hour = true;
            }
            's' | 'S' => {
                out.push_str(&format!("{ss:02}"));
                i += run;
                last_was_hour = false;
            }
            '\\' => {
                if i + 1 < chars.len() {
                    out.push(chars[i + 1]);
                }
                i += 2;
            }
            '"' => {
                i += 1;
                while i < chars.len() && chars[i] != '"' {
                    out.push(chars[i]);
                    i += 1;
                }
                i += 1;
            }
            other => {
                out.push(other);
                i += 1;
                if other != ':' {
                    last_was_hour = false;
                }
            }
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn general_trims_trailing_zeroes() {
        assert_eq!(format_value(42.0, None), "42");
        assert_eq!(format_value(3.14, None), "3.14");
        assert_eq!(format_value(-7.0, None), "-7");
    }

    #[test]
    fn fixed_and_thousands() {
        assert_eq!(format_value(1234.5, Some("0.00")), "1234.50");
        assert_eq!(format_value(1234567.0, Some("#,##0")), "1,234,567");
        assert_eq!(format_value(1234.5, Some("#,##0.00")), "1,234.50");
        assert_eq!(format_value(-1234.5, Some("#,##0.00")), "-1,234.50");
    }

    #[test]
    fn percent_scales_by_hundred() {
        assert_eq!(format_value(0.62, Some("0%")), "62%");
        assert_eq!(format_value(0.1234, Some("0.00%")), "12.34%");
    }

    #[test]
    fn scientific_uses_signed_two_digit_exponent() {
        assert_eq!(format_value(1500.0, Some("0.00E+00")), "1.50E+03");
        assert_eq!(format_value(0.0042, Some("0.00E+00")), "4.20E-03");
        assert_eq!(format_value(0.0, Some("0.00E+00")), "0.00E+00");
    }

    #[test]
    fn currency_prefixes_symbol() {
        assert_eq!(format_value(1234.5, Some("$#,##0.00")), "$1,234.50");
        assert_eq!(format_value(-9.5, Some("$#,##0.00")), "-$9.50");
        assert_eq!(format_value(12.0, Some("[$€-407]#,##0.00")), "€12.00");
    }

    #[test]
    fn date_serials_render() {
        // 2024-02-14 in the 1900 serial system.
        assert_eq!(format_value(45336.0, Some("yyyy-mm-dd")), "2024-02-14");
        assert_eq!(format_value(45336.0, Some("yyyy/mm/dd")), "2024/02/14");
        assert_eq!(format_value(45336.0, Some("d-mmm-yy")), "14-Feb-24");
        assert_eq!(format_value(45336.0, Some("m/d/yyyy")), "2/14/2024");
        // Serial 1 is 1900-01-01; serial 60 sits before the phantom leap day.
        assert_eq!(format_value(1.0, Some("yyyy-mm-dd")), "1900-01-01");
        assert_eq!(format_value(59.0, Some("yyyy-mm-dd")), "1900-02-28");
        assert_eq!(format_value(61.0, Some("yyyy-mm-dd")), "1900-03-01");
    }

    #[test]
    fn time_serials_render() {
        assert_eq!(format_value(0.5, Some("h:mm:ss")), "12:00:00");
        assert_eq!(format_value(0.573_611, Some("hh:mm")), "13:46");
        assert_eq!(format_value(45336.25, Some("yyyy-mm-dd h:mm")), "2024-02-14 6:00");
    }

    #[test]
    fn classification_helpers() {
        assert!(is_date_like_format("yyyy-mm-dd"));
        assert!(is_date_like_format("d-mmm-yy"));
        assert!(!is_date_like_format("#,##0.00"));
        assert!(is_time_like_format("h:mm:ss"));
        assert!(!is_time_like_format("0.00"));
    }

    #[test]
    fn unknown_codes_fall_back_to_general() {
        assert_eq!(format_value(5.0, Some("@")), "5");
        assert_eq!(format_value(5.25, Some("General")), "5.25");
    }
}
