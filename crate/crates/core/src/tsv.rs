//! Small helpers for the tab-separated artifact files.

use std::io::BufRead;
use std::path::PathBuf;

use crate::error::{Error, Result};
use crate::unit::Unit;

fn parse_error(line: usize, reason: impl Into<String>) -> Error {
    Error::Parse {
        path: PathBuf::new(),
        line,
        reason: reason.into(),
    }
}

/// Non-empty lines split on tabs, checked to have exactly `columns` fields.
/// Yields `(1-based line number, fields)`.
pub fn rows<R: BufRead>(reader: R, columns: usize) -> impl Iterator<Item = Result<(usize, Vec<String>)>> {
    reader.lines().enumerate().filter_map(move |(i, line)| {
        let line = match line {
            Ok(l) => l,
            Err(e) => return Some(Err(Error::io(PathBuf::new(), e))),
        };
        if line.trim().is_empty() {
            return None;
        }
        let fields: Vec<String> = line.split('\t').map(str::to_string).collect();
        if fields.len() != columns {
            return Some(Err(parse_error(
                i + 1,
                format!("expected {columns} tab-separated fields, found {}", fields.len()),
            )));
        }
        Some(Ok((i + 1, fields)))
    })
}

pub fn parse_unit(s: &str, line: usize) -> Result<Unit> {
    s.parse().map_err(|_| parse_error(line, format!("invalid unit {s:?}")))
}

pub fn parse_u64(s: &str, line: usize) -> Result<u64> {
    s.parse().map_err(|_| parse_error(line, format!("invalid count {s:?}")))
}

pub fn parse_f64(s: &str, line: usize) -> Result<f64> {
    s.parse().map_err(|_| parse_error(line, format!("invalid number {s:?}")))
}

/// Attaches a file name to parse errors produced by the helpers above.
pub fn with_path(err: Error, path: impl Into<PathBuf>) -> Error {
    match err {
        Error::Parse { line, reason, .. } => Error::Parse {
            path: path.into(),
            line,
            reason,
        },
        Error::Io { source, .. } => Error::Io {
            path: path.into(),
            source,
        },
        other => other,
    }
}

/// `%g`-style formatting with six significant digits.
pub fn format_sig6(x: f64) -> String {
    if x == 0.0 || !x.is_finite() {
        return format!("{x}");
    }
    let exp = x.abs().log10().floor() as i32;
    if !(-5..6).contains(&exp) {
        let s = format!("{x:.5e}");
        let (mantissa, e) = s.split_once('e').unwrap();
        return format!("{}e{}", trim_zeros(mantissa), e);
    }
    let decimals = (5 - exp).max(0) as usize;
    trim_zeros(&format!("{x:.decimals$}")).to_string()
}

fn trim_zeros(s: &str) -> &str {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.')
    } else {
        s
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sig6() {
        assert_eq!(format_sig6(100.0), "100");
        assert_eq!(format_sig6(123.456789), "123.457");
        assert_eq!(format_sig6(0.5), "0.5");
        assert_eq!(format_sig6(1234567.0), "1.23457e6");
        assert_eq!(format_sig6(0.0), "0");
    }

    #[test]
    fn rows_check_width() {
        let data = "a\tb\n\nc\n";
        let got: Vec<_> = rows(data.as_bytes(), 2).collect();
        assert_eq!(got.len(), 2);
        assert!(got[0].is_ok());
        assert!(matches!(got[1], Err(Error::Parse { line: 3, .. })));
    }
}
