//! Edition-prefixed units and their text serialization.
//!
//! A unit is a word token or a byte n-gram owned by one edition. Its text form
//! is `edition_id:surface`. Surfaces are raw bytes; bytes that would break a
//! whitespace-separated text format (whitespace, control bytes, `%`, and bytes
//! that are not part of a valid UTF-8 sequence) are written as `%XX`.

use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Unit {
    pub edition: String,
    pub surface: Vec<u8>,
}

impl Unit {
    pub fn new(edition: impl Into<String>, surface: impl Into<Vec<u8>>) -> Self {
        Unit {
            edition: edition.into(),
            surface: surface.into(),
        }
    }

    /// The serialized `edition:surface` form.
    pub fn key(&self) -> String {
        self.to_string()
    }
}

impl fmt::Display for Unit {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}", self.edition, escape_surface(&self.surface))
    }
}

impl FromStr for Unit {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let (edition, surface) = s
            .split_once(':')
            .ok_or_else(|| Error::InvalidUnit(s.to_string()))?;
        validate_edition_id(edition)?;
        let surface = unescape_surface(surface).ok_or_else(|| Error::InvalidUnit(s.to_string()))?;
        if surface.is_empty() {
            return Err(Error::InvalidUnit(s.to_string()));
        }
        Ok(Unit::new(edition, surface))
    }
}

/// Edition ids are used as unit prefixes and file names.
pub fn validate_edition_id(id: &str) -> Result<()> {
    let ok = !id.is_empty()
        && id
            .bytes()
            .all(|b| b.is_ascii_alphanumeric() || matches!(b, b'_' | b'-' | b'.'));
    if ok {
        Ok(())
    } else {
        Err(Error::InvalidEditionId(id.to_string()))
    }
}

fn needs_escape(c: char) -> bool {
    c == '%' || c.is_whitespace() || c.is_control()
}

pub fn escape_surface(bytes: &[u8]) -> String {
    let mut out = String::with_capacity(bytes.len());
    for chunk in bytes.utf8_chunks() {
        for c in chunk.valid().chars() {
            if needs_escape(c) {
                let mut buf = [0u8; 4];
                for b in c.encode_utf8(&mut buf).bytes() {
                    push_hex(&mut out, b);
                }
            } else {
                out.push(c);
            }
        }
        for &b in chunk.invalid() {
            push_hex(&mut out, b);
        }
    }
    out
}

fn push_hex(out: &mut String, b: u8) {
    const HEX: &[u8; 16] = b"0123456789ABCDEF";
    out.push('%');
    out.push(HEX[(b >> 4) as usize] as char);
    out.push(HEX[(b & 0xF) as usize] as char);
}

pub fn unescape_surface(s: &str) -> Option<Vec<u8>> {
    let bytes = s.as_bytes();
    let mut out = Vec::with_capacity(bytes.len());
    let mut i = 0;
    while i < bytes.len() {
        if bytes[i] == b'%' {
            let hex = s.get(i + 1..i + 3)?;
            out.push(u8::from_str_radix(hex, 16).ok()?);
            i += 3;
        } else {
            out.push(bytes[i]);
            i += 1;
        }
    }
    Some(out)
}
