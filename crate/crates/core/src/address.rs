//! Cell addresses and A1 notation.

use std::fmt;

use thiserror::Error;

/// Largest column index accepted (`XFD`).
pub const MAX_COL: u32 = 16_384;
/// Largest row index accepted.
pub const MAX_ROW: u32 = 1_048_576;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum AddressError {
    #[error("malformed cell address `{0}`")]
    Malformed(String),
}

/// A cell position: sheet name plus 1-based column and row.
///
/// Ordering is by `(sheet, row, col)`, which is the order schema records and
/// classification results are reported in.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct CellAddress {
    pub sheet: String,
    pub row: u32,
    pub col: u32,
}

impl CellAddress {
    pub fn new(sheet: impl Into<String>, col: u32, row: u32) -> Self {
        CellAddress {
            sheet: sheet.into(),
            row,
            col,
        }
    }

    /// Address offset by `(dcol, drow)`; `None` if it leaves the grid.
    pub fn offset(&self, dcol: i64, drow: i64) -> Option<CellAddress> {
        let col = self.col as i64 + dcol;
        let row = self.row as i64 + drow;
        if col < 1 || row < 1 || col > MAX_COL as i64 || row > MAX_ROW as i64 {
            return None;
        }
        Some(CellAddress::new(self.sheet.clone(), col as u32, row as u32))
    }

    /// `B3` style reference without the sheet.
    pub fn a1(&self) -> String {
        format!("{}{}", column_name(self.col), self.row)
    }

    /// `Sheet!B3`, quoting the sheet when needed.
    pub fn qualified(&self) -> String {
        format!("{}!{}", quote_sheet(&self.sheet), self.a1())
    }
}

impl fmt::Display for CellAddress {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.qualified())
    }
}

/// Bijective base-26 column name: 1 → `A`, 26 → `Z`, 27 → `AA`.
pub fn column_name(mut col: u32) -> String {
    let mut out = Vec::new();
    while col > 0 {
        let rem = (col - 1) % 26;
        out.push(b'A' + rem as u8);
        col = (col - 1) / 26;
    }
    out.reverse();
    String::from_utf8(out).expect("ascii")
}

/// Inverse of [`column_name`]; letters are case-insensitive.
pub fn column_index(letters: &str) -> Option<u32> {
    if letters.is_empty() {
        return None;
    }
    let mut col: u64 = 0;
    for b in letters.bytes() {
        if !b.is_ascii_alphabetic() {
            return None;
        }
        col = col * 26 + (b.to_ascii_uppercase() - b'A' + 1) as u64;
        if col > MAX_COL as u64 {
            return None;
        }
    }
    Some(col as u32)
}

/// Whether a sheet name must be quoted in a reference.
pub fn needs_quotes(sheet: &str) -> bool {
    sheet.is_empty()
        || sheet.starts_with(|c: char| c.is_ascii_digit())
        || !sheet.chars().all(|c| c.is_alphanumeric() || c == '_' || c == '.')
}

pub fn quote_sheet(sheet: &str) -> String {
    if needs_quotes(sheet) {
        format!("'{}'", sheet.replace('\'', "''"))
    } else {
        sheet.to_string()
    }
}

/// Split an optional `Sheet!` / `'My Sheet'!` qualifier off a reference.
///
/// Returns `(sheet, rest)`.
pub fn split_sheet(text: &str) -> Result<(Option<String>, &str), AddressError> {
    let malformed = || AddressError::Malformed(text.to_string());
    if let Some(body) = text.strip_prefix('\'') {
        let mut name = String::new();
        let mut chars = body.char_indices().peekable();
        while let Some((i, c)) = chars.next() {
            if c == '\'' {
                if matches!(chars.peek(), Some((_, '\''))) {
                    chars.next();
                    name.push('\'');
                    continue;
                }
                let rest = &body[i + 1..];
                let rest = rest.strip_prefix('!').ok_or_else(malformed)?;
                if name.is_empty() {
                    return Err(malformed());
                }
                return Ok((Some(name), rest));
            }
            name.push(c);
        }
        return Err(malformed());
    }
    match text.rfind('!') {
        Some(0) => Err(malformed()),
        Some(i) => Ok((Some(text[..i].to_string()), &text[i + 1..])),
        None => Ok((None, text)),
    }
}

/// Parse the `$A$1` part of a reference into `(col, row)`.
pub fn parse_a1_part(text: &str) -> Option<(u32, u32)> {
    let s = text.trim();
    let s = s.strip_prefix('$').unwrap_or(s);
    let letters_end = s.find(|c: char| !c.is_ascii_alphabetic())?;
    let (letters, rest) = s.split_at(letters_end);
    let rest = rest.strip_prefix('$').unwrap_or(rest);
    if rest.is_empty() || !rest.bytes().all(|b| b.is_ascii_digit()) || rest.starts_with('0') {
        return None;
    }
    let col = column_index(letters)?;
    let row: u32 = rest.parse().ok()?;
    if row == 0 || row > MAX_ROW {
        return None;
    }
    Some((col, row))
}

/// Parse an A1 reference, optionally sheet-qualified.
///
/// `$` markers are accepted and dropped. Without a qualifier the address is
/// placed on `default_sheet`.
pub fn a1_to_address(a1: &str, default_sheet: &str) -> Result<CellAddress, AddressError> {
    let (sheet, rest) = split_sheet(a1.trim())?;
    let (col, row) = parse_a1_part(rest).ok_or_else(|| AddressError::Malformed(a1.to_string()))?;
    Ok(CellAddress::new(
        sheet.unwrap_or_else(|| default_sheet.to_string()),
        col,
        row,
    ))
}

pub fn address_to_a1(addr: &CellAddress, include_sheet: bool) -> String {
    if include_sheet {
        addr.qualified()
    } else {
        addr.a1()
    }
}
