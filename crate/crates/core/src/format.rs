//! Field formats (`Text`, `Date`, `Number[2]`, ...) and parsing of raw
//! source values under a format.

use std::fmt;
use std::str::FromStr;

use chrono::NaiveDate;
use thiserror::Error;

use crate::value::CellValue;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Format {
    Text,
    Date,
    Number(u8),
    Percentage(u8),
    Currency(u8),
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("invalid format `{0}` (expected Text, Date, Number[p], Percentage[p] or Currency[p])")]
pub struct FormatError(pub String);

impl Format {
    /// Decimal precision for numeric formats.
    pub fn precision(self) -> Option<u8> {
        match self {
            Format::Number(p) | Format::Percentage(p) | Format::Currency(p) => Some(p),
            Format::Text | Format::Date => None,
        }
    }

    pub fn is_numeric(self) -> bool {
        self.precision().is_some()
    }

    /// Decimal places of the stored fraction that a comparison rounds to.
    /// `Percentage[p]` displays `p` places of the percent value, i.e. `p + 2`
    /// places of the fraction.
    pub fn comparison_digits(self) -> Option<i32> {
        match self {
            Format::Number(p) | Format::Currency(p) => Some(p as i32),
            Format::Percentage(p) => Some(p as i32 + 2),
            _ => None,
        }
    }

    /// Parse a raw value pulled from a data source into the value the
    /// engine sees.
    pub fn parse_value(self, raw: &CellValue) -> Result<CellValue, String> {
        match raw {
            CellValue::Blank => return Ok(CellValue::Blank),
            CellValue::Error(e) => return Err(format!("source returned error value {e}")),
            _ => {}
        }
        match self {
            Format::Text => Ok(CellValue::Text(raw.to_text().map_err(|e| e.to_string())?)),
            Format::Date => match raw {
                CellValue::Date(d) => Ok(CellValue::Date(*d)),
                CellValue::Text(s) => parse_date(s)
                    .map(CellValue::Date)
                    .ok_or_else(|| format!("`{s}` is not a date")),
                other => Err(format!("`{other}` is not a date")),
            },
            Format::Number(_) | Format::Currency(_) | Format::Percentage(_) => match raw {
                CellValue::Number(n) => Ok(CellValue::Number(*n)),
                CellValue::Boolean(_) | CellValue::Date(_) => {
                    Err(format!("`{raw}` is not numeric"))
                }
                CellValue::Text(s) => parse_number(s, matches!(self, Format::Percentage(_)))
                    .map(CellValue::Number)
                    .ok_or_else(|| format!("`{s}` is not a valid {self} value")),
                _ => unreachable!(),
            },
        }
    }
}

/// ISO dates, plus `MM/DD/YYYY` as exported by many UIs.
pub fn parse_date(s: &str) -> Option<NaiveDate> {
    let s = s.trim();
    NaiveDate::parse_from_str(s, "%Y-%m-%d")
        .or_else(|_| NaiveDate::parse_from_str(s, "%m/%d/%Y"))
        .ok()
}

/// Period-decimal, comma-thousands numbers with an optional currency sign,
/// a trailing `%` (divides by 100) and accounting-style parentheses.
pub fn parse_number(s: &str, percent_allowed: bool) -> Option<f64> {
    let mut t = s.trim();
    let mut negative = false;
    if let Some(inner) = t.strip_prefix('(').and_then(|r| r.strip_suffix(')')) {
        negative = true;
        t = inner.trim();
    }
    if let Some(rest) = t.strip_prefix('-') {
        negative = !negative;
        t = rest.trim_start();
    }
    t = t.trim_start_matches(['$', '€', '£', '¥']).trim_start();
    let mut scale = 1.0;
    if let Some(rest) = t.strip_suffix('%') {
        if !percent_allowed {
            return None;
        }
        scale = 0.01;
        t = rest.trim_end();
    }
    if t.is_empty() || !valid_grouping(t) {
        return None;
    }
    let cleaned: String = t.chars().filter(|c| *c != ',').collect();
    let n: f64 = cleaned.parse().ok().filter(|n: &f64| n.is_finite())?;
    // scale via decimal text so "7%" is exactly 0.07
    let n = if scale != 1.0 {
        format!("{n}e-2").parse().ok()?
    } else {
        n
    };
    Some(if negative { -n } else { n })
}

fn valid_grouping(t: &str) -> bool {
    if !t.contains(',') {
        return true;
    }
    let int_part = t.split('.').next().unwrap_or("");
    let groups: Vec<&str> = int_part.split(',').collect();
    groups[0].len() >= 1
        && groups[0].len() <= 3
        && groups[1..].iter().all(|g| g.len() == 3)
        && groups.iter().all(|g| g.bytes().all(|b| b.is_ascii_digit()))
}

impl fmt::Display for Format {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Format::Text => f.write_str("Text"),
            Format::Date => f.write_str("Date"),
            Format::Number(p) => write!(f, "Number[{p}]"),
            Format::Percentage(p) => write!(f, "Percentage[{p}]"),
            Format::Currency(p) => write!(f, "Currency[{p}]"),
        }
    }
}

impl FromStr for Format {
    type Err = FormatError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let err = || FormatError(s.to_string());
        match s {
            "Text" => return Ok(Format::Text),
            "Date" => return Ok(Format::Date),
            _ => {}
        }
        let (name, rest) = s.split_once('[').ok_or_else(err)?;
        let digit = rest.strip_suffix(']').ok_or_else(err)?;
        if digit.len() != 1 || !digit.as_bytes()[0].is_ascii_digit() {
            return Err(err());
        }
        let p = digit.as_bytes()[0] - b'0';
        match name {
            "Number" => Ok(Format::Number(p)),
            "Percentage" => Ok(Format::Percentage(p)),
            "Currency" => Ok(Format::Currency(p)),
            _ => Err(err()),
        }
    }
}
