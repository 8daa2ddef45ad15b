//! Cell values and the coercions the formula engine applies to them.

use std::fmt;

use chrono::{Duration, NaiveDate};

/// Spreadsheet error codes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum ErrorCode {
    Div0,
    Ref,
    Value,
    Name,
    Cycle,
}

impl ErrorCode {
    pub fn as_str(self) -> &'static str {
        match self {
            ErrorCode::Div0 => "#DIV/0!",
            ErrorCode::Ref => "#REF!",
            ErrorCode::Value => "#VALUE!",
            ErrorCode::Name => "#NAME?",
            ErrorCode::Cycle => "#CYCLE!",
        }
    }

    pub fn parse(s: &str) -> Option<ErrorCode> {
        Some(match s {
            "#DIV/0!" => ErrorCode::Div0,
            "#REF!" => ErrorCode::Ref,
            "#VALUE!" => ErrorCode::Value,
            "#NAME?" => ErrorCode::Name,
            "#CYCLE!" => ErrorCode::Cycle,
            _ => return None,
        })
    }
}

impl fmt::Display for ErrorCode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub enum CellValue {
    Number(f64),
    Text(String),
    Boolean(bool),
    Date(NaiveDate),
    #[default]
    Blank,
    Error(ErrorCode),
}

fn epoch() -> NaiveDate {
    NaiveDate::from_ymd_opt(1899, 12, 30).expect("valid epoch")
}

/// Days since 1899-12-30. The 1900 leap-year quirk is not reproduced.
pub fn date_to_serial(d: NaiveDate) -> f64 {
    (d - epoch()).num_days() as f64
}

/// Calendar date for a serial number; the fractional part is dropped.
pub fn serial_to_date(serial: f64) -> Option<NaiveDate> {
    if !serial.is_finite() || serial.abs() > 3_000_000.0 {
        return None;
    }
    epoch().checked_add_signed(Duration::days(serial.floor() as i64))
}

/// Shortest decimal text that round-trips the double; integral values print
/// without a fractional part.
pub fn number_to_text(n: f64) -> String {
    if n == 0.0 {
        return "0".into();
    }
    format!("{n}")
}

impl CellValue {
    pub fn text(s: impl Into<String>) -> Self {
        CellValue::Text(s.into())
    }

    pub fn is_blank(&self) -> bool {
        matches!(self, CellValue::Blank)
    }

    pub fn is_error(&self) -> bool {
        matches!(self, CellValue::Error(_))
    }

    pub fn error(&self) -> Option<ErrorCode> {
        match self {
            CellValue::Error(e) => Some(*e),
            _ => None,
        }
    }

    /// Arithmetic coercion: blank → 0, booleans → 1/0, dates → serial,
    /// numeric text parsed.
    pub fn to_number(&self) -> Result<f64, ErrorCode> {
        match self {
            CellValue::Number(n) => Ok(*n),
            CellValue::Boolean(b) => Ok(if *b { 1.0 } else { 0.0 }),
            CellValue::Blank => Ok(0.0),
            CellValue::Date(d) => Ok(date_to_serial(*d)),
            CellValue::Text(s) => {
                let t = s.trim();
                if t.is_empty() {
                    return Err(ErrorCode::Value);
                }
                t.parse::<f64>()
                    .ok()
                    .filter(|n| n.is_finite())
                    .ok_or(ErrorCode::Value)
            }
            CellValue::Error(e) => Err(*e),
        }
    }

    /// Text coercion used by `&` and text comparisons.
    pub fn to_text(&self) -> Result<String, ErrorCode> {
        match self {
            CellValue::Number(n) => Ok(number_to_text(*n)),
            CellValue::Text(s) => Ok(s.clone()),
            CellValue::Boolean(b) => Ok(if *b { "TRUE" } else { "FALSE" }.into()),
            CellValue::Date(d) => Ok(d.format("%Y-%m-%d").to_string()),
            CellValue::Blank => Ok(String::new()),
            CellValue::Error(e) => Err(*e),
        }
    }

    pub fn to_bool(&self) -> Result<bool, ErrorCode> {
        match self {
            CellValue::Boolean(b) => Ok(*b),
            CellValue::Number(n) => Ok(*n != 0.0),
            CellValue::Date(d) => Ok(date_to_serial(*d) != 0.0),
            CellValue::Blank => Ok(false),
            CellValue::Text(s) => {
                if s.eq_ignore_ascii_case("TRUE") {
                    Ok(true)
                } else if s.eq_ignore_ascii_case("FALSE") {
                    Ok(false)
                } else {
                    Err(ErrorCode::Value)
                }
            }
            CellValue::Error(e) => Err(*e),
        }
    }

    pub fn to_date(&self) -> Result<NaiveDate, ErrorCode> {
        match self {
            CellValue::Date(d) => Ok(*d),
            CellValue::Text(s) => NaiveDate::parse_from_str(s.trim(), "%Y-%m-%d")
                .map_err(|_| ErrorCode::Value),
            CellValue::Error(e) => Err(*e),
            other => serial_to_date(other.to_number()?).ok_or(ErrorCode::Value),
        }
    }
}

impl fmt::Display for CellValue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CellValue::Number(n) => f.write_str(&number_to_text(*n)),
            CellValue::Text(s) => f.write_str(s),
            CellValue::Boolean(b) => f.write_str(if *b { "TRUE" } else { "FALSE" }),
            CellValue::Date(d) => write!(f, "{}", d.format("%Y-%m-%d")),
            CellValue::Blank => Ok(()),
            CellValue::Error(e) => f.write_str(e.as_str()),
        }
    }
}
