//! The `.wbk.json` workbook document.
//!
//! ```json
//! { "file": "wc.wbk",
//!   "sheets": [ { "name": "Main",
//!                 "cells": { "B3": {"v": 100, "src": "Database"},
//!                            "H3": {"f": "=H10-B3-H11"} } } ],
//!   "tables": [ {"anchor": "Main!K3", "direction": "RowWise", "capacity": 5} ] }
//! ```
//!
//! Saving produces the canonical form: keys in the order above, cells in
//! row-major order, integral numbers without a fraction, two-space indent
//! and a trailing newline.

use std::fs;
use std::path::Path;

use serde_json::{json, Map, Number, Value};

use crate::address::{a1_to_address, parse_a1_part};
use crate::format::Format;
use crate::value::{CellValue, ErrorCode};

use super::{Annotations, CellContent, Direction, TableDecl, Workbook, WorkbookError};

fn perr(location: impl Into<String>, message: impl Into<String>) -> WorkbookError {
    WorkbookError::Parse {
        location: location.into(),
        message: message.into(),
    }
}

/// JSON encoding of a literal value. Blank encodes as `null`.
pub fn value_to_json(v: &CellValue) -> Value {
    match v {
        CellValue::Number(n) => number_json(*n),
        CellValue::Text(s) => Value::String(s.clone()),
        CellValue::Boolean(b) => Value::Bool(*b),
        CellValue::Date(d) => json!({ "d": d.format("%Y-%m-%d").to_string() }),
        CellValue::Blank => Value::Null,
        CellValue::Error(e) => json!({ "e": e.as_str() }),
    }
}

fn number_json(n: f64) -> Value {
    if n.fract() == 0.0 && n.abs() < 1e15 {
        Value::Number(Number::from(n as i64))
    } else {
        Number::from_f64(n).map_or(Value::Null, Value::Number)
    }
}

pub fn value_from_json(v: &Value) -> Result<CellValue, String> {
    match v {
        Value::Null => Ok(CellValue::Blank),
        Value::Bool(b) => Ok(CellValue::Boolean(*b)),
        Value::Number(n) => n
            .as_f64()
            .filter(|n| n.is_finite())
            .map(CellValue::Number)
            .ok_or_else(|| format!("number {n} out of range")),
        Value::String(s) => Ok(CellValue::Text(s.clone())),
        Value::Object(o) if o.len() == 1 && o.contains_key("d") => {
            let s = o["d"].as_str().ok_or("date literal must be a string")?;
            chrono::NaiveDate::parse_from_str(s, "%Y-%m-%d")
                .map(CellValue::Date)
                .map_err(|_| format!("invalid date `{s}` (expected YYYY-MM-DD)"))
        }
        Value::Object(o) if o.len() == 1 && o.contains_key("e") => o["e"]
            .as_str()
            .and_then(ErrorCode::parse)
            .map(CellValue::Error)
            .ok_or_else(|| "invalid error literal".to_string()),
        other => Err(format!("unsupported literal {other}")),
    }
}

pub fn load_workbook(path: impl AsRef<Path>) -> Result<Workbook, WorkbookError> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|source| WorkbookError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    Workbook::from_json_str(&text)
}

pub fn save_workbook(wb: &Workbook, path: impl AsRef<Path>) -> Result<(), WorkbookError> {
    let path = path.as_ref();
    fs::write(path, wb.to_canonical_json()).map_err(|source| WorkbookError::Io {
        path: path.to_path_buf(),
        source,
    })
}

impl Workbook {
    pub fn from_json_str(text: &str) -> Result<Workbook, WorkbookError> {
        let doc: Value = serde_json::from_str(text)
            .map_err(|e| perr(format!("line {} column {}", e.line(), e.column()), e.to_string()))?;
        Workbook::from_json(&doc)
    }

    pub fn from_json(doc: &Value) -> Result<Workbook, WorkbookError> {
        let root = doc.as_object().ok_or_else(|| perr("document", "expected an object"))?;
        let file = root
            .get("file")
            .and_then(Value::as_str)
            .ok_or_else(|| perr("file", "missing string field `file`"))?;
        let mut wb = Workbook::new(file)?;
        let sheets = root
            .get("sheets")
            .and_then(Value::as_array)
            .ok_or_else(|| perr("sheets", "missing array field `sheets`"))?;
        if sheets.is_empty() {
            return Err(WorkbookError::EmptyWorkbook);
        }
        // sheets first so cross-sheet references resolve regardless of order
        for (i, s) in sheets.iter().enumerate() {
            let name = s
                .get("name")
                .and_then(Value::as_str)
                .ok_or_else(|| perr(format!("sheets[{i}]"), "missing string field `name`"))?;
            wb.add_sheet(name)?;
        }
        for (i, s) in sheets.iter().enumerate() {
            let name = wb.sheets[i].name.clone();
            let Some(cells) = s.get("cells") else { continue };
            let cells = cells
                .as_object()
                .ok_or_else(|| perr(&name, "`cells` must be an object"))?;
            for (key, spec) in cells {
                wb.load_cell(&name, key, spec)?;
            }
        }
        if let Some(tables) = root.get("tables") {
            let tables = tables
                .as_array()
                .ok_or_else(|| perr("tables", "`tables` must be an array"))?;
            let default_sheet = wb.sheets[0].name.clone();
            for (i, t) in tables.iter().enumerate() {
                let loc = format!("tables[{i}]");
                let anchor = t
                    .get("anchor")
                    .and_then(Value::as_str)
                    .ok_or_else(|| perr(&loc, "missing `anchor`"))?;
                let anchor = a1_to_address(anchor, &default_sheet)
                    .map_err(|e| perr(&loc, e.to_string()))?;
                let anchor = wb.resolve(&anchor)?;
                let direction: Direction = t
                    .get("direction")
                    .and_then(Value::as_str)
                    .ok_or_else(|| perr(&loc, "missing `direction`"))?
                    .parse()
                    .map_err(|e: String| perr(&loc, e))?;
                let capacity = t
                    .get("capacity")
                    .and_then(Value::as_u64)
                    .filter(|c| *c >= 1 && *c <= u32::MAX as u64)
                    .ok_or_else(|| perr(&loc, "`capacity` must be a positive integer"))?;
                wb.tables.push(TableDecl {
                    anchor,
                    direction,
                    capacity: capacity as u32,
                });
            }
        }
        Ok(wb)
    }

    fn load_cell(&mut self, sheet: &str, key: &str, spec: &Value) -> Result<(), WorkbookError> {
        let (col, row) = parse_a1_part(key)
            .filter(|_| !key.contains('!'))
            .ok_or_else(|| perr(format!("{sheet}!{key}"), "invalid cell key"))?;
        let addr = crate::address::CellAddress::new(sheet, col, row);
        let loc = addr.qualified();
        let obj = spec
            .as_object()
            .ok_or_else(|| perr(&loc, "cell must be an object"))?;
        for k in obj.keys() {
            if !matches!(k.as_str(), "v" | "f" | "src" | "fmt") {
                return Err(perr(&loc, format!("unknown cell field `{k}`")));
            }
        }
        let content = match (obj.get("v"), obj.get("f")) {
            (Some(_), Some(_)) => {
                return Err(perr(&loc, "cell has both a literal and a formula"))
            }
            (Some(v), None) => CellContent::Literal(value_from_json(v).map_err(|m| perr(&loc, m))?),
            (None, Some(f)) => {
                let f = f.as_str().ok_or_else(|| perr(&loc, "formula must be a string"))?;
                CellContent::Formula(self.compile(&addr, f)?)
            }
            (None, None) => CellContent::Literal(CellValue::Blank),
        };
        let data_source = match obj.get("src") {
            None => None,
            Some(Value::String(s)) => Some(s.clone()),
            Some(_) => return Err(perr(&loc, "`src` must be a string")),
        };
        let format = match obj.get("fmt") {
            None => None,
            Some(Value::String(s)) => {
                Some(s.parse::<Format>().map_err(|e| perr(&loc, e.to_string()))?)
            }
            Some(_) => return Err(perr(&loc, "`fmt` must be a string")),
        };
        let annotations = Annotations {
            data_source,
            format,
        };
        if matches!(content, CellContent::Literal(CellValue::Blank)) && annotations.is_empty() {
            return Ok(());
        }
        self.put(&addr, content)?;
        self.set_annotations(
            &addr,
            annotations,
        )
    }

    pub fn to_json(&self) -> Value {
        let mut root = Map::new();
        root.insert("file".into(), Value::String(self.file_name.clone()));
        let sheets: Vec<Value> = self
            .sheets
            .iter()
            .map(|s| {
                let mut cells = Map::new();
                for cell in s.cells.values() {
                    let mut c = Map::new();
                    match &cell.content {
                        CellContent::Formula(f) => {
                            c.insert("f".into(), Value::String(f.source.clone()));
                        }
                        CellContent::Literal(CellValue::Blank) => {}
                        CellContent::Literal(v) => {
                            c.insert("v".into(), value_to_json(v));
                        }
                    }
                    if let Some(src) = &cell.annotations.data_source {
                        c.insert("src".into(), Value::String(src.clone()));
                    }
                    if let Some(fmt) = &cell.annotations.format {
                        c.insert("fmt".into(), Value::String(fmt.to_string()));
                    }
                    if !c.is_empty() {
                        cells.insert(cell.address.a1(), Value::Object(c));
                    }
                }
                json!({ "name": s.name, "cells": cells })
            })
            .collect();
        root.insert("sheets".into(), Value::Array(sheets));
        if !self.tables.is_empty() {
            let tables: Vec<Value> = self
                .tables
                .iter()
                .map(|t| {
                    json!({
                        "anchor": t.anchor.qualified(),
                        "direction": t.direction.as_str(),
                        "capacity": t.capacity,
                    })
                })
                .collect();
            root.insert("tables".into(), Value::Array(tables));
        }
        Value::Object(root)
    }

    pub fn to_canonical_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(&self.to_json()).expect("serializable");
        s.push('\n');
        s
    }
}
