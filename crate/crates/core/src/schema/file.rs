//! The schema CSV.
//!
//! Five rows, each starting with its label; one column per record:
//!
//! ```text
//! CS Sheet,wc.wbk$Main,wc.wbk$Main
//! Field Type,Input,Output
//! Cell ID,B3,H2
//! Data Source,Database,App UI
//! Format,Number[2],Currency[2]
//! ```
//!
//! The parser also accepts one record per row under a header of the same
//! labels.

use std::fs;
use std::path::Path;

use crate::format::Format;

use super::{FieldType, SchemaError, SchemaExtraction, SchemaFormatError, SchemaRecord, APP_UI};

pub const LABELS: [&str; 5] = ["CS Sheet", "Field Type", "Cell ID", "Data Source", "Format"];

pub fn schema_to_csv(records: &[SchemaRecord]) -> String {
    let mut w = csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .flexible(true)
        .from_writer(Vec::new());
    let rows: [Box<dyn Fn(&SchemaRecord) -> String>; 5] = [
        Box::new(|r| r.cs_sheet.clone()),
        Box::new(|r| r.field_type.to_string()),
        Box::new(|r| r.cell_id.to_string()),
        Box::new(|r| r.data_source.clone()),
        Box::new(|r| r.format.to_string()),
    ];
    for (label, get) in LABELS.iter().zip(&rows) {
        let mut row = vec![label.to_string()];
        row.extend(records.iter().map(get));
        w.write_record(&row).expect("writing to memory");
    }
    String::from_utf8(w.into_inner().expect("writing to memory")).expect("utf-8 input")
}

pub fn emit_schema(ex: &SchemaExtraction, path: impl AsRef<Path>) -> Result<(), SchemaError> {
    let path = path.as_ref();
    fs::write(path, schema_to_csv(&ex.records)).map_err(|source| SchemaError::Io {
        path: path.to_path_buf(),
        source,
    })
}

pub fn parse_schema(path: impl AsRef<Path>) -> Result<SchemaExtraction, SchemaError> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|source| SchemaError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    Ok(parse_schema_str(&text)?)
}

fn ferr(location: impl Into<String>, message: impl Into<String>) -> SchemaFormatError {
    SchemaFormatError {
        location: location.into(),
        message: message.into(),
    }
}

pub fn parse_schema_str(text: &str) -> Result<SchemaExtraction, SchemaFormatError> {
    let text = text.strip_prefix('\u{feff}').unwrap_or(text);
    let rows: Vec<Vec<String>> = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .from_reader(text.as_bytes())
        .records()
        .map(|r| r.map(|r| r.iter().map(str::to_string).collect()))
        .collect::<Result<_, _>>()
        .map_err(|e| ferr("input", e.to_string()))?;

    let record_per_row = rows.first().is_some_and(|r| r.iter().map(String::as_str).eq(LABELS));
    let mut records = Vec::new();
    if record_per_row {
        for (i, row) in rows.iter().enumerate().skip(1) {
            let loc = format!("line {}", i + 1);
            if row.len() != LABELS.len() {
                return Err(ferr(loc, format!("expected {} fields, found {}", LABELS.len(), row.len())));
            }
            records.push(parse_record(&loc, row)?);
        }
    } else {
        if rows.len() != LABELS.len() {
            return Err(ferr("input", format!("expected {} rows, found {}", LABELS.len(), rows.len())));
        }
        for (i, (row, label)) in rows.iter().zip(LABELS).enumerate() {
            if row[0] != label {
                return Err(ferr(format!("line {}", i + 1), format!("expected label `{label}`, found `{}`", row[0])));
            }
            if row.len() != rows[0].len() {
                return Err(ferr(format!("line {}", i + 1), "ragged row"));
            }
        }
        for col in 1..rows[0].len() {
            let fields: Vec<String> = rows.iter().map(|r| r[col].clone()).collect();
            records.push(parse_record(&format!("column {}", col + 1), &fields)?);
        }
    }
    Ok(SchemaExtraction::from_records(records))
}

fn parse_record(loc: &str, f: &[String]) -> Result<SchemaRecord, SchemaFormatError> {
    let cs_sheet = f[0].clone();
    match cs_sheet.split_once('$') {
        Some((file, tab)) if !file.is_empty() && !tab.is_empty() && !tab.contains('$') => {}
        _ => return Err(ferr(loc, format!("CS Sheet `{cs_sheet}` must be `file$tab`"))),
    }
    let field_type: FieldType = f[1].parse().map_err(|m: String| ferr(loc, m))?;
    let cell_id = f[2].parse().map_err(|m: String| ferr(loc, m))?;
    let data_source = f[3].clone();
    if field_type == FieldType::Output && data_source != APP_UI {
        return Err(ferr(loc, format!("output data source must be `{APP_UI}`")));
    }
    let format: Format = f[4].parse().map_err(|e: crate::format::FormatError| ferr(loc, e.to_string()))?;
    Ok(SchemaRecord {
        cs_sheet,
        field_type,
        cell_id,
        data_source,
        format,
    })
}
