//! Schema extraction: which cells of a workbook are inputs and outputs,
//! where their values come from, and how they are formatted.
//!
//! ```no_run
//! use calcspec::schema::{emit_schema, generate_schema, SchemaOptions};
//!
//! let wb = calcspec::load_workbook("wc.wbk.json")?;
//! let generated = generate_schema(&wb, "Main", &SchemaOptions::default())?;
//! emit_schema(&generated.extraction, "wc.schema.csv")?;
//! # Ok::<(), Box<dyn std::error::Error>>(())
//! ```

mod annotate;
mod file;
mod graph;
mod tables;

use std::fmt;
use std::path::PathBuf;
use std::str::FromStr;

use thiserror::Error;

use crate::address::{column_name, parse_a1_part, CellAddress};
use crate::format::Format;
use crate::workbook::{Direction, TableDecl, Workbook};

pub use annotate::{annotate, infer_format};
pub use file::{emit_schema, parse_schema, parse_schema_str, schema_to_csv, LABELS};
pub use graph::{build_graph, classify, crawl_referred_sheets, DependencyGraph};
pub use tables::{detect_tables, table_containing};

/// Data source of every output field.
pub const APP_UI: &str = "App UI";
/// Data source of an input with no annotation.
pub const UNSPECIFIED: &str = "Unspecified";

#[derive(Debug, Error)]
pub enum SchemaError {
    #[error("unknown sheet `{0}`")]
    UnknownSheet(String),
    #[error("formula references unknown sheet `{0}`")]
    UnresolvedSheet(String),
    #[error("cell {0} belongs to tables growing in different directions")]
    ConflictingTable(CellAddress),
    #[error(transparent)]
    Format(#[from] SchemaFormatError),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("malformed schema at {location}: {message}")]
pub struct SchemaFormatError {
    pub location: String,
    pub message: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum FieldType {
    Input,
    Output,
}

impl fmt::Display for FieldType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            FieldType::Input => "Input",
            FieldType::Output => "Output",
        })
    }
}

impl FromStr for FieldType {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "Input" => Ok(FieldType::Input),
            "Output" => Ok(FieldType::Output),
            other => Err(format!("unknown field type `{other}`")),
        }
    }
}

/// `B3`, or `B5RowWise` for the anchor of a table.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct CellId {
    pub col: u32,
    pub row: u32,
    pub table: Option<Direction>,
}

impl CellId {
    pub fn at(addr: &CellAddress, table: Option<Direction>) -> Self {
        CellId {
            col: addr.col,
            row: addr.row,
            table,
        }
    }

    pub fn a1(&self) -> String {
        format!("{}{}", column_name(self.col), self.row)
    }
}

impl fmt::Display for CellId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.a1())?;
        if let Some(d) = self.table {
            f.write_str(d.as_str())?;
        }
        Ok(())
    }
}

impl FromStr for CellId {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        let (a1, table) = [Direction::RowWise, Direction::ColumnWise]
            .into_iter()
            .find_map(|d| s.strip_suffix(d.as_str()).map(|rest| (rest, Some(d))))
            .unwrap_or((s, None));
        let (col, row) = parse_a1_part(a1).ok_or_else(|| format!("invalid cell id `{s}`"))?;
        Ok(CellId { col, row, table })
    }
}

/// One schema field.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SchemaRecord {
    /// `file$tab`.
    pub cs_sheet: String,
    pub field_type: FieldType,
    pub cell_id: CellId,
    pub data_source: String,
    pub format: Format,
}

impl SchemaRecord {
    pub fn tab(&self) -> &str {
        self.cs_sheet.split_once('$').map_or(&self.cs_sheet, |(_, tab)| tab)
    }

    pub fn file(&self) -> &str {
        self.cs_sheet.split_once('$').map_or("", |(file, _)| file)
    }

    pub fn address(&self) -> CellAddress {
        CellAddress::new(self.tab(), self.cell_id.col, self.cell_id.row)
    }

    /// True for table anchors, which take a list of values.
    pub fn is_table(&self) -> bool {
        self.cell_id.table.is_some()
    }

    /// `file$tab!B3RowWise`, the key bindings and reports use.
    pub fn key(&self) -> String {
        format!("{}!{}", self.cs_sheet, self.cell_id)
    }
}

pub fn cs_sheet_id(file: &str, tab: &str) -> String {
    format!("{file}${tab}")
}

/// Result of schema extraction.
///
/// `inputs` and `outputs` hold every classified cell, table members
/// included; `records` hold one entry per field, so a table appears once,
/// under its anchor.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct SchemaExtraction {
    /// Visited sheets, root first.
    pub sheets: Vec<String>,
    pub referred_sheets: Vec<String>,
    pub inputs: Vec<CellAddress>,
    pub outputs: Vec<CellAddress>,
    pub records: Vec<SchemaRecord>,
}

impl SchemaExtraction {
    /// Rebuild an extraction from its records alone, as a parsed schema
    /// file does.
    pub fn from_records(records: Vec<SchemaRecord>) -> Self {
        let mut sheets: Vec<String> = Vec::new();
        for r in &records {
            if !sheets.iter().any(|s| s == r.tab()) {
                sheets.push(r.tab().to_string());
            }
        }
        let of = |t: FieldType| records.iter().filter(|r| r.field_type == t).map(SchemaRecord::address).collect();
        SchemaExtraction {
            referred_sheets: sheets.iter().skip(1).cloned().collect(),
            inputs: of(FieldType::Input),
            outputs: of(FieldType::Output),
            sheets,
            records,
        }
    }

    pub fn input_records(&self) -> impl Iterator<Item = &SchemaRecord> {
        self.records.iter().filter(|r| r.field_type == FieldType::Input)
    }

    pub fn output_records(&self) -> impl Iterator<Item = &SchemaRecord> {
        self.records.iter().filter(|r| r.field_type == FieldType::Output)
    }

    /// Root sheet name, if anything was visited.
    pub fn root(&self) -> Option<&str> {
        self.sheets.first().map(String::as_str)
    }
}

#[derive(Debug, Clone, Default)]
pub struct SchemaOptions {
    /// Read a missing data source from the text cell right of an input.
    pub compat_neighbor_annotations: bool,
}

#[derive(Debug, Clone)]
pub struct GeneratedSchema {
    pub extraction: SchemaExtraction,
    pub tables: Vec<TableDecl>,
    pub warnings: Vec<String>,
}

/// Crawl, detect tables and annotate in one go.
pub fn generate_schema(
    wb: &Workbook,
    root: &str,
    options: &SchemaOptions,
) -> Result<GeneratedSchema, SchemaError> {
    let mut extraction = crawl_referred_sheets(wb, root)?;
    let tables = detect_tables(wb, &extraction)?;
    let warnings = annotate(wb, &mut extraction, &tables, options);
    for w in &warnings {
        log::warn!("{w}");
    }
    Ok(GeneratedSchema {
        extraction,
        tables,
        warnings,
    })
}
