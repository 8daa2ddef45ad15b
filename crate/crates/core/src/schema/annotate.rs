//! Data source and format of each field.

use crate::address::CellAddress;
use crate::format::Format;
use crate::formula::Evaluator;
use crate::value::CellValue;
use crate::workbook::{TableDecl, Workbook};

use super::tables::table_containing;
use super::{cs_sheet_id, CellId, FieldType, SchemaExtraction, SchemaOptions, SchemaRecord, APP_UI, UNSPECIFIED};

/// Fill `ex.records` from the classified cells and return warnings.
///
/// Records go sheet by sheet in visit order, inputs before outputs, each
/// in `(row, col)` order. Table members collapse into their anchor.
pub fn annotate(
    wb: &Workbook,
    ex: &mut SchemaExtraction,
    tables: &[TableDecl],
    options: &SchemaOptions,
) -> Vec<String> {
    let mut warnings = Vec::new();
    let mut records = Vec::new();
    let mut evaluator = Evaluator::new(wb);
    for sheet in &ex.sheets {
        let cs_sheet = cs_sheet_id(&wb.file_name, sheet);

        let mut fields: Vec<(CellAddress, Option<&TableDecl>)> = ex
            .inputs
            .iter()
            .filter(|a| &a.sheet == sheet && table_containing(tables, a).is_none())
            .map(|a| (a.clone(), None))
            .collect();
        fields.extend(tables.iter().filter(|t| &t.anchor.sheet == sheet).map(|t| (t.anchor.clone(), Some(t))));
        fields.sort_by_key(|(a, _)| (a.row, a.col));

        for (addr, table) in fields {
            let members = table.map_or_else(|| vec![addr.clone()], TableDecl::members);
            let cells: Vec<_> = members.iter().filter_map(|m| wb.cell(m)).collect();
            let data_source = cells
                .iter()
                .find_map(|c| c.annotations.data_source.clone())
                .or_else(|| options.compat_neighbor_annotations.then(|| neighbor_text(wb, &addr)).flatten())
                .unwrap_or_else(|| {
                    warnings.push(format!("{addr}: no data source; using `{UNSPECIFIED}`"));
                    UNSPECIFIED.to_string()
                });
            let format = match cells.iter().find_map(|c| c.annotations.format) {
                Some(f) => f,
                None => {
                    let sample = cells
                        .iter()
                        .filter_map(|c| c.literal())
                        .find(|v| !v.is_blank())
                        .cloned()
                        .unwrap_or_default();
                    let f = infer_format(&sample);
                    warnings.push(format!("{addr}: no format; inferred {f}"));
                    f
                }
            };
            records.push(SchemaRecord {
                cs_sheet: cs_sheet.clone(),
                field_type: FieldType::Input,
                cell_id: CellId::at(&addr, table.map(|t| t.direction)),
                data_source,
                format,
            });
        }

        for addr in ex.outputs.iter().filter(|a| &a.sheet == sheet) {
            let annotated = wb.cell(addr).and_then(|c| c.annotations.format);
            let format = annotated.unwrap_or_else(|| {
                let f = infer_format(&evaluator.evaluate(addr));
                warnings.push(format!("{addr}: no format; inferred {f}"));
                f
            });
            records.push(SchemaRecord {
                cs_sheet: cs_sheet.clone(),
                field_type: FieldType::Output,
                cell_id: CellId::at(addr, None),
                data_source: APP_UI.to_string(),
                format,
            });
        }
    }
    ex.records = records;
    warnings
}

/// Default format for a sample value: numbers get two decimals.
pub fn infer_format(sample: &CellValue) -> Format {
    match sample {
        CellValue::Number(_) => Format::Number(2),
        CellValue::Date(_) => Format::Date,
        _ => Format::Text,
    }
}

fn neighbor_text(wb: &Workbook, addr: &CellAddress) -> Option<String> {
    let right = addr.offset(1, 0)?;
    match wb.cell(&right)?.literal()? {
        CellValue::Text(t) if !t.trim().is_empty() => Some(t.trim().to_string()),
        _ => None,
    }
}
