//! Input tables: cells filled from a list of values rather than one value.

use std::collections::{BTreeMap, BTreeSet, HashMap};

use crate::address::CellAddress;
use crate::formula::{RangeRef, RefNode};
use crate::workbook::{Direction, TableDecl, Workbook};

use super::{SchemaError, SchemaExtraction};

/// Tables among the extraction's inputs.
///
/// Declared tables on visited sheets that hold at least one input come
/// first. Any other run of two or more adjacent inputs inside a single-row
/// or single-column range of some formula becomes a table too; vertical
/// ranges grow `RowWise`, horizontal ones `ColumnWise`, and the run length
/// is the capacity. Overlapping runs along the same line are merged.
pub fn detect_tables(wb: &Workbook, ex: &SchemaExtraction) -> Result<Vec<TableDecl>, SchemaError> {
    let inputs: BTreeSet<&CellAddress> = ex.inputs.iter().collect();
    let visited = |sheet: &str| ex.sheets.iter().any(|s| s.eq_ignore_ascii_case(sheet));

    let mut tables = Vec::new();
    let mut claimed: HashMap<CellAddress, Direction> = HashMap::new();
    for decl in &wb.tables {
        if !visited(&decl.anchor.sheet) {
            continue;
        }
        let members = decl.members();
        if !members.iter().any(|m| inputs.contains(m)) {
            log::warn!("declared table at {} holds no input cell; ignored", decl.anchor);
            continue;
        }
        for m in members {
            claim(&mut claimed, m, decl.direction)?;
        }
        tables.push(decl.clone());
    }

    // (sheet, fixed coordinate, direction) -> [(first, last)] along the line
    let mut runs: BTreeMap<(String, u32, Direction), Vec<(u32, u32)>> = BTreeMap::new();
    for sheet in &ex.sheets {
        let Some(sh) = wb.sheet(sheet) else { continue };
        for cell in sh.cells() {
            let Some(f) = cell.formula() else { continue };
            f.ast.walk_refs(&mut |node| {
                if let RefNode::Range(r) = node {
                    collect_runs(r, &inputs, &claimed, &mut runs);
                }
            });
        }
    }

    let mut heuristic = Vec::new();
    for ((sheet, line, direction), mut spans) in runs {
        spans.sort_unstable();
        let mut merged: Vec<(u32, u32)> = Vec::new();
        for (a, b) in spans {
            match merged.last_mut() {
                Some(last) if a <= last.1 => last.1 = last.1.max(b),
                _ => merged.push((a, b)),
            }
        }
        for (a, b) in merged {
            let anchor = match direction {
                Direction::RowWise => CellAddress::new(sheet.clone(), line, a),
                Direction::ColumnWise => CellAddress::new(sheet.clone(), a, line),
            };
            heuristic.push(TableDecl {
                anchor,
                direction,
                capacity: b - a + 1,
            });
        }
    }
    for t in &heuristic {
        for m in t.members() {
            claim(&mut claimed, m, t.direction)?;
        }
    }
    tables.extend(heuristic);
    tables.sort_by(|a, b| a.anchor.cmp(&b.anchor));
    Ok(tables)
}

fn claim(
    claimed: &mut HashMap<CellAddress, Direction>,
    cell: CellAddress,
    direction: Direction,
) -> Result<(), SchemaError> {
    match claimed.get(&cell) {
        Some(d) if *d != direction => Err(SchemaError::ConflictingTable(cell)),
        _ => {
            claimed.insert(cell, direction);
            Ok(())
        }
    }
}

fn collect_runs(
    r: &RangeRef,
    inputs: &BTreeSet<&CellAddress>,
    claimed: &HashMap<CellAddress, Direction>,
    runs: &mut BTreeMap<(String, u32, Direction), Vec<(u32, u32)>>,
) {
    let (direction, line) = match (r.width(), r.height()) {
        (1, h) if h >= 2 => (Direction::RowWise, r.start.col),
        (w, 1) if w >= 2 => (Direction::ColumnWise, r.start.row),
        _ => return,
    };
    let pos = |a: &CellAddress| match direction {
        Direction::RowWise => a.row,
        Direction::ColumnWise => a.col,
    };
    let mut run: Option<(u32, u32)> = None;
    let mut flush = |run: &mut Option<(u32, u32)>| {
        if let Some((a, b)) = run.take() {
            if b > a {
                runs.entry((r.sheet().to_string(), line, direction))
                    .or_default()
                    .push((a, b));
            }
        }
    };
    for cell in r.cells() {
        if inputs.contains(&cell) && !claimed.contains_key(&cell) {
            let p = pos(&cell);
            run = Some(run.map_or((p, p), |(a, _)| (a, p)));
        } else {
            flush(&mut run);
        }
    }
    flush(&mut run);
}

/// Table whose members include `addr`, if any.
pub fn table_containing<'a>(tables: &'a [TableDecl], addr: &CellAddress) -> Option<&'a TableDecl> {
    tables.iter().find(|t| {
        let (dc, dr) = t.direction.step();
        let along = |a: u32, b: u32| b >= a && b - a < t.capacity;
        t.anchor.sheet == addr.sheet
            && match (dc, dr) {
                (0, _) => addr.col == t.anchor.col && along(t.anchor.row, addr.row),
                _ => addr.row == t.anchor.row && along(t.anchor.col, addr.col),
            }
    })
}
