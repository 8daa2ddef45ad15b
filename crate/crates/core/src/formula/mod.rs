//! Formula parsing, reference extraction and evaluation.

mod ast;
mod eval;
mod functions;
mod lexer;
mod parser;

use std::collections::BTreeSet;

use thiserror::Error;

use crate::address::CellAddress;

pub use ast::{BinaryOp, Expr, RangeRef, RefNode, UnaryOp};
pub use eval::{evaluate_cell, evaluate_formula, recompute_all, Diagnostic, Evaluator};
pub use parser::{parse_formula, VOLATILE};

/// Names of the built-in functions.
pub const FUNCTIONS: &[&str] = &[
    "SUM", "AVERAGE", "MIN", "MAX", "COUNT", "IF", "AND", "OR", "NOT", "ABS", "ROUND", "ROUNDUP",
    "ROUNDDOWN", "VLOOKUP", "INDEX", "MATCH", "DATE", "YEAR", "MONTH", "DAY",
];

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("{message} (at offset {position})")]
pub struct ParseError {
    /// Byte offset into the formula text.
    pub position: usize,
    pub message: String,
}

/// Cells a formula refers to, plus the other sheets those cells live on.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct RefSet {
    pub cells: BTreeSet<CellAddress>,
    pub sheets: BTreeSet<String>,
}

/// Collect referenced cells, expanding ranges, and the sheets other than
/// `containing_sheet` they are on.
pub fn extract_refs(ast: &Expr, containing_sheet: &str) -> RefSet {
    let mut set = RefSet::default();
    ast.walk_refs(&mut |node| match node {
        RefNode::Cell(a) => {
            set.cells.insert(a.clone());
        }
        RefNode::Range(r) => set.cells.extend(r.cells()),
    });
    let home = containing_sheet.to_lowercase();
    set.sheets = set
        .cells
        .iter()
        .filter(|a| a.sheet.to_lowercase() != home)
        .map(|a| a.sheet.clone())
        .collect();
    set
}
