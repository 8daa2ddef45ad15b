//! In-memory calculation workbook: named sheets holding sparse grids of
//! literal and formula cells, plus optional table declarations.

mod io;

use std::borrow::Cow;
use std::collections::{BTreeMap, HashMap};
use std::fmt;
use std::path::PathBuf;
use std::str::FromStr;
use std::sync::Arc;

use thiserror::Error;

use crate::address::{a1_to_address, CellAddress};
use crate::format::Format;
use crate::formula::{parse_formula, Expr};
use crate::value::CellValue;

pub use io::{load_workbook, save_workbook, value_from_json, value_to_json};

/// Characters that may not appear in a sheet or file name; `$` separates
/// file and tab in schema sheet identifiers.
const FORBIDDEN_NAME_CHARS: &[char] = &['$', '!', '\'', '[', ']', ':', '\\', '/', '?', '*'];

#[derive(Debug, Error)]
pub enum WorkbookError {
    #[error("parse error at {location}: {message}")]
    Parse { location: String, message: String },
    #[error("formula references unknown sheet `{0}`")]
    UnresolvedSheet(String),
    #[error("unknown sheet `{0}`")]
    UnknownSheet(String),
    #[error("workbook has no sheets")]
    EmptyWorkbook,
    #[error("duplicate sheet name `{0}`")]
    DuplicateSheet(String),
    #[error("invalid sheet or file name `{0}`")]
    InvalidName(String),
    #[error("cell {0} holds a formula and cannot be overwritten with an input value")]
    OverwriteFormula(CellAddress),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

/// Direction a table grows in: `RowWise` fills downward, `ColumnWise`
/// fills rightward.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Direction {
    RowWise,
    ColumnWise,
}

impl Direction {
    pub fn as_str(self) -> &'static str {
        match self {
            Direction::RowWise => "RowWise",
            Direction::ColumnWise => "ColumnWise",
        }
    }

    /// `(dcol, drow)` step from one table member to the next.
    pub fn step(self) -> (i64, i64) {
        match self {
            Direction::RowWise => (0, 1),
            Direction::ColumnWise => (1, 0),
        }
    }
}

impl fmt::Display for Direction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Direction {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "RowWise" => Ok(Direction::RowWise),
            "ColumnWise" => Ok(Direction::ColumnWise),
            other => Err(format!("unknown table direction `{other}`")),
        }
    }
}

/// Explicitly declared input table.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TableDecl {
    pub anchor: CellAddress,
    pub direction: Direction,
    pub capacity: u32,
}

impl TableDecl {
    pub fn members(&self) -> Vec<CellAddress> {
        let (dc, dr) = self.direction.step();
        (0..self.capacity as i64)
            .filter_map(|i| self.anchor.offset(dc * i, dr * i))
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Formula {
    /// Source text, always starting with `=`.
    pub source: String,
    pub ast: Arc<Expr>,
}

#[derive(Debug, Clone, PartialEq)]
pub enum CellContent {
    Literal(CellValue),
    Formula(Formula),
}

/// Per-cell metadata: where the value comes from and how it is formatted.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Annotations {
    pub data_source: Option<String>,
    pub format: Option<Format>,
}

impl Annotations {
    pub fn is_empty(&self) -> bool {
        self.data_source.is_none() && self.format.is_none()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Cell {
    pub address: CellAddress,
    pub content: CellContent,
    pub annotations: Annotations,
}

impl Cell {
    pub fn blank(address: CellAddress) -> Cell {
        Cell {
            address,
            content: CellContent::Literal(CellValue::Blank),
            annotations: Annotations::default(),
        }
    }

    pub fn formula(&self) -> Option<&Formula> {
        match &self.content {
            CellContent::Formula(f) => Some(f),
            CellContent::Literal(_) => None,
        }
    }

    pub fn literal(&self) -> Option<&CellValue> {
        match &self.content {
            CellContent::Literal(v) => Some(v),
            CellContent::Formula(_) => None,
        }
    }

    pub fn is_formula(&self) -> bool {
        self.formula().is_some()
    }

    /// Non-empty means a formula or a non-blank literal.
    pub fn is_nonempty(&self) -> bool {
        !matches!(self.content, CellContent::Literal(CellValue::Blank))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Sheet {
    pub name: String,
    /// Keyed by `(row, col)` so iteration is row-major.
    pub cells: BTreeMap<(u32, u32), Cell>,
}

impl Sheet {
    pub fn cell(&self, col: u32, row: u32) -> Option<&Cell> {
        self.cells.get(&(row, col))
    }

    pub fn cells(&self) -> impl Iterator<Item = &Cell> {
        self.cells.values()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Workbook {
    pub file_name: String,
    sheets: Vec<Sheet>,
    index: HashMap<String, usize>,
    pub tables: Vec<TableDecl>,
}

fn check_name(name: &str) -> Result<(), WorkbookError> {
    if name.trim().is_empty() || name.contains(FORBIDDEN_NAME_CHARS) {
        return Err(WorkbookError::InvalidName(name.to_string()));
    }
    Ok(())
}

impl Workbook {
    pub fn new(file_name: impl Into<String>) -> Result<Workbook, WorkbookError> {
        let file_name = file_name.into();
        check_name(&file_name)?;
        Ok(Workbook {
            file_name,
            sheets: Vec::new(),
            index: HashMap::new(),
            tables: Vec::new(),
        })
    }

    pub fn add_sheet(&mut self, name: &str) -> Result<(), WorkbookError> {
        check_name(name)?;
        let key = name.to_lowercase();
        if self.index.contains_key(&key) {
            return Err(WorkbookError::DuplicateSheet(name.to_string()));
        }
        self.index.insert(key, self.sheets.len());
        self.sheets.push(Sheet {
            name: name.to_string(),
            cells: BTreeMap::new(),
        });
        Ok(())
    }

    pub fn sheets(&self) -> &[Sheet] {
        &self.sheets
    }

    pub fn sheet_names(&self) -> impl Iterator<Item = &str> {
        self.sheets.iter().map(|s| s.name.as_str())
    }

    /// Case-insensitive sheet lookup.
    pub fn sheet(&self, name: &str) -> Option<&Sheet> {
        self.index.get(&name.to_lowercase()).map(|&i| &self.sheets[i])
    }

    fn sheet_mut(&mut self, name: &str) -> Result<&mut Sheet, WorkbookError> {
        match self.index.get(&name.to_lowercase()) {
            Some(&i) => Ok(&mut self.sheets[i]),
            None => Err(WorkbookError::UnknownSheet(name.to_string())),
        }
    }

    /// Declared casing of a sheet name.
    pub fn canonical_sheet(&self, name: &str) -> Option<&str> {
        self.sheet(name).map(|s| s.name.as_str())
    }

    /// Rewrite the address's sheet to its declared casing.
    pub fn resolve(&self, addr: &CellAddress) -> Result<CellAddress, WorkbookError> {
        let sheet = self
            .canonical_sheet(&addr.sheet)
            .ok_or_else(|| WorkbookError::UnknownSheet(addr.sheet.clone()))?;
        Ok(CellAddress::new(sheet, addr.col, addr.row))
    }

    /// Parse an A1 reference against this workbook; unqualified references
    /// land on `default_sheet`.
    pub fn address(&self, a1: &str, default_sheet: &str) -> Result<CellAddress, WorkbookError> {
        let addr = a1_to_address(a1, default_sheet).map_err(|e| WorkbookError::Parse {
            location: a1.to_string(),
            message: e.to_string(),
        })?;
        self.resolve(&addr)
    }

    /// The cell at `addr` if one is stored.
    pub fn cell(&self, addr: &CellAddress) -> Option<&Cell> {
        self.sheet(&addr.sheet)?.cell(addr.col, addr.row)
    }

    /// The cell at `addr`; absent positions read as blank.
    pub fn get_cell(&self, addr: &CellAddress) -> Result<Cow<'_, Cell>, WorkbookError> {
        let sheet = self
            .sheet(&addr.sheet)
            .ok_or_else(|| WorkbookError::UnknownSheet(addr.sheet.clone()))?;
        Ok(match sheet.cell(addr.col, addr.row) {
            Some(c) => Cow::Borrowed(c),
            None => Cow::Owned(Cell::blank(CellAddress::new(
                sheet.name.clone(),
                addr.col,
                addr.row,
            ))),
        })
    }

    /// Store an input value. Formula cells are never overwritten.
    pub fn set_input(&mut self, addr: &CellAddress, value: CellValue) -> Result<(), WorkbookError> {
        let addr = self.resolve(addr)?;
        let sheet = self.sheet_mut(&addr.sheet)?;
        match sheet.cells.get_mut(&(addr.row, addr.col)) {
            Some(cell) if cell.is_formula() => Err(WorkbookError::OverwriteFormula(addr)),
            Some(cell) => {
                cell.content = CellContent::Literal(value);
                Ok(())
            }
            None => {
                sheet.cells.insert(
                    (addr.row, addr.col),
                    Cell {
                        address: addr.clone(),
                        content: CellContent::Literal(value),
                        annotations: Annotations::default(),
                    },
                );
                Ok(())
            }
        }
    }

    /// Unguarded literal write, for building workbooks.
    pub fn set_literal(&mut self, addr: &CellAddress, value: CellValue) -> Result<(), WorkbookError> {
        self.put(addr, CellContent::Literal(value))
    }

    /// Parse and store a formula. Referenced sheets must already exist.
    pub fn set_formula(&mut self, addr: &CellAddress, source: &str) -> Result<(), WorkbookError> {
        let addr = self.resolve(addr)?;
        let formula = self.compile(&addr, source)?;
        self.put(&addr, CellContent::Formula(formula))
    }

    pub fn set_annotations(
        &mut self,
        addr: &CellAddress,
        annotations: Annotations,
    ) -> Result<(), WorkbookError> {
        let addr = self.resolve(addr)?;
        let sheet = self.sheet_mut(&addr.sheet)?;
        sheet
            .cells
            .entry((addr.row, addr.col))
            .or_insert_with(|| Cell::blank(addr.clone()))
            .annotations = annotations;
        Ok(())
    }

    fn put(&mut self, addr: &CellAddress, content: CellContent) -> Result<(), WorkbookError> {
        let addr = self.resolve(addr)?;
        let sheet = self.sheet_mut(&addr.sheet)?;
        sheet
            .cells
            .entry((addr.row, addr.col))
            .or_insert_with(|| Cell::blank(addr.clone()))
            .content = content;
        Ok(())
    }

    /// Parse `source` as a formula living in `addr` and resolve every
    /// sheet it names.
    pub fn compile(&self, addr: &CellAddress, source: &str) -> Result<Formula, WorkbookError> {
        let mut ast = parse_formula(source, &addr.sheet).map_err(|e| WorkbookError::Parse {
            location: addr.qualified(),
            message: e.to_string(),
        })?;
        ast.map_sheets(&mut |name| {
            self.canonical_sheet(name)
                .map(str::to_string)
                .ok_or_else(|| WorkbookError::UnresolvedSheet(name.to_string()))
        })?;
        Ok(Formula {
            source: source.to_string(),
            ast: Arc::new(ast),
        })
    }

    /// All cells across all sheets, sheet by sheet in row-major order.
    pub fn cells(&self) -> impl Iterator<Item = &Cell> {
        self.sheets.iter().flat_map(|s| s.cells.values())
    }

    pub fn formula_cells(&self) -> impl Iterator<Item = (&CellAddress, &Formula)> {
        self.cells()
            .filter_map(|c| c.formula().map(|f| (&c.address, f)))
    }

    /// Declared table anchored at `addr`, if any.
    pub fn table_at(&self, addr: &CellAddress) -> Option<&TableDecl> {
        self.tables.iter().find(|t| &t.anchor == addr)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn book() -> Workbook {
        let mut wb = Workbook::new("t.wbk").unwrap();
        wb.add_sheet("Main").unwrap();
        wb.add_sheet("Rate Table").unwrap();
        let m = |a: &str| a1_to_address(a, "Main").unwrap();
        wb.set_literal(&m("B3"), CellValue::Number(1.0)).unwrap();
        wb.set_formula(&m("H3"), "=B3*2+'rate table'!A1").unwrap();
        wb
    }

    #[test]
    fn get_cell_reads_blank_for_absent() {
        let wb = book();
        let addr = a1_to_address("B3", "main").unwrap();
        assert_eq!(
            wb.get_cell(&addr).unwrap().literal(),
            Some(&CellValue::Number(1.0))
        );
        let absent = wb.get_cell(&a1_to_address("Z9", "Main").unwrap()).unwrap();
        assert_eq!(absent.literal(), Some(&CellValue::Blank));
        assert!(matches!(
            wb.get_cell(&a1_to_address("A1", "Nope").unwrap()),
            Err(WorkbookError::UnknownSheet(_))
        ));
    }

    #[test]
    fn sheet_names_are_case_insensitive() {
        let mut wb = book();
        assert_eq!(wb.canonical_sheet("RATE TABLE"), Some("Rate Table"));
        assert!(matches!(wb.add_sheet("MAIN"), Err(WorkbookError::DuplicateSheet(_))));
        let h3 = wb.cell(&a1_to_address("H3", "Main").unwrap()).unwrap();
        // formula references carry declared casing after resolution
        assert_eq!(h3.formula().unwrap().ast.render("Main"), "((B3*2)+'Rate Table'!A1)");
    }

    #[test]
    fn set_input_guards_formulas() {
        let mut wb = book();
        let b3 = a1_to_address("B3", "Main").unwrap();
        wb.set_input(&b3, CellValue::Number(500.0)).unwrap();
        assert_eq!(wb.cell(&b3).unwrap().literal(), Some(&CellValue::Number(500.0)));
        let h3 = a1_to_address("H3", "Main").unwrap();
        assert!(matches!(
            wb.set_input(&h3, CellValue::Number(1.0)),
            Err(WorkbookError::OverwriteFormula(_))
        ));
        assert!(matches!(
            wb.set_input(&a1_to_address("A1", "Nope").unwrap(), CellValue::Blank),
            Err(WorkbookError::UnknownSheet(_))
        ));
    }

    #[test]
    fn set_input_touches_one_cell() {
        let mut wb = book();
        let before = wb.clone();
        let c9 = a1_to_address("C9", "Main").unwrap();
        wb.set_input(&c9, CellValue::text("x")).unwrap();
        let changed: Vec<_> = wb
            .cells()
            .filter(|c| before.cell(&c.address) != Some(*c))
            .map(|c| c.address.a1())
            .collect();
        assert_eq!(changed, vec!["C9"]);
    }

    #[test]
    fn unresolved_sheet_in_formula() {
        let mut wb = book();
        let err = wb
            .set_formula(&a1_to_address("A1", "Main").unwrap(), "=Missing!A1")
            .unwrap_err();
        assert!(matches!(err, WorkbookError::UnresolvedSheet(s) if s == "Missing"));
    }

    #[test]
    fn rejects_bad_names() {
        let mut wb = Workbook::new("x").unwrap();
        assert!(wb.add_sheet("a$b").is_err());
        assert!(wb.add_sheet(" ").is_err());
        assert!(Workbook::new("file$x").is_err());
    }
}
