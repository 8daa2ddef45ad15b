//! Memoized evaluation over a workbook.
//!
//! Cells on a reference cycle are found up front (strongly connected
//! components of the formula dependency graph) and evaluate to `#CYCLE!`;
//! every other cell evaluates on demand and is cached. The in-progress
//! marker stays as a backstop so evaluation can never recurse forever.

use std::cmp::Ordering;
use std::collections::{BTreeMap, HashMap, HashSet, VecDeque};
use std::fmt;

use crate::address::CellAddress;
use crate::value::{CellValue, ErrorCode};
use crate::workbook::{CellContent, Workbook};

use super::ast::{BinaryOp, Expr, RangeRef, RefNode, UnaryOp};
use super::{functions, ParseError};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Diagnostic {
    pub cell: Option<CellAddress>,
    pub message: String,
}

impl fmt::Display for Diagnostic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.cell {
            Some(c) => write!(f, "{c}: {}", self.message),
            None => f.write_str(&self.message),
        }
    }
}

#[derive(Debug, Clone)]
enum Slot {
    InProgress,
    Done(CellValue),
}

pub struct Evaluator<'a> {
    wb: &'a Workbook,
    cache: HashMap<CellAddress, Slot>,
    cyclic: HashSet<CellAddress>,
    stack: Vec<CellAddress>,
    diagnostics: Vec<Diagnostic>,
}

/// Evaluate one cell with a fresh cache.
pub fn evaluate_cell(wb: &Workbook, addr: &CellAddress) -> CellValue {
    Evaluator::new(wb).evaluate(addr)
}

/// Evaluate formula text as if it lived in `home`, without storing it.
pub fn evaluate_formula(wb: &Workbook, home: &CellAddress, text: &str) -> Result<CellValue, ParseError> {
    let formula = wb.compile(home, text).map_err(|e| ParseError {
        position: 0,
        message: e.to_string(),
    })?;
    let mut ev = Evaluator::new(wb);
    ev.stack.push(home.clone());
    let v = ev.eval(&formula.ast);
    Ok(finish(v))
}

/// Evaluate every formula cell exactly once, dependencies first.
pub fn recompute_all(wb: &Workbook) -> BTreeMap<CellAddress, CellValue> {
    Evaluator::new(wb).recompute()
}

/// Formula cells referenced by `expr` (ranges included).
fn formula_deps(wb: &Workbook, expr: &Expr) -> Vec<CellAddress> {
    let mut out = Vec::new();
    expr.walk_refs(&mut |node| match node {
        RefNode::Cell(a) => {
            if wb.cell(a).is_some_and(|c| c.is_formula()) {
                out.push(a.clone());
            }
        }
        RefNode::Range(r) => {
            for c in cells_in_range(wb, r) {
                if c.1 {
                    out.push(c.0);
                }
            }
        }
    });
    out
}

/// Stored cells inside a range, with a flag for formula cells.
fn cells_in_range(wb: &Workbook, r: &RangeRef) -> Vec<(CellAddress, bool)> {
    let Some(sheet) = wb.sheet(r.sheet()) else {
        return Vec::new();
    };
    sheet
        .cells
        .range((r.start.row, r.start.col)..=(r.end.row, r.end.col))
        .filter(|((_, col), _)| (r.start.col..=r.end.col).contains(col))
        .map(|(_, c)| (c.address.clone(), c.is_formula()))
        .collect()
}

/// Formula cells that sit on a reference cycle (iterative Tarjan).
fn cyclic_cells(wb: &Workbook) -> HashSet<CellAddress> {
    let nodes: Vec<CellAddress> = wb.formula_cells().map(|(a, _)| a.clone()).collect();
    let id: HashMap<&CellAddress, usize> = nodes.iter().enumerate().map(|(i, a)| (a, i)).collect();
    let adj: Vec<Vec<usize>> = wb
        .formula_cells()
        .map(|(_, f)| formula_deps(wb, &f.ast).iter().filter_map(|d| id.get(d).copied()).collect())
        .collect();

    let n = nodes.len();
    let mut index = vec![usize::MAX; n];
    let mut low = vec![0; n];
    let mut on_stack = vec![false; n];
    let mut stack = Vec::new();
    let mut next = 0;
    let mut cyclic = HashSet::new();
    for root in 0..n {
        if index[root] != usize::MAX {
            continue;
        }
        let mut work: Vec<(usize, usize)> = vec![(root, 0)];
        while let Some(&mut (v, ref mut edge)) = work.last_mut() {
            if *edge == 0 && index[v] == usize::MAX {
                index[v] = next;
                low[v] = next;
                next += 1;
                stack.push(v);
                on_stack[v] = true;
            }
            if let Some(&w) = adj[v].get(*edge) {
                *edge += 1;
                if index[w] == usize::MAX {
                    work.push((w, 0));
                } else if on_stack[w] {
                    low[v] = low[v].min(index[w]);
                }
                continue;
            }
            work.pop();
            if let Some(&(parent, _)) = work.last() {
                low[parent] = low[parent].min(low[v]);
            }
            if low[v] == index[v] {
                let mut component = Vec::new();
                loop {
                    let w = stack.pop().expect("tarjan stack");
                    on_stack[w] = false;
                    component.push(w);
                    if w == v {
                        break;
                    }
                }
                if component.len() > 1 || adj[v].contains(&v) {
                    cyclic.extend(component.into_iter().map(|i| nodes[i].clone()));
                }
            }
        }
    }
    cyclic
}

/// A formula that yields a bare blank displays as 0.
fn finish(v: CellValue) -> CellValue {
    match v {
        CellValue::Blank => CellValue::Number(0.0),
        other => other,
    }
}

fn number(n: f64) -> CellValue {
    if n.is_finite() {
        CellValue::Number(n)
    } else {
        CellValue::Error(ErrorCode::Value)
    }
}

impl<'a> Evaluator<'a> {
    pub fn new(wb: &'a Workbook) -> Self {
        Evaluator {
            wb,
            cache: HashMap::new(),
            cyclic: cyclic_cells(wb),
            stack: Vec::new(),
            diagnostics: Vec::new(),
        }
    }

    pub fn workbook(&self) -> &'a Workbook {
        self.wb
    }

    pub fn diagnostics(&self) -> &[Diagnostic] {
        &self.diagnostics
    }

    pub fn into_diagnostics(self) -> Vec<Diagnostic> {
        self.diagnostics
    }

    /// Cells found to be on a reference cycle.
    pub fn cyclic(&self) -> &HashSet<CellAddress> {
        &self.cyclic
    }

    pub(crate) fn diagnose(&mut self, message: impl Into<String>) {
        let d = Diagnostic {
            cell: self.stack.last().cloned(),
            message: message.into(),
        };
        if !self.diagnostics.contains(&d) {
            self.diagnostics.push(d);
        }
    }

    /// Non-cyclic formula cells ordered so each comes after the formula
    /// cells it references.
    pub fn topological_order(&self) -> Vec<CellAddress> {
        let wb = self.wb;
        let cells: Vec<(&CellAddress, Vec<CellAddress>)> = wb
            .formula_cells()
            .filter(|(a, _)| !self.cyclic.contains(*a))
            .map(|(a, f)| {
                let deps = formula_deps(wb, &f.ast)
                    .into_iter()
                    .filter(|d| !self.cyclic.contains(d))
                    .collect();
                (a, deps)
            })
            .collect();
        let mut indegree: HashMap<&CellAddress, usize> = HashMap::new();
        let mut dependents: HashMap<CellAddress, Vec<&CellAddress>> = HashMap::new();
        for (a, deps) in &cells {
            let unique: HashSet<&CellAddress> = deps.iter().collect();
            indegree.insert(a, unique.len());
            for d in unique {
                dependents.entry(d.clone()).or_default().push(a);
            }
        }
        let mut ready: VecDeque<&CellAddress> =
            cells.iter().map(|(a, _)| *a).filter(|a| indegree[a] == 0).collect();
        let mut order = Vec::with_capacity(cells.len());
        while let Some(a) = ready.pop_front() {
            order.push(a.clone());
            if let Some(ds) = dependents.get(a) {
                for d in ds {
                    let e = indegree.get_mut(d).expect("known cell");
                    *e -= 1;
                    if *e == 0 {
                        ready.push_back(d);
                    }
                }
            }
        }
        order
    }

    /// Evaluate every formula cell exactly once, dependencies first.
    pub fn recompute(&mut self) -> BTreeMap<CellAddress, CellValue> {
        for addr in self.topological_order() {
            self.evaluate(&addr);
        }
        let wb = self.wb;
        wb.formula_cells()
            .map(|(addr, _)| (addr.clone(), self.evaluate(addr)))
            .collect()
    }

    /// Value of the cell at `addr`; formulas evaluate once and are cached.
    pub fn evaluate(&mut self, addr: &CellAddress) -> CellValue {
        match self.cache.get(addr) {
            Some(Slot::Done(v)) => return v.clone(),
            Some(Slot::InProgress) => return CellValue::Error(ErrorCode::Cycle),
            None => {}
        }
        let Some(sheet) = self.wb.sheet(&addr.sheet) else {
            return CellValue::Error(ErrorCode::Ref);
        };
        let Some(cell) = sheet.cell(addr.col, addr.row) else {
            return CellValue::Blank;
        };
        let ast = match &cell.content {
            CellContent::Literal(v) => return v.clone(),
            CellContent::Formula(f) => f.ast.clone(),
        };
        let value = if self.cyclic.contains(addr) {
            CellValue::Error(ErrorCode::Cycle)
        } else {
            self.cache.insert(addr.clone(), Slot::InProgress);
            self.stack.push(addr.clone());
            let v = finish(self.eval(&ast));
            self.stack.pop();
            v
        };
        self.cache.insert(addr.clone(), Slot::Done(value.clone()));
        value
    }

    /// Scalar evaluation. Ranges are not scalars.
    pub(crate) fn eval(&mut self, expr: &Expr) -> CellValue {
        match expr {
            Expr::Number(n) => CellValue::Number(*n),
            Expr::Text(s) => CellValue::Text(s.clone()),
            Expr::Bool(b) => CellValue::Boolean(*b),
            Expr::Ref(a) => self.evaluate(a),
            Expr::Range(_) => {
                self.diagnose("range used where a single value is expected");
                CellValue::Error(ErrorCode::Value)
            }
            Expr::Unary(op, inner) => {
                let n = match self.eval(inner).to_number() {
                    Ok(n) => n,
                    Err(e) => return CellValue::Error(e),
                };
                match op {
                    UnaryOp::Neg => number(-n),
                    UnaryOp::Percent => number(n / 100.0),
                }
            }
            Expr::Binary(op, a, b) => {
                let a = self.eval(a);
                if let CellValue::Error(e) = a {
                    return CellValue::Error(e);
                }
                let b = self.eval(b);
                if let CellValue::Error(e) = b {
                    return CellValue::Error(e);
                }
                binary(*op, &a, &b)
            }
            Expr::Call { name, args } => functions::call(self, name, args),
        }
    }

    /// Cells of a range reference, as values.
    pub(crate) fn range_values(&mut self, r: &RangeRef) -> Vec<CellValue> {
        r.cells().map(|a| self.evaluate(&a)).collect()
    }
}

fn binary(op: BinaryOp, a: &CellValue, b: &CellValue) -> CellValue {
    let nums = || -> Result<(f64, f64), ErrorCode> { Ok((a.to_number()?, b.to_number()?)) };
    match op {
        BinaryOp::Add | BinaryOp::Sub | BinaryOp::Mul | BinaryOp::Div | BinaryOp::Pow => {
            let (x, y) = match nums() {
                Ok(p) => p,
                Err(e) => return CellValue::Error(e),
            };
            match op {
                BinaryOp::Add => number(x + y),
                BinaryOp::Sub => number(x - y),
                BinaryOp::Mul => number(x * y),
                BinaryOp::Div if y == 0.0 => CellValue::Error(ErrorCode::Div0),
                BinaryOp::Div => number(x / y),
                BinaryOp::Pow if x == 0.0 && y < 0.0 => CellValue::Error(ErrorCode::Div0),
                BinaryOp::Pow => number(x.powf(y)),
                _ => unreachable!(),
            }
        }
        BinaryOp::Concat => match (a.to_text(), b.to_text()) {
            (Ok(x), Ok(y)) => CellValue::Text(x + &y),
            (Err(e), _) | (_, Err(e)) => CellValue::Error(e),
        },
        _ => {
            let ord = compare(a, b);
            CellValue::Boolean(match op {
                BinaryOp::Eq => ord == Ordering::Equal,
                BinaryOp::Ne => ord != Ordering::Equal,
                BinaryOp::Lt => ord == Ordering::Less,
                BinaryOp::Le => ord != Ordering::Greater,
                BinaryOp::Gt => ord == Ordering::Greater,
                BinaryOp::Ge => ord != Ordering::Less,
                _ => unreachable!(),
            })
        }
    }
}

/// Spreadsheet ordering: numbers (and dates) < text < booleans; text is
/// compared case-insensitively; blank takes the other operand's zero value.
pub(crate) fn compare(a: &CellValue, b: &CellValue) -> Ordering {
    fn rank(v: &CellValue) -> u8 {
        match v {
            CellValue::Number(_) | CellValue::Date(_) => 0,
            CellValue::Text(_) => 1,
            CellValue::Boolean(_) => 2,
            CellValue::Blank | CellValue::Error(_) => 3,
        }
    }
    let zero_like = |other: &CellValue| match other {
        CellValue::Text(_) => CellValue::Text(String::new()),
        CellValue::Boolean(_) => CellValue::Boolean(false),
        _ => CellValue::Number(0.0),
    };
    let (a, b) = match (a, b) {
        (CellValue::Blank, CellValue::Blank) => return Ordering::Equal,
        (CellValue::Blank, other) => (zero_like(other), other.clone()),
        (other, CellValue::Blank) => (other.clone(), zero_like(other)),
        _ => (a.clone(), b.clone()),
    };
    match rank(&a).cmp(&rank(&b)) {
        Ordering::Equal => {}
        o => return o,
    }
    match (&a, &b) {
        (CellValue::Text(x), CellValue::Text(y)) => x.to_lowercase().cmp(&y.to_lowercase()),
        (CellValue::Boolean(x), CellValue::Boolean(y)) => x.cmp(y),
        _ => {
            let x = a.to_number().unwrap_or(0.0);
            let y = b.to_number().unwrap_or(0.0);
            x.partial_cmp(&y).unwrap_or(Ordering::Equal)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::address::a1_to_address;

    fn book(cells: &[(&str, &str)]) -> Workbook {
        let mut wb = Workbook::new("t").unwrap();
        wb.add_sheet("S").unwrap();
        wb.add_sheet("Rates").unwrap();
        for (a, src) in cells {
            let addr = a1_to_address(a, "S").unwrap();
            if src.starts_with('=') {
                wb.set_formula(&addr, src).unwrap();
            } else if let Ok(n) = src.parse::<f64>() {
                wb.set_literal(&addr, CellValue::Number(n)).unwrap();
            } else {
                wb.set_literal(&addr, CellValue::text(*src)).unwrap();
            }
        }
        wb
    }

    fn at(wb: &Workbook, a: &str) -> CellValue {
        evaluate_cell(wb, &a1_to_address(a, "S").unwrap())
    }

    #[test]
    fn sums_a_range() {
        let wb = book(&[("A1", "1"), ("A2", "2"), ("A3", "3"), ("B1", "=SUM(A1:A3)")]);
        assert_eq!(at(&wb, "B1"), CellValue::Number(6.0));
    }

    #[test]
    fn if_is_lazy() {
        let wb = book(&[("B1", "=IF(TRUE,1,1/0)"), ("B2", "=IF(FALSE,1,1/0)")]);
        assert_eq!(at(&wb, "B1"), CellValue::Number(1.0));
        assert_eq!(at(&wb, "B2"), CellValue::Error(ErrorCode::Div0));
    }

    #[test]
    fn two_cell_cycle() {
        let wb = book(&[("A1", "=B1"), ("B1", "=A1"), ("C1", "=A1+1"), ("D1", "=5")]);
        assert_eq!(at(&wb, "A1"), CellValue::Error(ErrorCode::Cycle));
        assert_eq!(at(&wb, "B1"), CellValue::Error(ErrorCode::Cycle));
        assert_eq!(at(&wb, "C1"), CellValue::Error(ErrorCode::Cycle));
        assert_eq!(at(&wb, "D1"), CellValue::Number(5.0));
        let wb = book(&[("A1", "=A1+1")]);
        assert_eq!(at(&wb, "A1"), CellValue::Error(ErrorCode::Cycle));
    }

    #[test]
    fn cycle_through_a_range() {
        let wb = book(&[("A1", "=SUM(A2:A3)"), ("A3", "=A1*2")]);
        assert_eq!(at(&wb, "A1"), CellValue::Error(ErrorCode::Cycle));
        assert_eq!(at(&wb, "A3"), CellValue::Error(ErrorCode::Cycle));
    }

    #[test]
    fn round_half_away() {
        let wb = book(&[("A1", "=ROUND(2.5,0)"), ("A2", "=ROUND(-2.5,0)")]);
        assert_eq!(at(&wb, "A1"), CellValue::Number(3.0));
        assert_eq!(at(&wb, "A2"), CellValue::Number(-3.0));
    }

    #[test]
    fn blank_reference_is_zero() {
        let wb = book(&[("A1", "=B9"), ("A2", "=B9&\"x\"")]);
        assert_eq!(at(&wb, "A1"), CellValue::Number(0.0));
        assert_eq!(at(&wb, "A2"), CellValue::text("x"));
    }

    #[test]
    fn comparisons() {
        let wb = book(&[
            ("A1", "abc"),
            ("B1", "=A1=\"ABC\""),
            ("B2", "=1<\"a\""),
            ("B3", "=\"z\"<TRUE"),
            ("B4", "=C9=0"),
            ("B5", "=C9=\"\""),
        ]);
        for b in ["B1", "B2", "B3", "B4", "B5"] {
            assert_eq!(at(&wb, b), CellValue::Boolean(true), "{b}");
        }
    }

    #[test]
    fn recompute_covers_formulas_in_dependency_order() {
        let wb = book(&[
            ("B3", "100"),
            ("H10", "1000"),
            ("H11", "50"),
            ("H3", "=H10-B3-H11"),
            ("H2", "=H3*2"),
        ]);
        let ev = Evaluator::new(&wb);
        let order: Vec<String> = ev.topological_order().iter().map(|a| a.a1()).collect();
        assert_eq!(order, vec!["H3", "H2"]);
        let all = recompute_all(&wb);
        assert_eq!(all.len(), 2);
        assert_eq!(all[&a1_to_address("H3", "S").unwrap()], CellValue::Number(850.0));
        assert_eq!(all[&a1_to_address("H2", "S").unwrap()], CellValue::Number(1700.0));
    }

    #[test]
    fn no_formulas_no_results() {
        let wb = book(&[("A1", "1")]);
        assert!(recompute_all(&wb).is_empty());
    }

    #[test]
    fn cross_sheet_recompute() {
        let mut wb = book(&[("H5", "=Rates!B2*B1"), ("B1", "200")]);
        wb.set_literal(&a1_to_address("Rates!B2", "S").unwrap(), CellValue::Number(0.07))
            .unwrap();
        let all = recompute_all(&wb);
        assert_eq!(all[&a1_to_address("H5", "S").unwrap()], CellValue::Number(0.07 * 200.0));
    }

    #[test]
    fn errors_propagate() {
        let wb = book(&[("A1", "=1/0"), ("A2", "=A1+1"), ("A3", "=SUM(A1:A2)"), ("A4", "=\"x\"*2")]);
        assert_eq!(at(&wb, "A2"), CellValue::Error(ErrorCode::Div0));
        assert_eq!(at(&wb, "A3"), CellValue::Error(ErrorCode::Div0));
        assert_eq!(at(&wb, "A4"), CellValue::Error(ErrorCode::Value));
    }
}
