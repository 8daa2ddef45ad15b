use crate::address::{column_name, CellAddress};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum UnaryOp {
    Neg,
    Percent,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BinaryOp {
    Pow,
    Mul,
    Div,
    Add,
    Sub,
    Concat,
    Eq,
    Ne,
    Lt,
    Le,
    Gt,
    Ge,
}

impl BinaryOp {
    pub fn symbol(self) -> &'static str {
        match self {
            BinaryOp::Pow => "^",
            BinaryOp::Mul => "*",
            BinaryOp::Div => "/",
            BinaryOp::Add => "+",
            BinaryOp::Sub => "-",
            BinaryOp::Concat => "&",
            BinaryOp::Eq => "=",
            BinaryOp::Ne => "<>",
            BinaryOp::Lt => "<",
            BinaryOp::Le => "<=",
            BinaryOp::Gt => ">",
            BinaryOp::Ge => ">=",
        }
    }
}

/// Rectangular range; always normalized so `start` is the top-left corner.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct RangeRef {
    pub start: CellAddress,
    pub end: CellAddress,
}

impl RangeRef {
    pub fn new(a: CellAddress, b: CellAddress) -> Self {
        debug_assert_eq!(a.sheet, b.sheet);
        RangeRef {
            start: CellAddress::new(a.sheet.clone(), a.col.min(b.col), a.row.min(b.row)),
            end: CellAddress::new(a.sheet, a.col.max(b.col), a.row.max(b.row)),
        }
    }

    pub fn sheet(&self) -> &str {
        &self.start.sheet
    }

    pub fn width(&self) -> u32 {
        self.end.col - self.start.col + 1
    }

    pub fn height(&self) -> u32 {
        self.end.row - self.start.row + 1
    }

    pub fn len(&self) -> usize {
        self.width() as usize * self.height() as usize
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Cell at 0-based `(row, col)` offset inside the range.
    pub fn at(&self, row: u32, col: u32) -> CellAddress {
        CellAddress::new(self.sheet(), self.start.col + col, self.start.row + row)
    }

    /// Cells in row-major order.
    pub fn cells(&self) -> impl Iterator<Item = CellAddress> + '_ {
        (self.start.row..=self.end.row).flat_map(move |row| {
            (self.start.col..=self.end.col)
                .map(move |col| CellAddress::new(self.sheet(), col, row))
        })
    }

    pub fn contains(&self, addr: &CellAddress) -> bool {
        addr.sheet == self.start.sheet
            && (self.start.col..=self.end.col).contains(&addr.col)
            && (self.start.row..=self.end.row).contains(&addr.row)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Expr {
    Number(f64),
    Text(String),
    Bool(bool),
    Ref(CellAddress),
    Range(RangeRef),
    Unary(UnaryOp, Box<Expr>),
    Binary(BinaryOp, Box<Expr>, Box<Expr>),
    Call { name: String, args: Vec<Expr> },
}

impl Expr {
    /// Visit every cell and range reference.
    pub fn walk_refs<'a>(&'a self, f: &mut dyn FnMut(RefNode<'a>)) {
        match self {
            Expr::Ref(a) => f(RefNode::Cell(a)),
            Expr::Range(r) => f(RefNode::Range(r)),
            Expr::Unary(_, e) => e.walk_refs(f),
            Expr::Binary(_, a, b) => {
                a.walk_refs(f);
                b.walk_refs(f);
            }
            Expr::Call { args, .. } => args.iter().for_each(|a| a.walk_refs(f)),
            Expr::Number(_) | Expr::Text(_) | Expr::Bool(_) => {}
        }
    }

    /// Rewrite the sheet name of every reference.
    pub fn map_sheets<E>(&mut self, f: &mut dyn FnMut(&str) -> Result<String, E>) -> Result<(), E> {
        match self {
            Expr::Ref(a) => a.sheet = f(&a.sheet)?,
            Expr::Range(r) => {
                let s = f(&r.start.sheet)?;
                r.start.sheet = s.clone();
                r.end.sheet = s;
            }
            Expr::Unary(_, e) => e.map_sheets(f)?,
            Expr::Binary(_, a, b) => {
                a.map_sheets(f)?;
                b.map_sheets(f)?;
            }
            Expr::Call { args, .. } => {
                for a in args {
                    a.map_sheets(f)?;
                }
            }
            Expr::Number(_) | Expr::Text(_) | Expr::Bool(_) => {}
        }
        Ok(())
    }

    /// Render back to formula text (without the leading `=`), fully
    /// parenthesized and sheet-qualified where the sheet differs from `home`.
    pub fn render(&self, home: &str) -> String {
        let qual = |a: &CellAddress| {
            if a.sheet == home {
                format!("{}{}", column_name(a.col), a.row)
            } else {
                a.qualified()
            }
        };
        match self {
            Expr::Number(n) => crate::value::number_to_text(*n),
            Expr::Text(s) => format!("\"{}\"", s.replace('"', "\"\"")),
            Expr::Bool(b) => if *b { "TRUE" } else { "FALSE" }.to_string(),
            Expr::Ref(a) => qual(a),
            Expr::Range(r) => format!("{}:{}", qual(&r.start), r.end.a1()),
            Expr::Unary(UnaryOp::Neg, e) => format!("(-{})", e.render(home)),
            Expr::Unary(UnaryOp::Percent, e) => format!("({}%)", e.render(home)),
            Expr::Binary(op, a, b) => {
                format!("({}{}{})", a.render(home), op.symbol(), b.render(home))
            }
            Expr::Call { name, args } => format!(
                "{}({})",
                name,
                args.iter().map(|a| a.render(home)).collect::<Vec<_>>().join(",")
            ),
        }
    }
}

#[derive(Debug, Clone, Copy)]
pub enum RefNode<'a> {
    Cell(&'a CellAddress),
    Range(&'a RangeRef),
}
