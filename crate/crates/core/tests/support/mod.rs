//! Shared generators and oracles for the integration and acceptance tests.
//!
//! The oracles here deliberately share no code with the library: references
//! are read off the generator's own expression trees, values are computed by
//! a separate evaluator, and the PAS simulator works in integer cents.

#![allow(dead_code)]

use std::collections::{BTreeMap, BTreeSet, HashMap, HashSet};
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use calcspec::address::column_name;
use calcspec::workbook::Annotations;
use calcspec::{CellAddress, CellValue, ErrorCode, Workbook};
use chrono::{Datelike, NaiveDate};
use rand::seq::SliceRandom;
use rand::Rng;
use rand_chacha::ChaCha8Rng;

pub use rand::SeedableRng;

pub type Rng8 = ChaCha8Rng;

pub fn rng(seed: u64) -> Rng8 {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn fixtures() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("fixtures")
}

/// Recursively copy the fixture directory into `dest`.
pub fn copy_fixtures(dest: &Path) {
    copy_dir(&fixtures(), dest);
}

pub fn copy_dir(src: &Path, dest: &Path) {
    fs::create_dir_all(dest).unwrap();
    for entry in fs::read_dir(src).unwrap() {
        let entry = entry.unwrap();
        let target = dest.join(entry.file_name());
        if entry.file_type().unwrap().is_dir() {
            copy_dir(&entry.path(), &target);
        } else {
            fs::copy(entry.path(), target).unwrap();
        }
    }
}

// ---------------------------------------------------------------------------
// random acyclic workbooks

const SHEET_NAMES: [&str; 3] = ["Main", "Calc", "Rate Table"];
const LITERAL_COLS: u32 = 5;
const LITERAL_ROWS: u32 = 12;
const FORMULA_COL0: u32 = 7;
const FORMULA_COLS: u32 = 6;
const FORMULA_ROWS: u32 = 20;
const LABEL_COL: u32 = 26;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Pos {
    pub sheet: usize,
    pub col: u32,
    pub row: u32,
}

#[derive(Debug, Clone, Copy)]
pub struct Rect {
    pub sheet: usize,
    pub c1: u32,
    pub r1: u32,
    pub c2: u32,
    pub r2: u32,
}

impl Rect {
    fn cells(&self) -> impl Iterator<Item = Pos> + '_ {
        (self.r1..=self.r2)
            .flat_map(move |row| (self.c1..=self.c2).map(move |col| Pos { sheet: self.sheet, col, row }))
    }
}

#[derive(Debug, Clone)]
pub enum Node {
    Num(f64),
    Ref(Pos),
    Sum(Rect),
    Max(Vec<Node>),
    Min(Vec<Node>),
    Add(Box<Node>, Box<Node>),
    Sub(Box<Node>, Box<Node>),
    Mul(Box<Node>, Box<Node>),
    Div(Box<Node>, Box<Node>),
    Neg(Box<Node>),
    /// IF(a-b>0, then, else)
    If(Box<Node>, Box<Node>, Box<Node>, Box<Node>),
}

#[derive(Debug, Clone)]
pub enum Body {
    Number(f64),
    Error(ErrorCode),
    Label(String),
    Formula(Node),
}

#[derive(Debug, Clone)]
pub struct GenCell {
    pub pos: Pos,
    pub body: Body,
}

#[derive(Debug, Clone)]
pub struct RandomBook {
    pub sheets: Vec<String>,
    pub cells: Vec<GenCell>,
}

/// Oracle verdict for a formula cell.
#[derive(Debug, Clone, PartialEq)]
pub enum OValue {
    Num(f64),
    Err(ErrorCode),
}

impl RandomBook {
    /// Up to `max_cells` cells over one to three sheets. Formulas only
    /// reference earlier formulas or the literal zone, so the graph is
    /// acyclic.
    pub fn generate(rng: &mut Rng8, max_cells: usize) -> RandomBook {
        let n_sheets = rng.gen_range(1..=3);
        let sheets: Vec<String> = SHEET_NAMES[..n_sheets].iter().map(|s| s.to_string()).collect();
        let total = rng.gen_range(2..=max_cells.max(2));
        let n_labels = rng.gen_range(0..=total / 10);
        let rest = total - n_labels;
        let n_literals = rng.gen_range(1..=rest.max(1)).min(rest * 3 / 5 + 1);
        let n_formulas = rest.saturating_sub(n_literals);

        let mut taken: HashSet<Pos> = HashSet::new();
        let mut cells = Vec::new();
        let free = |rng: &mut Rng8, c0: u32, nc: u32, nr: u32, taken: &mut HashSet<Pos>| {
            for _ in 0..200 {
                let p = Pos {
                    sheet: rng.gen_range(0..n_sheets),
                    col: c0 + rng.gen_range(0..nc),
                    row: 1 + rng.gen_range(0..nr),
                };
                if taken.insert(p) {
                    return Some(p);
                }
            }
            None
        };
        for i in 0..n_labels {
            if let Some(pos) = free(rng, LABEL_COL, 1, 40, &mut taken) {
                cells.push(GenCell { pos, body: Body::Label(format!("label {i}")) });
            }
        }
        for _ in 0..n_literals {
            if let Some(pos) = free(rng, 1, LITERAL_COLS, LITERAL_ROWS, &mut taken) {
                cells.push(GenCell { pos, body: Body::Number(small_number(rng)) });
            }
        }
        let mut formulas: Vec<Pos> = Vec::new();
        for _ in 0..n_formulas {
            let Some(pos) = free(rng, FORMULA_COL0, FORMULA_COLS, FORMULA_ROWS, &mut taken) else {
                break;
            };
            let node = gen_node(rng, pos.sheet, n_sheets, &formulas, 0);
            cells.push(GenCell { pos, body: Body::Formula(node) });
            formulas.push(pos);
        }
        RandomBook { sheets, cells }
    }

    pub fn address(&self, p: Pos) -> CellAddress {
        CellAddress::new(self.sheets[p.sheet].clone(), p.col, p.row)
    }

    pub fn formula_text(&self, home: usize, node: &Node) -> String {
        let mut s = String::from("=");
        self.render(home, node, &mut s);
        s
    }

    fn ref_text(&self, home: usize, p: Pos) -> String {
        let a1 = format!("{}{}", column_name(p.col), p.row);
        if p.sheet == home {
            a1
        } else {
            format!("{}!{a1}", quoted(&self.sheets[p.sheet]))
        }
    }

    fn render(&self, home: usize, node: &Node, out: &mut String) {
        let bin = |out: &mut String, a: &Node, op: &str, b: &Node| {
            out.push('(');
            self.render(home, a, out);
            out.push_str(op);
            self.render(home, b, out);
            out.push(')');
        };
        match node {
            Node::Num(n) => {
                if *n < 0.0 {
                    let _ = write!(out, "({n})");
                } else {
                    let _ = write!(out, "{n}");
                }
            }
            Node::Ref(p) => out.push_str(&self.ref_text(home, *p)),
            Node::Sum(r) => {
                let from = self.ref_text(home, Pos { sheet: r.sheet, col: r.c1, row: r.r1 });
                let to = format!("{}{}", column_name(r.c2), r.r2);
                let _ = write!(out, "SUM({from}:{to})");
            }
            Node::Max(args) | Node::Min(args) => {
                out.push_str(if matches!(node, Node::Max(_)) { "MAX(" } else { "MIN(" });
                for (i, a) in args.iter().enumerate() {
                    if i > 0 {
                        out.push(',');
                    }
                    self.render(home, a, out);
                }
                out.push(')');
            }
            Node::Add(a, b) => bin(out, a, "+", b),
            Node::Sub(a, b) => bin(out, a, "-", b),
            Node::Mul(a, b) => bin(out, a, "*", b),
            Node::Div(a, b) => bin(out, a, "/", b),
            Node::Neg(a) => {
                out.push_str("-(");
                self.render(home, a, out);
                out.push(')');
            }
            Node::If(a, b, t, e) => {
                out.push_str("IF(");
                bin(out, a, "-", b);
                out.push_str(">0,");
                self.render(home, t, out);
                out.push(',');
                self.render(home, e, out);
                out.push(')');
            }
        }
    }

    /// Build the library workbook, inserting cells in the given order.
    pub fn build_in_order(&self, order: &[usize]) -> Workbook {
        let mut wb = Workbook::new("random.wbk").unwrap();
        for s in &self.sheets {
            wb.add_sheet(s).unwrap();
        }
        for &i in order {
            let c = &self.cells[i];
            let addr = self.address(c.pos);
            match &c.body {
                Body::Number(n) => wb.set_literal(&addr, CellValue::Number(*n)).unwrap(),
                Body::Error(e) => wb.set_literal(&addr, CellValue::Error(*e)).unwrap(),
                Body::Label(s) => wb.set_literal(&addr, CellValue::text(s.clone())).unwrap(),
                Body::Formula(node) => {
                    let text = self.formula_text(c.pos.sheet, node);
                    wb.set_formula(&addr, &text).unwrap_or_else(|e| panic!("{text}: {e}"))
                }
            }
        }
        wb
    }

    pub fn build(&self) -> Workbook {
        self.build_in_order(&(0..self.cells.len()).collect::<Vec<_>>())
    }

    fn formula_of(&self) -> HashMap<Pos, &Node> {
        self.cells
            .iter()
            .filter_map(|c| match &c.body {
                Body::Formula(n) => Some((c.pos, n)),
                _ => None,
            })
            .collect()
    }

    /// Sheets reachable from `root` through cross-sheet references.
    pub fn reachable_sheets(&self, root: usize) -> BTreeSet<usize> {
        let mut seen = BTreeSet::from([root]);
        loop {
            let before = seen.len();
            for c in &self.cells {
                if let Body::Formula(n) = &c.body {
                    if seen.contains(&c.pos.sheet) {
                        let targets: Vec<usize> = node_refs(n).iter().map(|p| p.sheet).collect();
                        seen.extend(targets);
                    }
                }
            }
            if seen.len() == before {
                return seen;
            }
        }
    }

    /// Brute-force input/output sets when only formulas on `relevant` sheets
    /// contribute edges.
    pub fn classify_oracle(&self, relevant: &BTreeSet<usize>) -> (BTreeSet<Pos>, BTreeSet<Pos>) {
        let formulas = self.formula_of();
        let mut referenced: BTreeSet<Pos> = BTreeSet::new();
        let mut has_refs: BTreeSet<Pos> = BTreeSet::new();
        for (pos, node) in &formulas {
            if !relevant.contains(&pos.sheet) {
                continue;
            }
            let refs = node_refs(node);
            if !refs.is_empty() {
                has_refs.insert(*pos);
            }
            referenced.extend(refs);
        }
        let inputs = referenced.difference(&has_refs).copied().collect();
        let outputs = has_refs.difference(&referenced).copied().collect();
        (inputs, outputs)
    }

    /// Values of all formula cells, computed recursively on the trees.
    pub fn evaluate_oracle(&self) -> BTreeMap<Pos, OValue> {
        self.evaluate_oracle_except(&HashSet::new())
    }

    /// As [`evaluate_oracle`], skipping `skip` (which must include every
    /// cell that reaches a cycle).
    pub fn evaluate_oracle_except(&self, skip: &HashSet<Pos>) -> BTreeMap<Pos, OValue> {
        let mut ev = Oracle {
            literals: self
                .cells
                .iter()
                .filter_map(|c| match c.body {
                    Body::Number(n) => Some((c.pos, OValue::Num(n))),
                    Body::Error(e) => Some((c.pos, OValue::Err(e))),
                    _ => None,
                })
                .collect(),
            formulas: self.formula_of(),
            memo: HashMap::new(),
        };
        let keys: Vec<Pos> = ev.formulas.keys().filter(|p| !skip.contains(p)).copied().collect();
        keys.into_iter().map(|p| (p, ev.cell(p))).collect()
    }

    /// Turn up to `k` numeric literals into the error literal `code`.
    pub fn inject_errors(&mut self, rng: &mut Rng8, k: usize, code: ErrorCode) -> Vec<Pos> {
        let mut lits: Vec<usize> =
            (0..self.cells.len()).filter(|i| matches!(self.cells[*i].body, Body::Number(_))).collect();
        lits.shuffle(rng);
        lits.truncate(k);
        for &i in &lits {
            self.cells[i].body = Body::Error(code);
        }
        lits.into_iter().map(|i| self.cells[i].pos).collect()
    }

    /// Formula cells on a cycle, and formula cells that reach one.
    pub fn cycle_sets(&self) -> (HashSet<Pos>, HashSet<Pos>) {
        let formulas = self.formula_positions();
        let reach: HashMap<Pos, HashSet<Pos>> = formulas.iter().map(|p| (*p, self.transitive_refs(*p))).collect();
        let cyclic: HashSet<Pos> = formulas.iter().filter(|p| reach[p].contains(p)).copied().collect();
        let affected = formulas
            .iter()
            .filter(|p| cyclic.contains(p) || reach[p].iter().any(|q| cyclic.contains(q)))
            .copied()
            .collect();
        (cyclic, affected)
    }

    /// Rewrite one earlier formula so it refers back to a later one that
    /// (transitively) depends on it. Returns false if no such pair exists.
    pub fn inject_cycle(&mut self, rng: &mut Rng8) -> bool {
        let formulas: Vec<usize> = (0..self.cells.len())
            .filter(|i| matches!(self.cells[*i].body, Body::Formula(_)))
            .collect();
        let mut pairs = Vec::new();
        for &late in &formulas {
            let deps = self.transitive_refs(self.cells[late].pos);
            for &early in &formulas {
                if early != late && deps.contains(&self.cells[early].pos) {
                    pairs.push((early, late));
                }
            }
        }
        let Some(&(early, late)) = pairs.choose(rng) else {
            return false;
        };
        let target = self.cells[late].pos;
        if let Body::Formula(n) = &mut self.cells[early].body {
            *n = Node::Add(Box::new(n.clone()), Box::new(Node::Ref(target)));
        }
        true
    }

    /// Also a self-loop; always succeeds when there is a formula.
    pub fn inject_self_loop(&mut self, rng: &mut Rng8) -> bool {
        let formulas: Vec<usize> = (0..self.cells.len())
            .filter(|i| matches!(self.cells[*i].body, Body::Formula(_)))
            .collect();
        let Some(&i) = formulas.choose(rng) else {
            return false;
        };
        let me = self.cells[i].pos;
        if let Body::Formula(n) = &mut self.cells[i].body {
            *n = Node::Mul(Box::new(n.clone()), Box::new(Node::Ref(me)));
        }
        true
    }

    /// Cells reachable from `p` through references (not including `p`
    /// unless it is on a cycle).
    pub fn transitive_refs(&self, p: Pos) -> HashSet<Pos> {
        let formulas = self.formula_of();
        let mut seen = HashSet::new();
        let mut stack: Vec<Pos> = formulas.get(&p).map(|n| node_refs(n)).unwrap_or_default();
        while let Some(q) = stack.pop() {
            if seen.insert(q) {
                if let Some(n) = formulas.get(&q) {
                    stack.extend(node_refs(n));
                }
            }
        }
        seen
    }

    pub fn formula_positions(&self) -> Vec<Pos> {
        self.cells
            .iter()
            .filter(|c| matches!(c.body, Body::Formula(_)))
            .map(|c| c.pos)
            .collect()
    }
}

fn quoted(sheet: &str) -> String {
    if sheet.contains(' ') {
        format!("'{sheet}'")
    } else {
        sheet.to_string()
    }
}

fn small_number(rng: &mut Rng8) -> f64 {
    let halves: i32 = rng.gen_range(-40..=40);
    halves as f64 / 2.0
}

fn gen_node(rng: &mut Rng8, home: usize, n_sheets: usize, formulas: &[Pos], depth: u32) -> Node {
    let other_sheet = |rng: &mut Rng8| {
        if rng.gen_bool(0.25) {
            rng.gen_range(0..n_sheets)
        } else {
            home
        }
    };
    let leaf = depth >= 3 || rng.gen_bool(0.35);
    if leaf {
        return match rng.gen_range(0..10) {
            0 => Node::Num(small_number(rng)),
            1..=4 if !formulas.is_empty() => {
                let p = *formulas.choose(rng).unwrap();
                Node::Ref(p)
            }
            5 => {
                let sheet = other_sheet(rng);
                let c1 = rng.gen_range(1..=LITERAL_COLS);
                let r1 = rng.gen_range(1..=LITERAL_ROWS);
                let (c2, r2) = if rng.gen_bool(0.5) {
                    (c1, (r1 + rng.gen_range(0..4)).min(LITERAL_ROWS))
                } else {
                    ((c1 + rng.gen_range(0..3)).min(LITERAL_COLS), (r1 + rng.gen_range(0..3)).min(LITERAL_ROWS))
                };
                Node::Sum(Rect { sheet, c1, r1, c2, r2 })
            }
            _ => Node::Ref(Pos {
                sheet: other_sheet(rng),
                col: rng.gen_range(1..=LITERAL_COLS),
                row: rng.gen_range(1..=LITERAL_ROWS),
            }),
        };
    }
    let sub = |rng: &mut Rng8| Box::new(gen_node(rng, home, n_sheets, formulas, depth + 1));
    match rng.gen_range(0..9) {
        0 | 1 => Node::Add(sub(rng), sub(rng)),
        2 => Node::Sub(sub(rng), sub(rng)),
        3 => Node::Mul(sub(rng), sub(rng)),
        4 => Node::Div(sub(rng), sub(rng)),
        5 => Node::Neg(sub(rng)),
        6 => Node::If(sub(rng), sub(rng), sub(rng), sub(rng)),
        7 => Node::Max((0..rng.gen_range(1..=3)).map(|_| *sub(rng)).collect()),
        _ => Node::Min((0..rng.gen_range(1..=3)).map(|_| *sub(rng)).collect()),
    }
}

/// All cells a tree references, ranges expanded.
pub fn node_refs(node: &Node) -> Vec<Pos> {
    let mut out = Vec::new();
    fn go(n: &Node, out: &mut Vec<Pos>) {
        match n {
            Node::Num(_) => {}
            Node::Ref(p) => out.push(*p),
            Node::Sum(r) => out.extend(r.cells()),
            Node::Max(a) | Node::Min(a) => a.iter().for_each(|x| go(x, out)),
            Node::Add(a, b) | Node::Sub(a, b) | Node::Mul(a, b) | Node::Div(a, b) => {
                go(a, out);
                go(b, out);
            }
            Node::Neg(a) => go(a, out),
            Node::If(a, b, t, e) => {
                go(a, out);
                go(b, out);
                go(t, out);
                go(e, out);
            }
        }
    }
    go(node, &mut out);
    out.sort();
    out.dedup();
    out
}

struct Oracle<'a> {
    literals: HashMap<Pos, OValue>,
    formulas: HashMap<Pos, &'a Node>,
    memo: HashMap<Pos, OValue>,
}

type R = Result<f64, ErrorCode>;

fn checked(x: f64) -> R {
    if x.is_finite() {
        Ok(x)
    } else {
        Err(ErrorCode::Value)
    }
}

impl Oracle<'_> {
    fn cell(&mut self, p: Pos) -> OValue {
        if let Some(v) = self.memo.get(&p) {
            return v.clone();
        }
        let v = match self.formulas.get(&p).copied() {
            Some(n) => match self.node(n) {
                Ok(x) => OValue::Num(x),
                Err(e) => OValue::Err(e),
            },
            None => self.literals.get(&p).cloned().unwrap_or(OValue::Num(0.0)),
        };
        self.memo.insert(p, v.clone());
        v
    }

    fn node(&mut self, n: &Node) -> R {
        match n {
            Node::Num(x) => Ok(*x),
            Node::Ref(p) => match self.cell(*p) {
                OValue::Num(x) => Ok(x),
                OValue::Err(e) => Err(e),
            },
            Node::Sum(r) => {
                let mut total = 0.0;
                for p in r.cells() {
                    match self.literals.get(&p) {
                        Some(OValue::Num(x)) => total += x,
                        Some(OValue::Err(e)) => return Err(*e),
                        None => {}
                    }
                }
                checked(total)
            }
            Node::Max(args) | Node::Min(args) => {
                let mut vals = Vec::new();
                for a in args {
                    // a referenced empty cell is skipped, not read as 0
                    if let Node::Ref(p) = a {
                        if !self.literals.contains_key(p) && !self.formulas.contains_key(p) {
                            continue;
                        }
                    }
                    vals.push(self.node(a)?);
                }
                let max = matches!(n, Node::Max(_));
                Ok(vals.into_iter().reduce(if max { f64::max } else { f64::min }).unwrap_or(0.0))
            }
            Node::Add(a, b) => checked(self.node(a)? + self.node(b)?),
            Node::Sub(a, b) => checked(self.node(a)? - self.node(b)?),
            Node::Mul(a, b) => checked(self.node(a)? * self.node(b)?),
            Node::Div(a, b) => {
                let x = self.node(a)?;
                let y = self.node(b)?;
                if y == 0.0 {
                    Err(ErrorCode::Div0)
                } else {
                    checked(x / y)
                }
            }
            Node::Neg(a) => checked(-self.node(a)?),
            Node::If(a, b, t, e) => {
                let d = checked(self.node(a)? - self.node(b)?)?;
                if d > 0.0 {
                    self.node(t)
                } else {
                    self.node(e)
                }
            }
        }
    }
}

pub fn ovalue_of(v: &CellValue) -> Option<OValue> {
    match v {
        CellValue::Number(n) => Some(OValue::Num(*n)),
        CellValue::Error(e) => Some(OValue::Err(*e)),
        _ => None,
    }
}

// ---------------------------------------------------------------------------
// PAS simulator for the two fixture workbooks, in integer cents

pub const FREE_PCT: i64 = 10;
pub const CHARGE_RATE_PERMILLE: i64 = 70;
pub const CHARGE_PERIOD: i32 = 7;
pub const MIN_CHARGE_CENTS: i64 = 2500;
/// Surrender rates per policy year 1..=10, in basis points.
pub const SURRENDER_BP: [i64; 10] = [800, 700, 600, 500, 400, 300, 200, 100, 0, 0];

#[derive(Debug, Clone)]
pub struct SimPolicy {
    pub id: String,
    pub loan_cents: i64,
    pub issue: NaiveDate,
    pub withdrawal: NaiveDate,
    pub premiums: Vec<(NaiveDate, i64)>,
    pub policy_value_cents: i64,
    pub requested_cents: i64,
    pub account_cents: i64,
    pub policy_year: u32,
    pub surrender_loan_cents: i64,
    pub charge_cents: i64,
    pub net_payout_cents: i64,
    pub surrender_charge_cents: i64,
    pub net_surrender_cents: i64,
}

/// `num / den` rounded half away from zero, or None on an exact tie.
fn div_round(num: i64, den: i64) -> Option<i64> {
    let q = num.div_euclid(den);
    let r = num.rem_euclid(den);
    match (2 * r).cmp(&den) {
        std::cmp::Ordering::Less => Some(q),
        std::cmp::Ordering::Greater => Some(q + 1),
        std::cmp::Ordering::Equal => None,
    }
}

fn random_date(rng: &mut Rng8, years: std::ops::RangeInclusive<i32>) -> NaiveDate {
    NaiveDate::from_ymd_opt(rng.gen_range(years), rng.gen_range(1..=12), rng.gen_range(1..=28)).unwrap()
}

impl SimPolicy {
    pub fn generate(rng: &mut Rng8, id: String) -> SimPolicy {
        loop {
            let issue = random_date(rng, 2010..=2021);
            let withdrawal = random_date(rng, 2023..=2024);
            // an empty premium history is MissingData, so at least one
            let n = rng.gen_range(1..=5);
            let mut premiums: Vec<(NaiveDate, i64)> = (0..n)
                .map(|_| (random_date(rng, issue.year()..=2022), rng.gen_range(2..=40) * 50 * 100))
                .collect();
            premiums.sort();
            let loan_cents = rng.gen_range(0..=150_000);
            let policy_value_cents = rng.gen_range(2000..=40_000) * 100;
            let requested_cents = rng.gen_range(10..=350) * 100 * 100;

            let first = premiums.first().map(|p| p.0.max(issue)).unwrap_or(issue);
            let years = withdrawal.year() - first.year();
            let rate = if years >= CHARGE_PERIOD { 0 } else { CHARGE_RATE_PERMILLE };
            let paid: i64 = premiums.iter().map(|p| p.1).sum();
            let free = (paid * FREE_PCT / 100).max(0);
            let amount = requested_cents.min(policy_value_cents);
            let charge_cents = if amount <= free || rate == 0 {
                0
            } else {
                let Some(c) = div_round((amount - free) * rate, 1000) else { continue };
                c.max(MIN_CHARGE_CENTS)
            };
            let net_payout_cents = amount - loan_cents - charge_cents;

            let account_cents = rng.gen_range(100_000..=9_000_000);
            let policy_year = rng.gen_range(1..=14u32);
            let surrender_loan_cents = rng.gen_range(0..=50_000);
            let bp = SURRENDER_BP[(policy_year.min(10) - 1) as usize];
            let Some(surrender_charge_cents) = div_round(account_cents * bp, 10_000) else { continue };
            let net_surrender_cents = (account_cents - surrender_charge_cents - surrender_loan_cents).max(0);
            return SimPolicy {
                id,
                loan_cents,
                issue,
                withdrawal,
                premiums,
                policy_value_cents,
                requested_cents,
                account_cents,
                policy_year,
                surrender_loan_cents,
                charge_cents,
                net_payout_cents,
                surrender_charge_cents,
                net_surrender_cents,
            };
        }
    }
}

pub fn cents(c: i64) -> String {
    let sign = if c < 0 { "-" } else { "" };
    format!("{sign}{}.{:02}", c.abs() / 100, c.abs() % 100)
}

/// Cents with thousands separators, as a PAS screen would show them.
pub fn grouped(c: i64) -> String {
    let plain = cents(c.abs());
    let (int, frac) = plain.split_once('.').unwrap();
    let mut g = String::new();
    for (i, ch) in int.chars().enumerate() {
        if i > 0 && (int.len() - i) % 3 == 0 {
            g.push(',');
        }
        g.push(ch);
    }
    format!("{}{g}.{frac}", if c < 0 { "-" } else { "" })
}

/// Which output the simulator should corrupt for a policy.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Fault {
    WithdrawalCharge,
    NetPayout,
    SurrenderCharge,
}

/// Write a full environment for `n` synthetic policies into `dir`: the
/// fixture workbooks, bindings and config plus generated policy data, UI
/// extracts, a policy list and a manifest for both workbooks.
pub fn simulate_pas(
    dir: &Path,
    n: usize,
    seed: u64,
    faults: &HashMap<String, Fault>,
) -> Vec<SimPolicy> {
    copy_fixtures(dir);
    let ui = dir.join("ui");
    fs::remove_dir_all(&ui).unwrap();
    fs::remove_dir_all(dir.join("ui_faulty")).unwrap();
    fs::create_dir_all(&ui).unwrap();
    let mut rng = rng(seed);
    let policies: Vec<SimPolicy> =
        (1..=n).map(|i| SimPolicy::generate(&mut rng, format!("P{i:04}"))).collect();

    let mut pol = String::from(
        "policy_id,loan_balance,issue_date,withdrawal_date,policy_value,requested_amount,account_value,policy_year,surrender_loan\n",
    );
    let mut prem = String::from("policy_id,paid_on,amount\n");
    for p in &policies {
        let _ = writeln!(
            pol,
            "{},{},{},{},\"{}\",{},{},{},{}",
            p.id,
            cents(p.loan_cents),
            p.issue,
            p.withdrawal.format("%m/%d/%Y"),
            grouped(p.policy_value_cents),
            p.requested_cents / 100,
            cents(p.account_cents),
            p.policy_year,
            cents(p.surrender_loan_cents)
        );
        let mut rows = p.premiums.clone();
        rows.shuffle(&mut rng);
        for (d, a) in rows {
            let _ = writeln!(prem, "{},{d},{}", p.id, a / 100);
        }
        let mut charge = p.charge_cents;
        let mut net = p.net_payout_cents;
        let mut sc = p.surrender_charge_cents;
        match faults.get(&p.id) {
            Some(Fault::WithdrawalCharge) => charge += 100,
            Some(Fault::NetPayout) => net -= 7,
            Some(Fault::SurrenderCharge) => sc += 1,
            None => {}
        }
        let doc = serde_json::json!({
            "WithdrawalSummary": {
                "WithdrawalCharge": cents(charge).parse::<f64>().unwrap(),
                "NetPayout": grouped(net),
            },
            "SurrenderQuote": {
                "NetSurrenderValue": cents(p.net_surrender_cents).parse::<f64>().unwrap(),
                "SurrenderCharge": cents(sc),
            }
        });
        fs::write(ui.join(format!("{}.json", p.id)), serde_json::to_string_pretty(&doc).unwrap()).unwrap();
    }
    fs::write(dir.join("data/policies.csv"), pol).unwrap();
    fs::write(dir.join("data/premiums.csv"), prem).unwrap();
    let list: String = policies.iter().map(|p| format!("{}\n", p.id)).collect();
    fs::write(dir.join("policies.txt"), list).unwrap();
    let manifest = serde_json::json!({
        "jobs": 1,
        "out_dir": "out",
        "entries": [
            {
                "workbook_path": "withdrawal_charge.wbk.json",
                "root_sheet": "Main",
                "bindings_path": "wc.bindings.json",
                "policies_file": "policies.txt"
            },
            {
                "workbook_path": "surrender.wbk.json",
                "root_sheet": "Surrender",
                "bindings_path": "sv.bindings.json",
                "policies_file": "policies.txt"
            }
        ]
    });
    fs::write(dir.join("manifest.json"), serde_json::to_string_pretty(&manifest).unwrap()).unwrap();
    policies
}

// ---------------------------------------------------------------------------
// synthetic four-output workbook for fault-injection accuracy

pub const SYN_OUTPUTS: [&str; 4] = ["H2", "H3", "H4", "H5"];

/// Four inputs, four outputs of different formats.
pub fn synthetic_workbook() -> Workbook {
    let mut wb = Workbook::new("syn.wbk").unwrap();
    wb.add_sheet("Calc").unwrap();
    let a = |s: &str| calcspec::a1_to_address(s, "Calc").unwrap();
    let ann = |src: &str, fmt: &str| Annotations {
        data_source: Some(src.to_string()),
        format: Some(fmt.parse().unwrap()),
    };
    for (cell, fmt) in [("B2", "Number[2]"), ("B3", "Number[2]"), ("B4", "Number[2]"), ("B5", "Number[2]")] {
        wb.set_literal(&a(cell), CellValue::Number(1.0)).unwrap();
        wb.set_annotations(&a(cell), ann("Database", fmt)).unwrap();
    }
    for (cell, f, fmt) in [
        ("H2", "=B2+B3", "Number[2]"),
        ("H3", "=ROUND(B4*B5,2)", "Currency[2]"),
        ("H4", "=B2/B5", "Percentage[1]"),
        ("H5", "=IF(B2>B3,\"HIGH\",\"LOW\")", "Text"),
    ] {
        wb.set_formula(&a(cell), f).unwrap();
        wb.set_annotations(&a(cell), ann("App UI", fmt)).unwrap();
    }
    wb
}

pub struct SynPolicy {
    pub id: String,
    pub inputs: [i64; 4],
    pub injected: BTreeSet<&'static str>,
}

/// Write `n` policies for the synthetic workbook into `dir`, each with 0 to
/// 3 perturbed outputs. Returns the bindings path and the policies.
pub fn simulate_synthetic(dir: &Path, n: usize, seed: u64) -> (PathBuf, Vec<SynPolicy>) {
    let mut rng = rng(seed);
    fs::create_dir_all(dir.join("ui")).unwrap();
    let mut csv = String::from("policy_id,b2,b3,b4,b5\n");
    let mut out = Vec::new();
    for i in 1..=n {
        let id = format!("S{i:03}");
        let mut inputs = [0i64; 4];
        loop {
            for v in inputs.iter_mut() {
                *v = rng.gen_range(-50_000..=50_000);
            }
            // b5 divides; a half-cent product would make the expected
            // rounding ambiguous
            if inputs[3] != 0 && (inputs[2] * inputs[3]).rem_euclid(100) != 50 {
                break;
            }
        }
        let _ = writeln!(csv, "{id},{},{},{},{}", cents(inputs[0]), cents(inputs[1]), cents(inputs[2]), cents(inputs[3]));
        let x = |c: i64| c as f64 / 100.0;
        let h2 = inputs[0] + inputs[1];
        // b4*b5 is in 1/10000; round to cents
        let h3 = div_round(inputs[2] * inputs[3], 100).expect("no tie");
        let h4 = x(inputs[0]) / x(inputs[3]);
        let h5 = if inputs[0] > inputs[1] { "HIGH" } else { "LOW" };

        let k = rng.gen_range(0..=3);
        let mut names = SYN_OUTPUTS.to_vec();
        names.shuffle(&mut rng);
        let injected: BTreeSet<&'static str> = names.into_iter().take(k).collect();
        let sign = if rng.gen_bool(0.5) { 1 } else { -1 };
        let h2v = if injected.contains("H2") { h2 + sign * 3 } else { h2 };
        let h3v = if injected.contains("H3") { h3 + sign * 5 } else { h3 };
        let h4v = if injected.contains("H4") { h4 + sign as f64 * 0.003 } else { h4 };
        let h5v = if injected.contains("H5") { "MID" } else { h5 };
        let doc = serde_json::json!({"Screen": {
            "Sum": cents(h2v).parse::<f64>().unwrap(),
            "Product": grouped(h3v),
            "Ratio": h4v,
            "Band": h5v,
        }});
        fs::write(dir.join(format!("ui/{id}.json")), doc.to_string()).unwrap();
        out.push(SynPolicy { id, inputs, injected });
    }
    fs::write(dir.join("syn.csv"), csv).unwrap();
    let mut bindings = Vec::new();
    for (cell, col) in [("B2", "b2"), ("B3", "b3"), ("B4", "b4"), ("B5", "b5")] {
        bindings.push(serde_json::json!({
            "sheet": "Calc", "cell": cell, "adapter": "tabular",
            "params": {"file": "syn.csv", "where": {"policy_id": "{policy_id}"}, "select": col}
        }));
    }
    for (cell, field) in [("H2", "Sum"), ("H3", "Product"), ("H4", "Ratio"), ("H5", "Band")] {
        bindings.push(serde_json::json!({
            "sheet": "Calc", "cell": cell, "adapter": "ui_extract",
            "params": {"dir": "ui", "screen": "Screen", "field": field}
        }));
    }
    let path = dir.join("syn.bindings.json");
    fs::write(&path, serde_json::to_string_pretty(&bindings).unwrap()).unwrap();
    (path, out)
}
