//! Dependency graph, input/output classification and the referred-sheet
//! crawl.

use std::collections::{BTreeSet, HashMap, HashSet, VecDeque};

use crate::address::CellAddress;
use crate::formula::extract_refs;
use crate::workbook::Workbook;

use super::{SchemaError, SchemaExtraction};

/// Edges run from a referred cell to the cell whose formula refers to it.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct DependencyGraph {
    pub nodes: BTreeSet<CellAddress>,
    pub edges: BTreeSet<(CellAddress, CellAddress)>,
}

impl DependencyGraph {
    pub fn add_edge(&mut self, source: CellAddress, destination: CellAddress) {
        self.nodes.insert(source.clone());
        self.nodes.insert(destination.clone());
        self.edges.insert((source, destination));
    }

    pub fn merge(&mut self, other: DependencyGraph) {
        self.nodes.extend(other.nodes);
        self.edges.extend(other.edges);
    }

    /// `(in_degree, out_degree)` of every node.
    pub fn degrees(&self) -> HashMap<&CellAddress, (usize, usize)> {
        let mut deg: HashMap<&CellAddress, (usize, usize)> =
            self.nodes.iter().map(|n| (n, (0, 0))).collect();
        for (s, d) in &self.edges {
            deg.entry(s).or_default().1 += 1;
            deg.entry(d).or_default().0 += 1;
        }
        deg
    }
}

/// Graph of one sheet: a node per nonempty cell, plus every cell the
/// sheet's formulas refer to, wherever it lives.
pub fn build_graph(wb: &Workbook, sheet: &str) -> Result<DependencyGraph, SchemaError> {
    let sh = wb
        .sheet(sheet)
        .ok_or_else(|| SchemaError::UnknownSheet(sheet.to_string()))?;
    let mut g = DependencyGraph::default();
    for cell in sh.cells().filter(|c| c.is_nonempty()) {
        g.nodes.insert(cell.address.clone());
        if let Some(f) = cell.formula() {
            for referred in extract_refs(&f.ast, &sh.name).cells {
                g.add_edge(referred, cell.address.clone());
            }
        }
    }
    Ok(g)
}

/// Inputs have no incoming and some outgoing edge, outputs the reverse.
/// Both lists come back sorted by `(sheet, row, col)`.
pub fn classify(graph: &DependencyGraph) -> (Vec<CellAddress>, Vec<CellAddress>) {
    let deg = graph.degrees();
    let mut inputs = Vec::new();
    let mut outputs = Vec::new();
    for node in &graph.nodes {
        match deg[node] {
            (0, o) if o > 0 => inputs.push(node.clone()),
            (i, 0) if i > 0 => outputs.push(node.clone()),
            _ => {}
        }
    }
    (inputs, outputs)
}

/// Breadth-first walk from `root` over the sheets its formulas refer to.
///
/// Each sheet is visited once. Classification runs on the union of the
/// visited sheets' graphs so that a cell referred to from another sheet is
/// not mistaken for an output; results are then grouped by visit order.
pub fn crawl_referred_sheets(wb: &Workbook, root: &str) -> Result<SchemaExtraction, SchemaError> {
    let root = wb
        .canonical_sheet(root)
        .ok_or_else(|| SchemaError::UnknownSheet(root.to_string()))?
        .to_string();
    let mut visited: HashSet<String> = HashSet::from([root.to_lowercase()]);
    let mut queue = VecDeque::from([root]);
    let mut order = Vec::new();
    let mut union = DependencyGraph::default();
    while let Some(sheet) = queue.pop_front() {
        log::debug!("crawling sheet {sheet}");
        union.merge(build_graph(wb, &sheet)?);
        let sh = wb.sheet(&sheet).expect("queued sheets exist");
        for cell in sh.cells() {
            let Some(f) = cell.formula() else { continue };
            for name in extract_refs(&f.ast, &sh.name).sheets {
                let canonical = wb
                    .canonical_sheet(&name)
                    .ok_or_else(|| SchemaError::UnresolvedSheet(name.clone()))?;
                if visited.insert(canonical.to_lowercase()) {
                    queue.push_back(canonical.to_string());
                }
            }
        }
        order.push(sheet);
    }

    let rank: HashMap<&str, usize> = order.iter().enumerate().map(|(i, s)| (s.as_str(), i)).collect();
    let by_visit = |a: &CellAddress| (rank.get(a.sheet.as_str()).copied().unwrap_or(usize::MAX), a.row, a.col);
    let (mut inputs, mut outputs) = classify(&union);
    inputs.sort_by_key(by_visit);
    outputs.sort_by_key(by_visit);

    Ok(SchemaExtraction {
        referred_sheets: order[1..].to_vec(),
        sheets: order,
        inputs,
        outputs,
        records: Vec::new(),
    })
}
