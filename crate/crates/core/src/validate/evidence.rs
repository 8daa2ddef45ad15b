//! Evidence of a validation run: the filled workbook with verdicts
//! (`<policy>.evidence.json`) and an HTML rendering of it
//! (`<policy>.html`) with mismatching outputs highlighted.

use std::collections::{BTreeMap, HashMap};
use std::fmt::Write as _;
use std::fs;
use std::io;
use std::path::{Path, PathBuf};

use serde_json::{json, Map, Value};

use crate::address::{column_name, CellAddress};
use crate::value::CellValue;
use crate::workbook::{value_to_json, Workbook};

use super::{CellVerdict, ValidationRun};

#[derive(Debug, Clone, Default)]
pub struct EvidenceOptions {
    /// Stamp files with the time of writing. Off keeps evidence
    /// byte-identical across runs.
    pub timestamp: bool,
}

/// File-name-safe form of `s`.
pub fn sanitize(s: &str) -> String {
    s.chars()
        .map(|c| if c.is_ascii_alphanumeric() || matches!(c, '.' | '-' | '_' | '$') { c } else { '_' })
        .collect()
}

/// `(json, html)` paths for a run's evidence under `out_dir`.
pub fn evidence_paths(out_dir: &Path, cs_sheet: &str, policy_id: &str) -> (PathBuf, PathBuf) {
    let dir = out_dir.join(sanitize(cs_sheet));
    let stem = sanitize(policy_id);
    (dir.join(format!("{stem}.evidence.json")), dir.join(format!("{stem}.html")))
}

/// Write both evidence files and return the JSON path.
pub fn write_evidence(
    run: &ValidationRun,
    filled: &Workbook,
    out_dir: &Path,
    options: &EvidenceOptions,
) -> io::Result<PathBuf> {
    let (json_path, html_path) = evidence_paths(out_dir, &run.cs_sheet, &run.policy_id);
    fs::create_dir_all(json_path.parent().expect("joined path"))?;
    let stamp = options.timestamp.then(|| chrono::Utc::now().to_rfc3339());
    let mut text = serde_json::to_string_pretty(&evidence_json(run, filled, stamp.as_deref()))?;
    text.push('\n');
    fs::write(&json_path, text)?;
    fs::write(&html_path, render_html(run, filled, stamp.as_deref()))?;
    Ok(json_path)
}

fn verdict_json(v: &CellVerdict) -> Value {
    json!({
        "cell": v.cell.qualified(),
        "expected": value_to_json(&v.expected),
        "actual": value_to_json(&v.actual),
        "format": v.format.to_string(),
        "match": v.matched,
        "detail": v.detail,
    })
}

fn evidence_json(run: &ValidationRun, filled: &Workbook, stamp: Option<&str>) -> Value {
    let mut doc = match filled.to_json() {
        Value::Object(m) => m,
        _ => unreachable!("workbooks serialize to objects"),
    };
    doc.insert("policy_id".into(), json!(run.policy_id));
    doc.insert("cs_sheet".into(), json!(run.cs_sheet));
    doc.insert("status".into(), json!(run.status.as_str()));
    doc.insert("verdicts".into(), run.verdicts.iter().map(verdict_json).collect());
    let computed: Map<String, Value> =
        run.computed.iter().map(|(a, v)| (a.qualified(), value_to_json(v))).collect();
    doc.insert("computed".into(), Value::Object(computed));
    let provenance: Map<String, Value> =
        run.provenance.iter().map(|(a, p)| (a.qualified(), json!(p))).collect();
    doc.insert("provenance".into(), Value::Object(provenance));
    doc.insert(
        "issues".into(),
        run.issues
            .iter()
            .map(|i| json!({"field": i.field, "kind": i.kind, "message": i.message}))
            .collect(),
    );
    doc.insert("diagnostics".into(), json!(run.diagnostics));
    if let Some(s) = stamp {
        doc.insert("timestamp".into(), json!(s));
    }
    Value::Object(doc)
}

pub fn escape(s: &str) -> String {
    let mut out = String::with_capacity(s.len());
    for c in s.chars() {
        match c {
            '&' => out.push_str("&amp;"),
            '<' => out.push_str("&lt;"),
            '>' => out.push_str("&gt;"),
            '"' => out.push_str("&quot;"),
            '\'' => out.push_str("&#39;"),
            c => out.push(c),
        }
    }
    out
}

fn show(v: &CellValue) -> String {
    match v {
        CellValue::Blank => String::new(),
        other => other.to_string(),
    }
}

pub const STYLE: &str = "body{font-family:sans-serif;margin:1.5em}\
table{border-collapse:collapse;margin-bottom:1.5em}\
td,th{border:1px solid #bbb;padding:2px 6px;font-size:90%}\
th{background:#eee}\
td.formula{color:#034}\
td.output{font-weight:bold;background:#e3f1e3}\
td.mismatch{font-weight:bold;background:#f6c6c6;outline:2px solid #c00}\
.banner{padding:.6em 1em;font-size:130%;font-weight:bold;margin-bottom:1em}\
.PASSED{background:#cfe8cf}.FAILED{background:#f6c6c6}.ERROR{background:#f7e3a8}";

/// HTML page for a run: banner, verdicts, issues, then every sheet's grid.
/// Only mismatching output cells carry the `mismatch` class.
pub fn render_html(run: &ValidationRun, filled: &Workbook, stamp: Option<&str>) -> String {
    let mut h = String::new();
    let title = format!("{} {} {}", run.cs_sheet, run.policy_id, run.status);
    let _ = write!(
        h,
        "<!DOCTYPE html>\n<html>\n<head>\n<meta charset=\"utf-8\">\n<title>{}</title>\n<style>{STYLE}</style>\n</head>\n<body>\n",
        escape(&title)
    );
    let _ = writeln!(
        h,
        "<div class=\"banner {}\">{} | policy {} | {}</div>",
        run.status,
        escape(&run.summary()),
        escape(&run.policy_id),
        escape(&run.cs_sheet)
    );
    if let Some(s) = stamp {
        let _ = writeln!(h, "<p>Generated {}</p>", escape(s));
    }

    h.push_str("<h2>Outputs</h2>\n<table>\n<tr><th>Cell</th><th>Format</th><th>Expected</th><th>Actual</th><th>Result</th><th>Detail</th></tr>\n");
    for v in &run.verdicts {
        let _ = writeln!(
            h,
            "<tr><td>{}</td><td>{}</td><td>{}</td><td>{}</td><td>{}</td><td>{}</td></tr>",
            escape(&v.cell.qualified()),
            v.format,
            escape(&show(&v.expected)),
            escape(&show(&v.actual)),
            if v.matched { "match" } else { "MISMATCH" },
            escape(v.detail.as_deref().unwrap_or(""))
        );
    }
    h.push_str("</table>\n");

    if !run.issues.is_empty() {
        h.push_str("<h2>Issues</h2>\n<ul>\n");
        for i in &run.issues {
            let _ = writeln!(h, "<li>{} [{}] {}</li>", escape(&i.field), escape(&i.kind), escape(&i.message));
        }
        h.push_str("</ul>\n");
    }
    if !run.diagnostics.is_empty() {
        h.push_str("<h2>Diagnostics</h2>\n<ul>\n");
        for d in &run.diagnostics {
            let _ = writeln!(h, "<li>{}</li>", escape(d));
        }
        h.push_str("</ul>\n");
    }

    let verdicts: HashMap<&CellAddress, bool> = run.verdicts.iter().map(|v| (&v.cell, v.matched)).collect();
    for sheet in filled.sheets() {
        let _ = writeln!(h, "<h2>Sheet {}</h2>", escape(&sheet.name));
        let max_row = sheet.cells.keys().map(|(r, _)| *r).max().unwrap_or(0);
        let max_col = sheet.cells.keys().map(|(_, c)| *c).max().unwrap_or(0);
        let computed: BTreeMap<(u32, u32), &CellValue> = run
            .computed
            .iter()
            .filter(|(a, _)| a.sheet == sheet.name)
            .map(|(a, v)| ((a.row, a.col), v))
            .collect();
        h.push_str("<table>\n<tr><th></th>");
        for c in 1..=max_col {
            let _ = write!(h, "<th>{}</th>", column_name(c));
        }
        h.push_str("</tr>\n");
        for r in 1..=max_row {
            let _ = write!(h, "<tr><th>{r}</th>");
            for c in 1..=max_col {
                let Some(cell) = sheet.cells.get(&(r, c)) else {
                    h.push_str("<td></td>");
                    continue;
                };
                let (text, formula) = match cell.formula() {
                    Some(f) => (computed.get(&(r, c)).map(|v| show(v)).unwrap_or_default(), Some(f.source.as_str())),
                    None => (cell.literal().map(show).unwrap_or_default(), None),
                };
                let class = match verdicts.get(&cell.address) {
                    Some(false) => Some("mismatch"),
                    Some(true) => Some("output"),
                    None => formula.map(|_| "formula"),
                };
                h.push_str("<td");
                if let Some(cl) = class {
                    let _ = write!(h, " class=\"{cl}\" data-cell=\"{}\"", escape(&cell.address.qualified()));
                }
                if let Some(f) = formula {
                    let _ = write!(h, " title=\"{}\"", escape(f));
                }
                let _ = write!(h, ">{}</td>", escape(&text));
            }
            h.push_str("</tr>\n");
        }
        h.push_str("</table>\n");
    }
    h.push_str("</body>\n</html>\n");
    h
}
