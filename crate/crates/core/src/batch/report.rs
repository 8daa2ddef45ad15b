//! Summary CSV and HTML dashboard.

use std::fmt::Write as _;
use std::fs;
use std::io;
use std::path::Path;

use serde_json::Value;
use walkdir::WalkDir;

use crate::validate::{Status, STYLE};

use super::{BatchRow, BatchSummary};

pub fn summary_csv(summary: &BatchSummary) -> String {
    let mut w = csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(Vec::new());
    w.write_record(["cs_sheet", "policy_id", "status", "mismatches", "duration_ms"])
        .expect("writing to memory");
    for r in &summary.rows {
        w.write_record([
            r.cs_sheet.as_str(),
            r.policy_id.as_str(),
            r.status.as_str(),
            &r.mismatches.to_string(),
            &r.duration_ms.to_string(),
        ])
        .expect("writing to memory");
    }
    String::from_utf8(w.into_inner().expect("writing to memory")).expect("utf-8 input")
}

pub fn emit_summary_csv(summary: &BatchSummary, path: impl AsRef<Path>) -> io::Result<()> {
    fs::write(path, summary_csv(summary))
}

/// Write `dashboard.html` into `out_dir` and return its path.
pub fn emit_dashboard_html(summary: &BatchSummary, out_dir: impl AsRef<Path>) -> io::Result<std::path::PathBuf> {
    let path = out_dir.as_ref().join("dashboard.html");
    fs::write(&path, render_dashboard(summary))?;
    Ok(path)
}

fn esc(s: &str) -> String {
    crate::validate::escape(s)
}

pub fn render_dashboard(summary: &BatchSummary) -> String {
    let mut h = String::new();
    let _ = write!(
        h,
        "<!DOCTYPE html>\n<html>\n<head>\n<meta charset=\"utf-8\">\n<title>Validation dashboard</title>\n<style>{STYLE}</style>\n</head>\n<body>\n<h1>Validation dashboard</h1>\n"
    );
    if let Some(g) = &summary.generated {
        let _ = writeln!(h, "<p>Generated {} in {} ms</p>", esc(g), summary.wall_time_ms);
    }
    let overall = summary.overall();
    let _ = writeln!(
        h,
        "<div class=\"banner {}\">{} validations: {} passed, {} failed, {} error</div>",
        summary.worst(),
        overall.total(),
        overall.passed,
        overall.failed,
        overall.error
    );

    h.push_str("<h2>Totals</h2>\n<table>\n<tr><th>CS sheet</th><th>PASSED</th><th>FAILED</th><th>ERROR</th><th>Total</th></tr>\n");
    for (sheet, t) in summary.totals() {
        let _ = writeln!(
            h,
            "<tr><td>{}</td><td>{}</td><td>{}</td><td>{}</td><td>{}</td></tr>",
            esc(sheet),
            t.passed,
            t.failed,
            t.error,
            t.total()
        );
    }
    h.push_str("</table>\n");

    h.push_str("<h2>Policies</h2>\n<table>\n<tr><th>CS sheet</th><th>Policy</th><th>Status</th><th>Mismatches</th><th>Duration (ms)</th></tr>\n");
    for r in &summary.rows {
        let policy = match &r.evidence_html {
            Some(link) => format!("<a href=\"{}\">{}</a>", esc(link), esc(&r.policy_id)),
            None => esc(&r.policy_id),
        };
        let _ = writeln!(
            h,
            "<tr class=\"{}\"><td>{}</td><td>{policy}</td><td>{}</td><td>{}</td><td>{}</td></tr>",
            r.status,
            esc(&r.cs_sheet),
            r.status,
            r.mismatches,
            r.duration_ms
        );
    }
    h.push_str("</table>\n</body>\n</html>\n");
    h
}

/// Rebuild a summary from the evidence files under `runs_dir` without
/// validating anything again. Durations are not stored and read as 0.
pub fn scan_runs(runs_dir: impl AsRef<Path>) -> io::Result<BatchSummary> {
    let runs_dir = runs_dir.as_ref();
    let mut rows = Vec::new();
    for entry in WalkDir::new(runs_dir).sort_by_file_name() {
        let entry = entry.map_err(io::Error::other)?;
        let name = entry.file_name().to_string_lossy();
        let Some(stem) = name.strip_suffix(".evidence.json") else { continue };
        let text = fs::read_to_string(entry.path())?;
        let doc: Value = serde_json::from_str(&text)
            .map_err(|e| io::Error::new(io::ErrorKind::InvalidData, format!("{}: {e}", entry.path().display())))?;
        let field = |k: &str| doc.get(k).and_then(Value::as_str).map(str::to_string);
        let (Some(cs_sheet), Some(policy_id), Some(status)) = (field("cs_sheet"), field("policy_id"), field("status")) else {
            log::warn!("{}: not an evidence file", entry.path().display());
            continue;
        };
        let Ok(status) = status.parse::<Status>() else {
            log::warn!("{}: unknown status", entry.path().display());
            continue;
        };
        let mismatches = doc
            .get("verdicts")
            .and_then(Value::as_array)
            .map_or(0, |v| v.iter().filter(|x| x.get("match") == Some(&Value::Bool(false))).count());
        let html = entry.path().with_file_name(format!("{stem}.html"));
        let evidence_html = html.strip_prefix(runs_dir).ok().map(|p| {
            p.components()
                .map(|c| c.as_os_str().to_string_lossy().into_owned())
                .collect::<Vec<_>>()
                .join("/")
        });
        rows.push(BatchRow {
            cs_sheet,
            policy_id,
            status,
            mismatches,
            duration_ms: 0,
            evidence_html,
        });
    }
    Ok(BatchSummary::from_rows(rows))
}
