//! Validate many policies against many workbooks.

mod manifest;
mod report;

use std::collections::{BTreeMap, HashMap, HashSet};
use std::fs;
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicUsize, Ordering};
use std::time::Instant;

use rayon::prelude::*;
use sha2::{Digest, Sha256};

use crate::schema::{generate_schema, parse_schema, SchemaExtraction, SchemaOptions};
use crate::sources::{bind, load_bindings, Binding, DataSources};
use crate::validate::{evidence_paths, validate_policy, CompareMode, Status, Template, ValidateOptions};
use crate::workbook::Workbook;

pub use manifest::{default_jobs, load_manifest, parse_manifest, parse_policy_list, BatchManifest, ManifestEntry, ManifestError};
pub use report::{emit_dashboard_html, emit_summary_csv, render_dashboard, scan_runs, summary_csv};

/// One validated `(sheet, policy)` pair.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BatchRow {
    pub cs_sheet: String,
    pub policy_id: String,
    pub status: Status,
    pub mismatches: usize,
    pub duration_ms: u64,
    /// Evidence page, relative to the output directory.
    pub evidence_html: Option<String>,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct Totals {
    pub passed: usize,
    pub failed: usize,
    pub error: usize,
}

impl Totals {
    pub fn add(&mut self, status: Status) {
        match status {
            Status::Passed => self.passed += 1,
            Status::Failed => self.failed += 1,
            Status::Error => self.error += 1,
        }
    }

    pub fn total(&self) -> usize {
        self.passed + self.failed + self.error
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct BatchSummary {
    /// Sorted by `(cs_sheet, policy_id)`.
    pub rows: Vec<BatchRow>,
    pub wall_time_ms: u64,
    /// Set when timestamps are enabled.
    pub generated: Option<String>,
}

impl BatchSummary {
    pub fn from_rows(mut rows: Vec<BatchRow>) -> Self {
        rows.sort_by(|a, b| (&a.cs_sheet, &a.policy_id).cmp(&(&b.cs_sheet, &b.policy_id)));
        BatchSummary {
            rows,
            ..Default::default()
        }
    }

    /// Per-sheet totals, folded from the rows.
    pub fn totals(&self) -> BTreeMap<&str, Totals> {
        let mut t: BTreeMap<&str, Totals> = BTreeMap::new();
        for r in &self.rows {
            t.entry(r.cs_sheet.as_str()).or_default().add(r.status);
        }
        t
    }

    pub fn overall(&self) -> Totals {
        let mut t = Totals::default();
        for r in &self.rows {
            t.add(r.status);
        }
        t
    }

    /// Worst status over all rows, `PASSED` when empty.
    pub fn worst(&self) -> Status {
        self.rows.iter().map(|r| r.status).max().unwrap_or(Status::Passed)
    }
}

#[derive(Debug, Clone, Default)]
pub struct BatchOptions {
    /// Wall-clock values in outputs (durations, generation time).
    pub timestamp: bool,
    pub compare: CompareMode,
    /// Ticker on stderr.
    pub progress: bool,
    pub schema: SchemaOptions,
    /// Bound on concurrent HTTP requests.
    pub http_concurrency: Option<usize>,
}

struct Prepared {
    template: Template,
    bindings: Vec<Binding>,
    policies: Vec<String>,
}

fn entry_err(index: usize, message: impl std::fmt::Display) -> ManifestError {
    ManifestError::Entry {
        index,
        message: message.to_string(),
    }
}

/// Load every entry's workbook, schema and bindings. Schemas without a
/// file are generated once per distinct workbook content and root sheet.
fn prepare(manifest: &BatchManifest, options: &BatchOptions) -> Result<Vec<Prepared>, ManifestError> {
    let mut schema_cache: HashMap<(String, String), SchemaExtraction> = HashMap::new();
    let mut seen_pairs = HashSet::new();
    let mut out = Vec::new();
    for (index, e) in manifest.entries.iter().enumerate() {
        let bytes = fs::read(&e.workbook_path).map_err(|source| ManifestError::Io {
            path: e.workbook_path.clone(),
            source,
        })?;
        let text = String::from_utf8(bytes).map_err(|_| entry_err(index, "workbook is not UTF-8"))?;
        let wb = Workbook::from_json_str(&text).map_err(|err| entry_err(index, format!("{}: {err}", e.workbook_path.display())))?;
        let root = wb
            .canonical_sheet(&e.root_sheet)
            .ok_or_else(|| entry_err(index, format!("unknown root sheet `{}`", e.root_sheet)))?
            .to_string();
        let schema = match &e.schema_path {
            Some(p) => parse_schema(p).map_err(|err| entry_err(index, err))?,
            None => {
                let key = (hex(&Sha256::digest(text.as_bytes())), root.to_lowercase());
                match schema_cache.get(&key) {
                    Some(s) => s.clone(),
                    None => {
                        log::info!("generating schema for {} ({root})", e.workbook_path.display());
                        let g = generate_schema(&wb, &root, &options.schema).map_err(|err| entry_err(index, err))?;
                        schema_cache.insert(key, g.extraction.clone());
                        g.extraction
                    }
                }
            }
        };
        let bindings = load_bindings(&e.bindings_path).map_err(|err| entry_err(index, err))?;
        bind(&schema, &bindings).map_err(|err| entry_err(index, err))?;
        let template = Template::new(wb, schema);
        let cs_sheet = template.cs_sheet();
        for p in &e.policies {
            if !seen_pairs.insert((cs_sheet.clone(), p.clone())) {
                return Err(entry_err(index, format!("policy {p} listed twice for {cs_sheet}")));
            }
        }
        out.push(Prepared {
            template,
            bindings,
            policies: e.policies.clone(),
        });
    }
    Ok(out)
}

fn hex(bytes: &[u8]) -> String {
    bytes.iter().map(|b| format!("{b:02x}")).collect()
}

/// Validate every `(entry, policy)` pair of the manifest on `manifest.jobs`
/// workers, writing evidence under `manifest.out_dir`.
///
/// Manifest problems are reported before any validation starts; problems
/// with one policy only affect its row.
pub fn run_batch(manifest: &BatchManifest, options: &BatchOptions) -> Result<BatchSummary, ManifestError> {
    let started = Instant::now();
    let prepared = prepare(manifest, options)?;
    fs::create_dir_all(&manifest.out_dir).map_err(|source| ManifestError::Io {
        path: manifest.out_dir.clone(),
        source,
    })?;
    let sources = DataSources::new(options.http_concurrency.unwrap_or(crate::sources::DEFAULT_HTTP_CONCURRENCY));
    let validate_options = ValidateOptions {
        compare: options.compare,
        out_dir: Some(manifest.out_dir.clone()),
        evidence: crate::validate::EvidenceOptions {
            timestamp: options.timestamp,
        },
    };
    let tasks: Vec<(&Prepared, &str)> = prepared
        .iter()
        .flat_map(|p| p.policies.iter().map(move |id| (p, id.as_str())))
        .collect();
    let total = tasks.len();
    let done = AtomicUsize::new(0);

    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(manifest.jobs.max(1))
        .build()
        .map_err(|e| ManifestError::Invalid {
            path: manifest.out_dir.clone(),
            message: format!("cannot start worker pool: {e}"),
        })?;
    let rows: Vec<BatchRow> = pool.install(|| {
        tasks
            .par_iter()
            .map(|(p, policy)| {
                let run = validate_policy(&p.template, &p.bindings, policy, &sources, &validate_options);
                if options.progress {
                    let n = done.fetch_add(1, Ordering::Relaxed) + 1;
                    eprint!("\r{n}/{total} validated");
                    if n == total {
                        eprintln!();
                    }
                }
                let html = run
                    .evidence_path
                    .as_ref()
                    .map(|_| relative_html(&manifest.out_dir, &run.cs_sheet, &run.policy_id));
                BatchRow {
                    mismatches: run.mismatches(),
                    status: run.status,
                    duration_ms: if options.timestamp { run.duration_ms } else { 0 },
                    evidence_html: html,
                    cs_sheet: run.cs_sheet,
                    policy_id: run.policy_id,
                }
            })
            .collect()
    });

    let mut summary = BatchSummary::from_rows(rows);
    if options.timestamp {
        summary.wall_time_ms = started.elapsed().as_millis() as u64;
        summary.generated = Some(chrono::Utc::now().to_rfc3339());
    }
    Ok(summary)
}

fn relative_html(out_dir: &Path, cs_sheet: &str, policy_id: &str) -> String {
    let (_, html) = evidence_paths(out_dir, cs_sheet, policy_id);
    let rel: PathBuf = html.strip_prefix(out_dir).map_or(html.clone(), Path::to_path_buf);
    rel.components()
        .map(|c| c.as_os_str().to_string_lossy().into_owned())
        .collect::<Vec<_>>()
        .join("/")
}

#[cfg(test)]
mod tests {
    use super::*;

    fn row(sheet: &str, policy: &str, status: Status) -> BatchRow {
        BatchRow {
            cs_sheet: sheet.into(),
            policy_id: policy.into(),
            status,
            mismatches: usize::from(status == Status::Failed),
            duration_ms: 0,
            evidence_html: None,
        }
    }

    #[test]
    fn rows_sorted_and_totals_folded() {
        let s = BatchSummary::from_rows(vec![
            row("b$S", "P2", Status::Passed),
            row("a$S", "P2", Status::Failed),
            row("b$S", "P1", Status::Error),
            row("a$S", "P1", Status::Passed),
        ]);
        let keys: Vec<_> = s.rows.iter().map(|r| format!("{} {}", r.cs_sheet, r.policy_id)).collect();
        assert_eq!(keys, ["a$S P1", "a$S P2", "b$S P1", "b$S P2"]);
        let t = s.totals();
        assert_eq!(t["a$S"], Totals { passed: 1, failed: 1, error: 0 });
        assert_eq!(s.overall().total(), 4);
        assert_eq!(s.worst(), Status::Error);
        assert_eq!(BatchSummary::default().worst(), Status::Passed);
    }

    #[test]
    fn evidence_links_are_relative() {
        assert_eq!(relative_html(Path::new("/o"), "wc.wbk$Main", "P 1"), "wc.wbk$Main/P_1.html");
    }
}
