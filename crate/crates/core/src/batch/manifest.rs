//! Batch manifest.
//!
//! ```json
//! { "jobs": 8, "out_dir": "out",
//!   "entries": [ { "workbook_path": "wc.wbk.json", "root_sheet": "Main",
//!                  "schema_path": "wc.schema.csv",
//!                  "bindings_path": "wc.bindings.json",
//!                  "policies": ["P001", "P002"] } ] }
//! ```
//!
//! `schema_path` is optional (the schema is then generated), and
//! `policies_file` (one id per line, `#` comments) may replace
//! `policies`. Relative paths are taken relative to the manifest.

use std::fs;
use std::path::{Path, PathBuf};

use serde::Deserialize;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ManifestError {
    #[error("{path}: {message}")]
    Invalid { path: PathBuf, message: String },
    #[error("entry {index}: {message}")]
    Entry { index: usize, message: String },
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ManifestEntry {
    pub workbook_path: PathBuf,
    pub root_sheet: String,
    pub schema_path: Option<PathBuf>,
    pub bindings_path: PathBuf,
    pub policies: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BatchManifest {
    pub entries: Vec<ManifestEntry>,
    pub jobs: usize,
    pub out_dir: PathBuf,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawManifest {
    entries: Vec<RawEntry>,
    #[serde(default)]
    jobs: Option<usize>,
    #[serde(default)]
    out_dir: Option<PathBuf>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawEntry {
    workbook_path: PathBuf,
    root_sheet: String,
    #[serde(default)]
    schema_path: Option<PathBuf>,
    bindings_path: PathBuf,
    #[serde(default)]
    policies: Option<Vec<String>>,
    #[serde(default)]
    policies_file: Option<PathBuf>,
}

/// Default worker count: the machine's parallelism.
pub fn default_jobs() -> usize {
    std::thread::available_parallelism().map_or(1, |n| n.get())
}

pub fn load_manifest(path: impl AsRef<Path>) -> Result<BatchManifest, ManifestError> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|source| ManifestError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    parse_manifest(&text, path.parent().unwrap_or(Path::new("")), path)
}

/// Parse manifest text, resolving relative paths against `base`.
pub fn parse_manifest(text: &str, base: &Path, origin: &Path) -> Result<BatchManifest, ManifestError> {
    let raw: RawManifest = serde_json::from_str(text).map_err(|e| ManifestError::Invalid {
        path: origin.to_path_buf(),
        message: e.to_string(),
    })?;
    if raw.jobs == Some(0) {
        return Err(ManifestError::Invalid {
            path: origin.to_path_buf(),
            message: "`jobs` must be at least 1".into(),
        });
    }
    let mut entries = Vec::with_capacity(raw.entries.len());
    for (index, e) in raw.entries.into_iter().enumerate() {
        let err = |message: String| ManifestError::Entry { index, message };
        let policies = match (e.policies, e.policies_file) {
            (Some(p), None) => p,
            (None, Some(file)) => {
                let file = base.join(file);
                let text = fs::read_to_string(&file).map_err(|source| ManifestError::Io { path: file.clone(), source })?;
                parse_policy_list(&text)
            }
            (Some(_), Some(_)) => return Err(err("give either `policies` or `policies_file`, not both".into())),
            (None, None) => return Err(err("missing `policies` or `policies_file`".into())),
        };
        if policies.is_empty() {
            return Err(err("policy list is empty".into()));
        }
        if let Some(p) = policies.iter().find(|p| p.trim().is_empty()) {
            return Err(err(format!("invalid policy id `{p}`")));
        }
        entries.push(ManifestEntry {
            workbook_path: base.join(e.workbook_path),
            root_sheet: e.root_sheet,
            schema_path: e.schema_path.map(|p| base.join(p)),
            bindings_path: base.join(e.bindings_path),
            policies,
        });
    }
    Ok(BatchManifest {
        entries,
        jobs: raw.jobs.unwrap_or_else(default_jobs),
        out_dir: base.join(raw.out_dir.unwrap_or_else(|| PathBuf::from("out"))),
    })
}

/// One id per line; blank lines and `#` comments are skipped.
pub fn parse_policy_list(text: &str) -> Vec<String> {
    text.lines()
        .map(str::trim)
        .filter(|l| !l.is_empty() && !l.starts_with('#'))
        .map(str::to_string)
        .collect()
}
