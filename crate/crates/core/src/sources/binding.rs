//! Bindings file: which adapter supplies each schema field.
//!
//! ```json
//! [ {"sheet": "wc.wbk$Main", "cell": "B10", "adapter": "tabular",
//!    "params": {"file": "policies.csv", "where": {"policy_id": "{policy_id}"},
//!               "select": "policy_value"}},
//!   {"sheet": "Main", "cell": "H2", "adapter": "ui_extract",
//!    "params": {"dir": "ui", "screen": "WithdrawalSummary", "field": "charge"}} ]
//! ```
//!
//! `sheet` is either `file$tab` or just the tab. Relative paths are taken
//! relative to the bindings file. `{policy_id}` is the only placeholder.

use std::collections::HashSet;
use std::fs;
use std::path::{Path, PathBuf};

use serde_json::{Map, Value};

use crate::schema::{CellId, SchemaRecord};

use super::SourceError;

pub const POLICY_PLACEHOLDER: &str = "{policy_id}";

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Source {
    Tabular {
        file: PathBuf,
        /// `(column, value)` pairs every selected row must match.
        filter: Vec<(String, String)>,
        select: String,
        order_by: Option<String>,
    },
    Config {
        file: PathBuf,
        key: String,
    },
    UiExtract {
        dir: PathBuf,
        screen: String,
        field: String,
    },
    Http {
        url_template: String,
        pointer: String,
        timeout_ms: u64,
    },
}

impl Source {
    pub fn kind(&self) -> &'static str {
        match self {
            Source::Tabular { .. } => "tabular",
            Source::Config { .. } => "config",
            Source::UiExtract { .. } => "ui_extract",
            Source::Http { .. } => "http",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Binding {
    pub sheet: String,
    pub cell: CellId,
    pub multi: bool,
    pub source: Source,
}

impl Binding {
    pub fn matches(&self, record: &SchemaRecord) -> bool {
        let sheet_ok = if self.sheet.contains('$') {
            self.sheet == record.cs_sheet
        } else {
            self.sheet.eq_ignore_ascii_case(record.tab())
        };
        sheet_ok && self.cell == record.cell_id
    }

    pub fn key(&self) -> String {
        format!("{}!{}", self.sheet, self.cell)
    }
}

/// Replace the placeholder with the policy id.
pub fn substitute(template: &str, policy_id: &str) -> String {
    template.replace(POLICY_PLACEHOLDER, policy_id)
}

pub fn load_bindings(path: impl AsRef<Path>) -> Result<Vec<Binding>, SourceError> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| SourceError::Unavailable(format!("{}: {e}", path.display())))?;
    let base = path.parent().unwrap_or(Path::new(""));
    parse_bindings(&text, base)
}

fn berr(location: impl Into<String>, message: impl Into<String>) -> SourceError {
    SourceError::BindingFormat {
        location: location.into(),
        message: message.into(),
    }
}

/// Parse bindings, resolving relative paths against `base`.
pub fn parse_bindings(text: &str, base: &Path) -> Result<Vec<Binding>, SourceError> {
    let doc: Value = serde_json::from_str(text).map_err(|e| berr(format!("line {}", e.line()), e.to_string()))?;
    let list = doc.as_array().ok_or_else(|| berr("document", "expected an array of bindings"))?;
    let mut seen = HashSet::new();
    let mut out = Vec::with_capacity(list.len());
    for (i, item) in list.iter().enumerate() {
        let loc = format!("bindings[{i}]");
        let obj = item.as_object().ok_or_else(|| berr(&loc, "expected an object"))?;
        for k in obj.keys() {
            if !matches!(k.as_str(), "sheet" | "cell" | "adapter" | "multi" | "params") {
                return Err(berr(&loc, format!("unknown field `{k}`")));
            }
        }
        let sheet = string(obj, "sheet", &loc)?;
        let cell: CellId = string(obj, "cell", &loc)?.parse().map_err(|m: String| berr(&loc, m))?;
        let multi = match obj.get("multi") {
            None => cell.table.is_some(),
            Some(Value::Bool(b)) => *b,
            Some(_) => return Err(berr(&loc, "`multi` must be a boolean")),
        };
        if multi != cell.table.is_some() {
            return Err(berr(&loc, "`multi` must be true exactly for table cells (RowWise/ColumnWise)"));
        }
        let adapter = string(obj, "adapter", &loc)?;
        let params = match obj.get("params") {
            Some(Value::Object(p)) => p.clone(),
            None => Map::new(),
            Some(_) => return Err(berr(&loc, "`params` must be an object")),
        };
        check_placeholders(&Value::Object(params.clone()), &loc)?;
        let source = parse_source(&adapter, &params, base, &loc)?;
        if multi && matches!(source, Source::Config { .. }) {
            return Err(berr(&loc, "config bindings hold a single value and cannot be multi"));
        }
        let binding = Binding {
            sheet,
            cell,
            multi,
            source,
        };
        if !seen.insert(binding.key().to_lowercase()) {
            return Err(berr(&loc, format!("duplicate binding for {}", binding.key())));
        }
        out.push(binding);
    }
    Ok(out)
}

fn string(obj: &Map<String, Value>, key: &str, loc: &str) -> Result<String, SourceError> {
    match obj.get(key) {
        Some(Value::String(s)) if !s.is_empty() => Ok(s.clone()),
        _ => Err(berr(loc, format!("missing string field `{key}`"))),
    }
}

fn check_placeholders(v: &Value, loc: &str) -> Result<(), SourceError> {
    match v {
        Value::String(s) => {
            let mut rest = s.as_str();
            while let Some(open) = rest.find('{') {
                let tail = &rest[open..];
                let close = tail.find('}').ok_or_else(|| berr(loc, format!("unclosed placeholder in `{s}`")))?;
                if &tail[..=close] != POLICY_PLACEHOLDER {
                    return Err(berr(loc, format!("unknown placeholder `{}`", &tail[..=close])));
                }
                rest = &tail[close + 1..];
            }
            Ok(())
        }
        Value::Array(a) => a.iter().try_for_each(|x| check_placeholders(x, loc)),
        Value::Object(o) => o.values().try_for_each(|x| check_placeholders(x, loc)),
        _ => Ok(()),
    }
}

fn parse_source(adapter: &str, p: &Map<String, Value>, base: &Path, loc: &str) -> Result<Source, SourceError> {
    let allowed: &[&str] = match adapter {
        "tabular" => &["file", "where", "select", "order_by"],
        "config" => &["file", "key"],
        "ui_extract" => &["dir", "screen", "field"],
        "http" => &["url_template", "pointer", "timeout_ms"],
        other => return Err(SourceError::UnknownAdapter(other.to_string())),
    };
    for k in p.keys() {
        if !allowed.contains(&k.as_str()) {
            return Err(berr(loc, format!("unknown {adapter} parameter `{k}`")));
        }
    }
    let path = |key: &str| string(p, key, loc).map(|s| base.join(s));
    Ok(match adapter {
        "tabular" => {
            let filter = match p.get("where") {
                None => Vec::new(),
                Some(Value::Object(w)) => w
                    .iter()
                    .map(|(col, v)| match v {
                        Value::String(s) => Ok((col.clone(), s.clone())),
                        Value::Number(n) => Ok((col.clone(), n.to_string())),
                        _ => Err(berr(loc, format!("`where.{col}` must be a string or number"))),
                    })
                    .collect::<Result<_, _>>()?,
                Some(_) => return Err(berr(loc, "`where` must be an object")),
            };
            Source::Tabular {
                file: path("file")?,
                filter,
                select: string(p, "select", loc)?,
                order_by: p.contains_key("order_by").then(|| string(p, "order_by", loc)).transpose()?,
            }
        }
        "config" => Source::Config {
            file: path("file")?,
            key: string(p, "key", loc)?,
        },
        "ui_extract" => Source::UiExtract {
            dir: path("dir")?,
            screen: string(p, "screen", loc)?,
            field: string(p, "field", loc)?,
        },
        _ => {
            let pointer = string(p, "pointer", loc)?;
            if !pointer.starts_with('/') {
                return Err(berr(loc, "`pointer` must start with `/`"));
            }
            let timeout_ms = match p.get("timeout_ms") {
                None => 5000,
                Some(v) => v.as_u64().filter(|t| *t > 0).ok_or_else(|| berr(loc, "`timeout_ms` must be a positive integer"))?,
            };
            Source::Http {
                url_template: string(p, "url_template", loc)?,
                pointer,
                timeout_ms,
            }
        }
    })
}
