//! Adapter implementations behind [`DataSources::resolve`].

use std::cmp::Ordering;
use std::collections::HashMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::sync::{Arc, Condvar, Mutex};
use std::time::Duration;

use serde_json::Value;

use crate::format::{parse_date, parse_number};
use crate::value::CellValue;
use crate::workbook::value_from_json;

use super::binding::{substitute, Binding, Source};
use super::{ResolvedValue, SourceError};

/// Default bound on concurrent HTTP requests.
pub const DEFAULT_HTTP_CONCURRENCY: usize = 8;
const HTTP_RETRIES: usize = 2;

/// A CSV file with a header row.
#[derive(Debug)]
struct Table {
    headers: Vec<String>,
    rows: Vec<Vec<String>>,
}

impl Table {
    fn column(&self, name: &str, file: &Path) -> Result<usize, SourceError> {
        self.headers
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| SourceError::Unavailable(format!("{}: no column `{name}`", file.display())))
    }
}

/// Counting semaphore.
#[derive(Debug)]
struct Permits {
    free: Mutex<usize>,
    cv: Condvar,
}

impl Permits {
    fn acquire(&self) -> PermitGuard<'_> {
        let mut free = self.free.lock().expect("permit lock");
        while *free == 0 {
            free = self.cv.wait(free).expect("permit lock");
        }
        *free -= 1;
        PermitGuard(self)
    }
}

struct PermitGuard<'a>(&'a Permits);

impl Drop for PermitGuard<'_> {
    fn drop(&mut self) {
        *self.0.free.lock().expect("permit lock") += 1;
        self.0.cv.notify_one();
    }
}

/// Shared, read-only access to every data source. Files are read once
/// and cached; safe to use from many threads.
#[derive(Debug)]
pub struct DataSources {
    tables: Mutex<HashMap<PathBuf, Arc<Table>>>,
    agent: ureq::Agent,
    permits: Permits,
}

impl Default for DataSources {
    fn default() -> Self {
        DataSources::new(DEFAULT_HTTP_CONCURRENCY)
    }
}

impl DataSources {
    /// `http_concurrency` bounds in-flight HTTP requests.
    pub fn new(http_concurrency: usize) -> Self {
        DataSources {
            tables: Mutex::new(HashMap::new()),
            agent: ureq::AgentBuilder::new().build(),
            permits: Permits {
                free: Mutex::new(http_concurrency.max(1)),
                cv: Condvar::new(),
            },
        }
    }

    /// Raw values for `binding` and `policy_id`, before any format parsing.
    pub fn resolve(&self, binding: &Binding, policy_id: &str) -> Result<ResolvedValue, SourceError> {
        let (values, provenance) = match &binding.source {
            Source::Tabular {
                file,
                filter,
                select,
                order_by,
            } => {
                let filter: Vec<(String, String)> =
                    filter.iter().map(|(c, v)| (c.clone(), substitute(v, policy_id))).collect();
                let values = self.tabular(file, &filter, select, order_by.as_deref())?;
                let mut prov = format!("tabular file={}", file_name(file));
                for (c, v) in &filter {
                    prov.push_str(&format!(" where {c}={v}"));
                }
                prov.push_str(&format!(" select={select}"));
                if let Some(o) = order_by {
                    prov.push_str(&format!(" order_by={o}"));
                }
                (values, prov)
            }
            Source::Config { file, key } => {
                let key = substitute(key, policy_id);
                let v = self.config(file, &key)?;
                (vec![v], format!("config file={} key={key}", file_name(file)))
            }
            Source::UiExtract { dir, screen, field } => {
                let screen = substitute(screen, policy_id);
                let field = substitute(field, policy_id);
                let dir = PathBuf::from(substitute(&dir.to_string_lossy(), policy_id));
                let v = ui_extract(&dir, policy_id, &screen, &field)?;
                (
                    json_values(&v, binding.multi)?,
                    format!("ui_extract {policy_id}.json screen={screen} field={field}"),
                )
            }
            Source::Http {
                url_template,
                pointer,
                timeout_ms,
            } => {
                let url = substitute(url_template, &encode_component(policy_id));
                let v = self.http(&url, pointer, Duration::from_millis(*timeout_ms))?;
                (json_values(&v, binding.multi)?, format!("http GET {url} pointer={pointer}"))
            }
        };
        if values.is_empty() {
            return Err(SourceError::MissingData(format!("{provenance}: no values")));
        }
        if !binding.multi && values.len() > 1 {
            return Err(SourceError::AmbiguousData(format!("{provenance}: {} values", values.len())));
        }
        Ok(ResolvedValue { values, provenance })
    }

    fn table(&self, file: &Path) -> Result<Arc<Table>, SourceError> {
        if let Some(t) = self.tables.lock().expect("cache lock").get(file) {
            return Ok(t.clone());
        }
        let unavailable = |e: &dyn std::fmt::Display| SourceError::Unavailable(format!("{}: {e}", file.display()));
        let mut reader = csv::ReaderBuilder::new()
            .trim(csv::Trim::All)
            .from_path(file)
            .map_err(|e| unavailable(&e))?;
        let headers = reader.headers().map_err(|e| unavailable(&e))?.iter().map(str::to_string).collect();
        let rows = reader
            .records()
            .map(|r| r.map(|r| r.iter().map(str::to_string).collect()))
            .collect::<Result<_, _>>()
            .map_err(|e| unavailable(&e))?;
        let table = Arc::new(Table { headers, rows });
        self.tables.lock().expect("cache lock").insert(file.to_path_buf(), table.clone());
        Ok(table)
    }

    fn tabular(
        &self,
        file: &Path,
        filter: &[(String, String)],
        select: &str,
        order_by: Option<&str>,
    ) -> Result<Vec<CellValue>, SourceError> {
        let t = self.table(file)?;
        let filter: Vec<(usize, &str)> = filter
            .iter()
            .map(|(c, v)| t.column(c, file).map(|i| (i, v.as_str())))
            .collect::<Result<_, _>>()?;
        let sel = t.column(select, file)?;
        let order = order_by.map(|o| t.column(o, file)).transpose()?;
        let mut rows: Vec<&Vec<String>> = t
            .rows
            .iter()
            .filter(|r| filter.iter().all(|(i, v)| r.get(*i).map(String::as_str) == Some(*v)))
            .collect();
        if let Some(o) = order {
            rows.sort_by(|a, b| sort_key_cmp(&a[o], &b[o]));
        }
        Ok(rows.into_iter().map(|r| text_value(&r[sel])).collect())
    }

    fn config(&self, file: &Path, key: &str) -> Result<CellValue, SourceError> {
        let t = self.table(file)?;
        if t.headers.len() != 2 {
            return Err(SourceError::Unavailable(format!(
                "{}: config table must have exactly two columns",
                file.display()
            )));
        }
        t.rows
            .iter()
            .find(|r| r[0] == key)
            .map(|r| text_value(&r[1]))
            .ok_or_else(|| SourceError::MissingData(format!("config file={} has no key `{key}`", file_name(file))))
    }

    fn http(&self, url: &str, pointer: &str, timeout: Duration) -> Result<Value, SourceError> {
        let _permit = self.permits.acquire();
        let mut last = String::new();
        for attempt in 0..=HTTP_RETRIES {
            if attempt > 0 {
                log::debug!("retrying {url} ({attempt}/{HTTP_RETRIES})");
            }
            match self.agent.get(url).timeout(timeout).call() {
                Ok(resp) => {
                    let body = resp
                        .into_string()
                        .map_err(|e| SourceError::Unavailable(format!("GET {url}: {e}")))?;
                    let doc: Value = serde_json::from_str(&body)
                        .map_err(|e| SourceError::Unavailable(format!("GET {url}: invalid JSON: {e}")))?;
                    return doc
                        .pointer(pointer)
                        .cloned()
                        .ok_or_else(|| SourceError::MissingData(format!("GET {url}: nothing at {pointer}")));
                }
                Err(ureq::Error::Status(404, _)) => {
                    return Err(SourceError::MissingData(format!("GET {url}: 404 Not Found")))
                }
                Err(ureq::Error::Status(code, _)) if code < 500 => {
                    return Err(SourceError::Unavailable(format!("GET {url}: HTTP {code}")))
                }
                Err(e) => last = e.to_string(),
            }
        }
        Err(SourceError::Unavailable(format!("GET {url}: {last} (after {HTTP_RETRIES} retries)")))
    }
}

fn ui_extract(dir: &Path, policy_id: &str, screen: &str, field: &str) -> Result<Value, SourceError> {
    let path = dir.join(format!("{policy_id}.json"));
    let text = match fs::read_to_string(&path) {
        Ok(t) => t,
        Err(e) if e.kind() == std::io::ErrorKind::NotFound => {
            return Err(SourceError::MissingData(format!("no UI capture {policy_id}.json")))
        }
        Err(e) => return Err(SourceError::Unavailable(format!("{}: {e}", path.display()))),
    };
    let doc: Value = serde_json::from_str(&text)
        .map_err(|e| SourceError::Unavailable(format!("{}: {e}", path.display())))?;
    doc.get(screen)
        .and_then(|s| s.get(field))
        .cloned()
        .ok_or_else(|| SourceError::MissingData(format!("{policy_id}.json has no field {screen}/{field}")))
}

fn json_values(v: &Value, multi: bool) -> Result<Vec<CellValue>, SourceError> {
    let one = |v: &Value| value_from_json(v).map_err(SourceError::Unavailable);
    match v {
        Value::Array(items) if multi => items.iter().map(one).collect(),
        Value::Array(_) => Err(SourceError::AmbiguousData("expected a single value, found a list".into())),
        other => Ok(vec![one(other)?]),
    }
}

fn text_value(s: &str) -> CellValue {
    if s.is_empty() {
        CellValue::Blank
    } else {
        CellValue::text(s)
    }
}

/// Numbers by value, then dates, then text.
fn sort_key_cmp(a: &str, b: &str) -> Ordering {
    match (parse_number(a, false), parse_number(b, false)) {
        (Some(x), Some(y)) => return x.total_cmp(&y),
        (Some(_), None) => return Ordering::Less,
        (None, Some(_)) => return Ordering::Greater,
        _ => {}
    }
    match (parse_date(a), parse_date(b)) {
        (Some(x), Some(y)) => x.cmp(&y),
        (Some(_), None) => Ordering::Less,
        (None, Some(_)) => Ordering::Greater,
        _ => a.cmp(b),
    }
}

fn file_name(p: &Path) -> String {
    p.file_name().map_or_else(|| p.display().to_string(), |n| n.to_string_lossy().into_owned())
}

fn encode_component(s: &str) -> String {
    s.bytes()
        .map(|b| match b {
            b'A'..=b'Z' | b'a'..=b'z' | b'0'..=b'9' | b'-' | b'_' | b'.' | b'~' => (b as char).to_string(),
            _ => format!("%{b:02X}"),
        })
        .collect()
}
