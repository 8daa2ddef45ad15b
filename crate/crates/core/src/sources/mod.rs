//! Data sources: resolve schema fields to values for one policy.
//!
//! A [`Binding`] names an adapter and its parameters for one field:
//!
//! - `tabular`: rows of a CSV file matching `where`, column `select`,
//!   sorted by `order_by`;
//! - `config`: a key in a two-column `key,value` CSV;
//! - `ui_extract`: `<dir>/<policy_id>.json` shaped `{screen: {field: value}}`;
//! - `http`: GET a URL, take the value at a JSON pointer.

mod adapters;
mod binding;

use std::collections::BTreeMap;

use thiserror::Error;

use crate::address::CellAddress;
use crate::schema::{FieldType, SchemaExtraction, SchemaRecord};
use crate::value::CellValue;

pub use adapters::{DataSources, DEFAULT_HTTP_CONCURRENCY};
pub use binding::{load_bindings, parse_bindings, substitute, Binding, Source, POLICY_PLACEHOLDER};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum SourceError {
    #[error("missing data: {0}")]
    MissingData(String),
    #[error("ambiguous data: {0}")]
    AmbiguousData(String),
    #[error("source unavailable: {0}")]
    Unavailable(String),
    #[error("type mismatch: {0}")]
    TypeMismatch(String),
    #[error("unknown adapter `{0}`")]
    UnknownAdapter(String),
    #[error("bindings error at {location}: {message}")]
    BindingFormat { location: String, message: String },
    #[error("no binding for schema field {0}")]
    UnboundField(String),
}

impl SourceError {
    pub fn kind(&self) -> &'static str {
        match self {
            SourceError::MissingData(_) => "MissingData",
            SourceError::AmbiguousData(_) => "AmbiguousData",
            SourceError::Unavailable(_) => "SourceUnavailable",
            SourceError::TypeMismatch(_) => "TypeMismatch",
            SourceError::UnknownAdapter(_) => "UnknownAdapter",
            SourceError::BindingFormat { .. } => "BindingFormatError",
            SourceError::UnboundField(_) => "UnboundField",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ResolvedValue {
    pub values: Vec<CellValue>,
    /// Adapter and resolved parameters.
    pub provenance: String,
}

/// A field that could not be collected or filled.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Issue {
    pub field: String,
    pub kind: String,
    pub message: String,
}

impl Issue {
    pub fn new(field: impl Into<String>, err: &SourceError) -> Self {
        Issue {
            field: field.into(),
            kind: err.kind().to_string(),
            message: err.to_string(),
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct Collected {
    pub inputs: BTreeMap<CellAddress, ResolvedValue>,
    pub pas_outputs: BTreeMap<CellAddress, ResolvedValue>,
    pub issues: Vec<Issue>,
}

/// The binding of every record, in record order.
pub fn bind<'b>(schema: &SchemaExtraction, bindings: &'b [Binding]) -> Result<Vec<&'b Binding>, SourceError> {
    schema
        .records
        .iter()
        .map(|r| {
            bindings
                .iter()
                .find(|b| b.matches(r))
                .ok_or_else(|| SourceError::UnboundField(r.key()))
        })
        .collect()
}

/// Resolve every field of `schema` for `policy_id`.
///
/// Fails only when a field has no binding; a field that cannot be resolved
/// becomes an issue and the others are still collected.
pub fn collect_policy(
    schema: &SchemaExtraction,
    bindings: &[Binding],
    policy_id: &str,
    sources: &DataSources,
) -> Result<Collected, SourceError> {
    let bound = bind(schema, bindings)?;
    let mut out = Collected::default();
    for (record, binding) in schema.records.iter().zip(bound) {
        match resolve_field(record, binding, policy_id, sources) {
            Ok(v) => {
                let map = match record.field_type {
                    FieldType::Input => &mut out.inputs,
                    FieldType::Output => &mut out.pas_outputs,
                };
                map.insert(record.address(), v);
            }
            Err(e) => {
                log::debug!("{policy_id} {}: {e}", record.key());
                out.issues.push(Issue::new(record.key(), &e));
            }
        }
    }
    Ok(out)
}

fn resolve_field(
    record: &SchemaRecord,
    binding: &Binding,
    policy_id: &str,
    sources: &DataSources,
) -> Result<ResolvedValue, SourceError> {
    let raw = sources.resolve(binding, policy_id)?;
    let values = raw
        .values
        .iter()
        .map(|v| record.format.parse_value(v).map_err(SourceError::TypeMismatch))
        .collect::<Result<_, _>>()?;
    Ok(ResolvedValue {
        values,
        provenance: raw.provenance,
    })
}
