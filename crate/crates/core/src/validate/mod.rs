//! Fill a policy's inputs into a copy of the workbook, recompute, and
//! compare the computed outputs with the system's.

mod evidence;

use std::collections::BTreeMap;
use std::fmt;
use std::path::PathBuf;
use std::time::Instant;

use thiserror::Error;

use crate::address::CellAddress;
use crate::format::Format;
use crate::formula::Evaluator;
use crate::round::round_half_away;
use crate::schema::{crawl_referred_sheets, detect_tables, generate_schema, SchemaError, SchemaExtraction, SchemaOptions, SchemaRecord};
use crate::sources::{collect_policy, Binding, DataSources, Issue, ResolvedValue};
use crate::value::CellValue;
use crate::workbook::{TableDecl, Workbook, WorkbookError};

pub use evidence::{escape, evidence_paths, render_html, sanitize, write_evidence, EvidenceOptions, STYLE};

#[derive(Debug, Error)]
pub enum FillError {
    #[error("{field}: {values} values exceed table capacity {capacity}")]
    CapacityExceeded {
        field: String,
        capacity: u32,
        values: usize,
    },
    #[error(transparent)]
    Workbook(#[from] WorkbookError),
}

impl FillError {
    pub fn kind(&self) -> &'static str {
        match self {
            FillError::CapacityExceeded { .. } => "CapacityExceeded",
            FillError::Workbook(WorkbookError::OverwriteFormula(_)) => "OverwriteFormula",
            FillError::Workbook(_) => "WorkbookError",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Status {
    Passed,
    Failed,
    Error,
}

impl Status {
    pub fn as_str(self) -> &'static str {
        match self {
            Status::Passed => "PASSED",
            Status::Failed => "FAILED",
            Status::Error => "ERROR",
        }
    }
}

impl fmt::Display for Status {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl std::str::FromStr for Status {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "PASSED" => Ok(Status::Passed),
            "FAILED" => Ok(Status::Failed),
            "ERROR" => Ok(Status::Error),
            other => Err(format!("unknown status `{other}`")),
        }
    }
}

/// Comparison of one output cell.
#[derive(Debug, Clone, PartialEq)]
pub struct CellVerdict {
    pub cell: CellAddress,
    /// Recomputed by the workbook.
    pub expected: CellValue,
    /// Reported by the system under test.
    pub actual: CellValue,
    pub format: Format,
    pub matched: bool,
    pub detail: Option<String>,
}

#[derive(Debug, Clone)]
pub struct ValidationRun {
    pub policy_id: String,
    pub cs_sheet: String,
    pub verdicts: Vec<CellVerdict>,
    pub status: Status,
    pub issues: Vec<Issue>,
    pub diagnostics: Vec<String>,
    /// Every formula cell's recomputed value.
    pub computed: BTreeMap<CellAddress, CellValue>,
    pub provenance: BTreeMap<CellAddress, String>,
    pub duration_ms: u64,
    pub evidence_path: Option<PathBuf>,
}

impl ValidationRun {
    pub fn mismatches(&self) -> usize {
        self.verdicts.iter().filter(|v| !v.matched).count()
    }

    /// `PASSED`, `FAILED (2 mismatches)` or `ERROR`.
    pub fn summary(&self) -> String {
        verdict_line(self.status, self.mismatches())
    }
}

/// Fixed verdict grammar: `PASSED`, `FAILED (n mismatch[es])`, `ERROR`.
pub fn verdict_line(status: Status, mismatches: usize) -> String {
    match status {
        Status::Passed => "PASSED".into(),
        Status::Failed if mismatches == 1 => "FAILED (1 mismatch)".into(),
        Status::Failed => format!("FAILED ({mismatches} mismatches)"),
        Status::Error => "ERROR".into(),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub enum CompareMode {
    /// Round both sides at the format's precision, then compare exactly.
    #[default]
    Rounded,
    /// Numbers match when within the given absolute distance.
    Epsilon(f64),
}

/// Compare under `format` with rounding at its precision.
pub fn compare_values(expected: &CellValue, actual: &CellValue, format: Format) -> (bool, Option<String>) {
    compare_values_with(expected, actual, format, CompareMode::Rounded)
}

pub fn compare_values_with(
    expected: &CellValue,
    actual: &CellValue,
    format: Format,
    mode: CompareMode,
) -> (bool, Option<String>) {
    if let Some(e) = expected.error() {
        return (false, Some(format!("expected value is {e}")));
    }
    if let Some(e) = actual.error() {
        return (false, Some(format!("actual value is {e}")));
    }
    let mismatch = |what: String| (false, Some(what));
    match format {
        Format::Text => {
            let (Ok(e), Ok(a)) = (expected.to_text(), actual.to_text()) else {
                return mismatch("not text".into());
            };
            if e.trim() == a.trim() {
                (true, None)
            } else {
                mismatch(format!("expected `{}`, actual `{}`", e.trim(), a.trim()))
            }
        }
        Format::Date => match (expected.to_date(), actual.to_date()) {
            (Ok(e), Ok(a)) if e == a => (true, None),
            (Ok(e), Ok(a)) => mismatch(format!("expected {e}, actual {a}")),
            _ => mismatch(format!("expected `{expected}`, actual `{actual}` are not both dates")),
        },
        _ => {
            let (Ok(e), Ok(a)) = (expected.to_number(), actual.to_number()) else {
                return mismatch(format!("expected `{expected}`, actual `{actual}` are not both numbers"));
            };
            match mode {
                CompareMode::Rounded => {
                    let digits = format.comparison_digits().expect("numeric format");
                    let (re, ra) = (round_half_away(e, digits), round_half_away(a, digits));
                    if re == ra {
                        (true, None)
                    } else {
                        let d = digits.max(0) as usize;
                        mismatch(format!("expected {re:.d$}, actual {ra:.d$} at {format}"))
                    }
                }
                CompareMode::Epsilon(eps) => {
                    if (e - a).abs() <= eps {
                        (true, None)
                    } else {
                        mismatch(format!("expected {e}, actual {a}, |diff| > {eps}"))
                    }
                }
            }
        }
    }
}

/// A workbook and its schema, ready to validate many policies against.
#[derive(Debug, Clone)]
pub struct Template {
    pub workbook: Workbook,
    pub schema: SchemaExtraction,
    /// Table extents used when filling table fields.
    pub tables: Vec<TableDecl>,
}

impl Template {
    pub fn new(workbook: Workbook, schema: SchemaExtraction) -> Self {
        let mut tables = schema
            .root()
            .and_then(|root| crawl_referred_sheets(&workbook, root).ok())
            .and_then(|ex| detect_tables(&workbook, &ex).ok())
            .unwrap_or_default();
        for t in &workbook.tables {
            if !tables.iter().any(|x| x.anchor == t.anchor) {
                tables.push(t.clone());
            }
        }
        Template {
            workbook,
            schema,
            tables,
        }
    }

    /// Generate the schema from the workbook itself.
    pub fn generate(workbook: Workbook, root: &str, options: &SchemaOptions) -> Result<Self, SchemaError> {
        let g = generate_schema(&workbook, root, options)?;
        Ok(Template {
            workbook,
            schema: g.extraction,
            tables: g.tables,
        })
    }

    /// Capacity of the table anchored at `record`, if known.
    pub fn capacity(&self, record: &SchemaRecord) -> Option<u32> {
        let anchor = record.address();
        self.tables
            .iter()
            .find(|t| Some(t.direction) == record.cell_id.table && t.anchor.sheet.eq_ignore_ascii_case(&anchor.sheet) && (t.anchor.col, t.anchor.row) == (anchor.col, anchor.row))
            .map(|t| t.capacity)
    }

    /// `file$tab` of the root sheet.
    pub fn cs_sheet(&self) -> String {
        self.schema
            .records
            .first()
            .map(|r| r.cs_sheet.clone())
            .unwrap_or_else(|| {
                crate::schema::cs_sheet_id(&self.workbook.file_name, self.schema.root().unwrap_or_default())
            })
    }
}

/// Write one field's values into `wb`. Tables are cleared up to their
/// capacity first, then filled from the anchor onward.
pub fn fill_field(
    wb: &mut Workbook,
    record: &SchemaRecord,
    capacity: Option<u32>,
    value: &ResolvedValue,
) -> Result<(), FillError> {
    let anchor = wb.resolve(&record.address())?;
    let Some(direction) = record.cell_id.table else {
        let v = value.values.first().cloned().unwrap_or_default();
        return Ok(wb.set_input(&anchor, v)?);
    };
    let (dc, dr) = direction.step();
    let exceeded = || FillError::CapacityExceeded {
        field: record.key(),
        capacity: capacity.unwrap_or(u32::MAX),
        values: value.values.len(),
    };
    if let Some(cap) = capacity {
        if value.values.len() > cap as usize {
            return Err(exceeded());
        }
        for i in 0..cap as i64 {
            if let Some(a) = anchor.offset(dc * i, dr * i) {
                wb.set_input(&a, CellValue::Blank)?;
            }
        }
    }
    for (i, v) in value.values.iter().enumerate() {
        let a = anchor.offset(dc * i as i64, dr * i as i64).ok_or_else(exceeded)?;
        wb.set_input(&a, v.clone())?;
    }
    Ok(())
}

/// Fill every input of `inputs`, stopping at the first failure.
pub fn fill_inputs(
    wb: &mut Workbook,
    template: &Template,
    inputs: &BTreeMap<CellAddress, ResolvedValue>,
) -> Result<(), FillError> {
    for record in template.schema.input_records() {
        if let Some(v) = inputs.get(&record.address()) {
            fill_field(wb, record, template.capacity(record), v)?;
        }
    }
    Ok(())
}

#[derive(Debug, Clone, Default)]
pub struct ValidateOptions {
    pub compare: CompareMode,
    /// Where to write evidence; `None` skips it.
    pub out_dir: Option<PathBuf>,
    pub evidence: EvidenceOptions,
}

/// Collect, fill, recompute, compare and write evidence for one policy.
/// Data problems never escape: they make the run `ERROR`.
pub fn validate_policy(
    template: &Template,
    bindings: &[Binding],
    policy_id: &str,
    sources: &DataSources,
    options: &ValidateOptions,
) -> ValidationRun {
    let started = Instant::now();
    let mut issues = Vec::new();
    let collected = match collect_policy(&template.schema, bindings, policy_id, sources) {
        Ok(c) => c,
        Err(e) => {
            issues.push(Issue::new(policy_id, &e));
            Default::default()
        }
    };
    issues.extend(collected.issues.iter().cloned());

    let mut wb = template.workbook.clone();
    for record in template.schema.input_records() {
        let Some(v) = collected.inputs.get(&record.address()) else { continue };
        if let Err(e) = fill_field(&mut wb, record, template.capacity(record), v) {
            issues.push(Issue {
                field: record.key(),
                kind: e.kind().to_string(),
                message: e.to_string(),
            });
        }
    }

    let mut ev = Evaluator::new(&wb);
    let computed = ev.recompute();
    let mut verdicts = Vec::new();
    for record in template.schema.output_records() {
        let cell = record.address();
        let expected = ev.evaluate(&cell);
        let (actual, matched, detail) = match collected.pas_outputs.get(&cell) {
            Some(v) => {
                let actual = v.values[0].clone();
                let (m, d) = compare_values_with(&expected, &actual, record.format, options.compare);
                (actual, m, d)
            }
            None => (CellValue::Blank, false, Some("no value collected from the system".into())),
        };
        verdicts.push(CellVerdict {
            cell,
            expected,
            actual,
            format: record.format,
            matched,
            detail,
        });
    }
    let diagnostics = ev.diagnostics().iter().map(|d| d.to_string()).collect();

    let status = if !issues.is_empty() {
        Status::Error
    } else if verdicts.iter().any(|v| !v.matched) {
        Status::Failed
    } else {
        Status::Passed
    };
    let provenance = collected
        .inputs
        .iter()
        .chain(&collected.pas_outputs)
        .map(|(a, v)| (a.clone(), v.provenance.clone()))
        .collect();
    let mut run = ValidationRun {
        policy_id: policy_id.to_string(),
        cs_sheet: template.cs_sheet(),
        verdicts,
        status,
        issues,
        diagnostics,
        computed,
        provenance,
        duration_ms: started.elapsed().as_millis() as u64,
        evidence_path: None,
    };
    if let Some(out) = &options.out_dir {
        match write_evidence(&run, &wb, out, &options.evidence) {
            Ok(p) => run.evidence_path = Some(p),
            Err(e) => {
                log::error!("writing evidence for {policy_id}: {e}");
                run.issues.push(Issue {
                    field: policy_id.to_string(),
                    kind: "IoError".into(),
                    message: e.to_string(),
                });
                run.status = Status::Error;
            }
        }
    }
    log::info!("{} {} {}", run.cs_sheet, policy_id, run.summary());
    run
}
