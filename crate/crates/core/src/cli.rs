//! Command-line interface: `schema`, `validate`, `batch` and `report`.
//!
//! Verdict lines go to stdout; everything else goes to stderr. The exit
//! code is 0 when everything passed, 1 when something failed and 2 on
//! errors.

use std::ffi::OsString;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};

use crate::batch::{emit_dashboard_html, emit_summary_csv, load_manifest, render_dashboard, run_batch, scan_runs, BatchOptions};
use crate::schema::{emit_schema, generate_schema, parse_schema, SchemaOptions};
use crate::sources::{load_bindings, DataSources};
use crate::validate::{validate_policy, verdict_line, CompareMode, EvidenceOptions, Status, Template, ValidateOptions};
use crate::workbook::load_workbook;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ExitStatus {
    Passed = 0,
    Failed = 1,
    Error = 2,
}

impl ExitStatus {
    pub fn code(self) -> i32 {
        self as i32
    }
}

impl From<Status> for ExitStatus {
    fn from(s: Status) -> Self {
        match s {
            Status::Passed => ExitStatus::Passed,
            Status::Failed => ExitStatus::Failed,
            Status::Error => ExitStatus::Error,
        }
    }
}

#[derive(Debug, Parser)]
#[command(name = "calcspec", version, about = "Validate a calculation implementation against spreadsheet specifications")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Extract the input/output schema of a workbook.
    Schema(SchemaArgs),
    /// Validate policies against one workbook.
    Validate(ValidateArgs),
    /// Validate the policies of a batch manifest.
    Batch(BatchArgs),
    /// Rebuild the dashboard from stored evidence.
    Report(ReportArgs),
}

#[derive(Debug, Args)]
pub struct SchemaArgs {
    /// Workbook (`.wbk.json`).
    pub workbook: PathBuf,
    /// Root sheet; defaults to the first sheet.
    #[arg(long)]
    pub root: Option<String>,
    /// Output CSV; stdout when omitted.
    #[arg(short, long)]
    pub output: Option<PathBuf>,
    /// Take a missing data source from the text cell right of an input.
    #[arg(long)]
    pub compat_neighbor_annotations: bool,
}

#[derive(Debug, Args)]
pub struct Stamp {
    /// Record wall-clock times in outputs.
    #[arg(long, overrides_with = "no_timestamp")]
    pub timestamp: bool,
    /// Leave wall-clock times out (the default).
    #[arg(long)]
    pub no_timestamp: bool,
}

#[derive(Debug, Args)]
pub struct ValidateArgs {
    #[arg(long)]
    pub workbook: PathBuf,
    /// Schema CSV; generated from the workbook when omitted.
    #[arg(long)]
    pub schema: Option<PathBuf>,
    /// Root sheet for a generated schema; defaults to the first sheet.
    #[arg(long)]
    pub root: Option<String>,
    #[arg(long)]
    pub bindings: PathBuf,
    /// Policy id; repeat for several.
    #[arg(long = "policy", required = true)]
    pub policies: Vec<String>,
    /// Evidence directory.
    #[arg(long, default_value = "out")]
    pub out: PathBuf,
    /// Compare numbers within this distance instead of rounding.
    #[arg(long)]
    pub epsilon: Option<f64>,
    #[command(flatten)]
    pub stamp: Stamp,
}

#[derive(Debug, Args)]
pub struct BatchArgs {
    #[arg(long)]
    pub manifest: PathBuf,
    /// Parallel policy validations; overrides the manifest.
    #[arg(long)]
    pub jobs: Option<usize>,
    /// Output directory; overrides the manifest.
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long)]
    pub epsilon: Option<f64>,
    /// Progress ticker on stderr.
    #[arg(long)]
    pub progress: bool,
    #[command(flatten)]
    pub stamp: Stamp,
}

#[derive(Debug, Args)]
pub struct ReportArgs {
    /// Directory holding evidence from earlier runs.
    #[arg(long)]
    pub runs: PathBuf,
    /// Dashboard file to write.
    #[arg(long)]
    pub out: PathBuf,
}

fn compare_mode(epsilon: Option<f64>) -> CompareMode {
    epsilon.map_or(CompareMode::Rounded, CompareMode::Epsilon)
}

/// Parse `args` (program name first) and run the command.
pub fn run<I, T>(args: I, stdout: &mut dyn Write) -> ExitStatus
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitStatus::Error } else { ExitStatus::Passed };
        }
    };
    let result = match cli.command {
        Command::Schema(a) => cmd_schema(&a, stdout),
        Command::Validate(a) => cmd_validate(&a, stdout),
        Command::Batch(a) => cmd_batch(&a, stdout),
        Command::Report(a) => cmd_report(&a),
    };
    result.unwrap_or_else(|e| {
        eprintln!("error: {e:#}");
        ExitStatus::Error
    })
}

fn root_sheet(wb: &crate::Workbook, root: Option<&str>) -> String {
    root.map(str::to_string).unwrap_or_else(|| wb.sheets()[0].name.clone())
}

pub fn cmd_schema(a: &SchemaArgs, stdout: &mut dyn Write) -> anyhow::Result<ExitStatus> {
    let wb = load_workbook(&a.workbook)?;
    let root = root_sheet(&wb, a.root.as_deref());
    let options = SchemaOptions {
        compat_neighbor_annotations: a.compat_neighbor_annotations,
    };
    let g = generate_schema(&wb, &root, &options)?;
    match &a.output {
        Some(path) => emit_schema(&g.extraction, path)?,
        None => stdout.write_all(crate::schema::schema_to_csv(&g.extraction.records).as_bytes())?,
    }
    eprintln!(
        "{} inputs, {} outputs, {} records, referred sheets: [{}]",
        g.extraction.inputs.len(),
        g.extraction.outputs.len(),
        g.extraction.records.len(),
        g.extraction.referred_sheets.join(", ")
    );
    Ok(ExitStatus::Passed)
}

pub fn cmd_validate(a: &ValidateArgs, stdout: &mut dyn Write) -> anyhow::Result<ExitStatus> {
    let wb = load_workbook(&a.workbook)?;
    let template = match &a.schema {
        Some(p) => Template::new(wb, parse_schema(p)?),
        None => {
            let root = root_sheet(&wb, a.root.as_deref());
            Template::generate(wb, &root, &SchemaOptions::default())?
        }
    };
    let bindings = load_bindings(&a.bindings)?;
    crate::sources::bind(&template.schema, &bindings)?;
    let options = ValidateOptions {
        compare: compare_mode(a.epsilon),
        out_dir: Some(a.out.clone()),
        evidence: EvidenceOptions {
            timestamp: a.stamp.timestamp,
        },
    };
    let sources = DataSources::default();
    let mut worst = Status::Passed;
    for policy in &a.policies {
        let run = validate_policy(&template, &bindings, policy, &sources, &options);
        for i in &run.issues {
            eprintln!("{policy}: {} [{}] {}", i.field, i.kind, i.message);
        }
        for v in run.verdicts.iter().filter(|v| !v.matched) {
            eprintln!("{policy}: {} {}", v.cell, v.detail.as_deref().unwrap_or("mismatch"));
        }
        writeln!(stdout, "{policy} {}", run.summary())?;
        worst = worst.max(run.status);
    }
    Ok(worst.into())
}

pub fn cmd_batch(a: &BatchArgs, stdout: &mut dyn Write) -> anyhow::Result<ExitStatus> {
    let mut manifest = load_manifest(&a.manifest)?;
    if let Some(j) = a.jobs {
        anyhow::ensure!(j >= 1, "--jobs must be at least 1");
        manifest.jobs = j;
    }
    if let Some(out) = &a.out {
        manifest.out_dir = out.clone();
    }
    let options = BatchOptions {
        timestamp: a.stamp.timestamp,
        compare: compare_mode(a.epsilon),
        progress: a.progress,
        ..Default::default()
    };
    let summary = run_batch(&manifest, &options)?;
    emit_summary_csv(&summary, manifest.out_dir.join("summary.csv"))?;
    let dashboard = emit_dashboard_html(&summary, &manifest.out_dir)?;
    for r in &summary.rows {
        writeln!(stdout, "{} {} {}", r.cs_sheet, r.policy_id, verdict_line(r.status, r.mismatches))?;
    }
    let t = summary.overall();
    eprintln!(
        "{} passed, {} failed, {} error; dashboard: {}",
        t.passed,
        t.failed,
        t.error,
        dashboard.display()
    );
    Ok(summary.worst().into())
}

pub fn cmd_report(a: &ReportArgs) -> anyhow::Result<ExitStatus> {
    let mut summary = scan_runs(&a.runs)?;
    let dashboard_dir = a.out.parent().filter(|p| !p.as_os_str().is_empty()).unwrap_or(Path::new("."));
    let same_dir = dashboard_dir.canonicalize().ok() == a.runs.canonicalize().ok();
    if !same_dir {
        let base = a.runs.canonicalize().unwrap_or_else(|_| a.runs.clone());
        for r in &mut summary.rows {
            if let Some(link) = &r.evidence_html {
                r.evidence_html = Some(base.join(link).display().to_string());
            }
        }
    }
    std::fs::write(&a.out, render_dashboard(&summary))?;
    eprintln!("{} runs; dashboard: {}", summary.rows.len(), a.out.display());
    Ok(ExitStatus::Passed)
}
