//! Run the fixture manifest on several workers and write the summary CSV
//! and dashboard.
//!
//! cargo run --example batch_validation [jobs]

use std::path::Path;

use calcspec::batch::{emit_dashboard_html, emit_summary_csv, load_manifest, run_batch, BatchOptions};
use calcspec::validate::verdict_line;

fn main() -> anyhow::Result<()> {
    let jobs: usize = std::env::args().nth(1).map_or(Ok(4), |j| j.parse())?;
    let fx = Path::new(env!("CARGO_MANIFEST_DIR")).join("fixtures");
    let mut manifest = load_manifest(fx.join("manifest.json"))?;
    manifest.jobs = jobs;
    manifest.out_dir = std::env::temp_dir().join("calcspec-batch");

    let summary = run_batch(&manifest, &BatchOptions { timestamp: true, ..Default::default() })?;
    emit_summary_csv(&summary, manifest.out_dir.join("summary.csv"))?;
    let dashboard = emit_dashboard_html(&summary, &manifest.out_dir)?;

    for (sheet, t) in summary.totals() {
        println!("{sheet:<20} passed {:>3}  failed {:>3}  error {:>3}", t.passed, t.failed, t.error);
    }
    if let Some(r) = summary.rows.iter().find(|r| r.mismatches > 0) {
        println!("first failure: {} {}", r.policy_id, verdict_line(r.status, r.mismatches));
    }
    println!("{} pairs in {} ms on {jobs} workers", summary.rows.len(), summary.wall_time_ms);
    println!("dashboard: {}", dashboard.display());
    Ok(())
}
