//! Rebuild a dashboard from evidence files written by earlier runs.
//!
//! cargo run --example evidence_report <runs-dir>

use std::path::PathBuf;

use calcspec::batch::{render_dashboard, scan_runs};

fn main() -> anyhow::Result<()> {
    let dir = std::env::args()
        .nth(1)
        .map(PathBuf::from)
        .unwrap_or_else(|| std::env::temp_dir().join("calcspec-batch"));
    let summary = scan_runs(&dir)?;
    let o = summary.overall();
    eprintln!("{} runs: {} passed, {} failed, {} error", o.total(), o.passed, o.failed, o.error);
    print!("{}", render_dashboard(&summary));
    Ok(())
}
