//! Extract the input/output schema of a workbook and print it as CSV.
//!
//! cargo run --example generate_schema [workbook.wbk.json] [root-sheet]

use std::path::PathBuf;

use calcspec::load_workbook;
use calcspec::schema::{generate_schema, schema_to_csv, SchemaOptions};

fn main() -> anyhow::Result<()> {
    let mut args = std::env::args().skip(1);
    let path = args
        .next()
        .map(PathBuf::from)
        .unwrap_or_else(|| PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("fixtures/surrender.wbk.json"));
    let root = args.next().unwrap_or_else(|| "Surrender".into());

    let wb = load_workbook(&path)?;
    let schema = generate_schema(&wb, &root, &SchemaOptions::default())?;
    let ex = &schema.extraction;
    eprintln!("visited: {}", ex.sheets.join(" -> "));
    eprintln!("inputs: {}", ex.inputs.iter().map(|a| a.qualified()).collect::<Vec<_>>().join(" "));
    eprintln!("outputs: {}", ex.outputs.iter().map(|a| a.qualified()).collect::<Vec<_>>().join(" "));
    for t in &schema.tables {
        eprintln!("table {} {} x{}", t.anchor.qualified(), t.direction.as_str(), t.capacity);
    }
    for w in &schema.warnings {
        eprintln!("warning: {w}");
    }
    print!("{}", schema_to_csv(&ex.records));
    Ok(())
}
