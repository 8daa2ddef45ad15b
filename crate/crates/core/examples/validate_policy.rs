//! Validate policies against the withdrawal charge workbook, with one
//! recorded screen off by a dollar, and write evidence.
//!
//! cargo run --example validate_policy

use std::path::Path;

use calcspec::load_workbook;
use calcspec::schema::SchemaOptions;
use calcspec::sources::{load_bindings, DataSources};
use calcspec::validate::{validate_policy, Template, ValidateOptions};

fn main() -> anyhow::Result<()> {
    let fx = Path::new(env!("CARGO_MANIFEST_DIR")).join("fixtures");
    let wb = load_workbook(fx.join("withdrawal_charge.wbk.json"))?;
    let template = Template::generate(wb, "Main", &SchemaOptions::default())?;
    let bindings = load_bindings(fx.join("wc.faulty.bindings.json"))?;
    let out = std::env::temp_dir().join("calcspec-example");
    let options = ValidateOptions {
        out_dir: Some(out.clone()),
        ..Default::default()
    };

    let sources = DataSources::default();
    for policy in ["P001", "P003", "P999"] {
        let run = validate_policy(&template, &bindings, policy, &sources, &options);
        println!("{policy} {}", run.summary());
        for v in run.verdicts.iter().filter(|v| !v.matched) {
            println!("  {} {}", v.cell.a1(), v.detail.as_deref().unwrap_or(""));
        }
        for i in &run.issues {
            println!("  {}: {} ({})", i.field, i.kind, i.message);
        }
    }
    println!("evidence under {}", out.display());
    Ok(())
}
