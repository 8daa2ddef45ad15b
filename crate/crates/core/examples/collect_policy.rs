//! Resolve every schema field of one policy through its bindings.
//!
//! cargo run --example collect_policy [policy-id]

use std::path::Path;

use calcspec::schema::parse_schema;
use calcspec::sources::{collect_policy, load_bindings, DataSources};

fn main() -> anyhow::Result<()> {
    let policy = std::env::args().nth(1).unwrap_or_else(|| "P001".into());
    let fx = Path::new(env!("CARGO_MANIFEST_DIR")).join("fixtures");
    let schema = parse_schema(fx.join("wc.schema.csv"))?;
    let bindings = load_bindings(fx.join("wc.bindings.json"))?;

    let collected = collect_policy(&schema, &bindings, &policy, &DataSources::default())?;
    println!("inputs of {policy}:");
    for (addr, v) in &collected.inputs {
        let values: Vec<String> = v.values.iter().map(|x| x.to_string()).collect();
        println!("  {:<6} [{}]  <- {}", addr.a1(), values.join(", "), v.provenance);
    }
    println!("reported outputs:");
    for (addr, v) in &collected.pas_outputs {
        println!("  {:<6} {}  <- {}", addr.a1(), v.values[0], v.provenance);
    }
    for issue in &collected.issues {
        println!("  issue {}: {} {}", issue.field, issue.kind, issue.message);
    }
    Ok(())
}
