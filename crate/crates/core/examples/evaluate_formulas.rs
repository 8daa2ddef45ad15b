//! Evaluate formulas with the built-in engine, including a reference cycle.
//!
//! cargo run --example evaluate_formulas

use calcspec::formula::{evaluate_formula, recompute_all, Evaluator};
use calcspec::{a1_to_address, CellValue, Workbook};

fn main() -> anyhow::Result<()> {
    let mut wb = Workbook::new("demo.wbk")?;
    wb.add_sheet("Main")?;
    wb.add_sheet("Rates")?;
    let a = |s: &str| a1_to_address(s, "Main").expect("valid address");

    for (cell, v) in [("B2", 20_000.0), ("B3", 5_000.0), ("Rates!A1", 0.07)] {
        wb.set_literal(&a(cell), CellValue::Number(v))?;
    }
    wb.set_formula(&a("H2"), "=MIN(B2,B3)")?;
    wb.set_formula(&a("H3"), "=ROUND(H2*Rates!A1,2)")?;
    wb.set_formula(&a("H4"), "=IF(H3>300,\"high\",\"low\")")?;
    // a cycle: each evaluates to #CYCLE!, the rest is unaffected
    wb.set_formula(&a("J1"), "=J2+1")?;
    wb.set_formula(&a("J2"), "=J1*2")?;

    for (addr, value) in recompute_all(&wb) {
        println!("{:<10} {value}", addr.qualified());
    }

    let home = a("Z1");
    for f in ["=-2^2", "=ROUND(2.675,2)", "=SUM(B2:B3)/0", "=DATE(2024,14,1)", "=NOPE(1)"] {
        println!("{f:<20} {}", evaluate_formula(&wb, &home, f)?);
    }

    let mut ev = Evaluator::new(&wb);
    ev.recompute();
    for d in ev.diagnostics() {
        println!("diagnostic: {d}");
    }
    Ok(())
}
