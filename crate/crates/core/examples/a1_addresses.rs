//! A1 notation: parsing, formatting and sheet quoting.
//!
//! cargo run --example a1_addresses

use calcspec::address::{column_index, column_name, quote_sheet};
use calcspec::{a1_to_address, address_to_a1};

fn main() {
    for text in ["B3", "$H$11", "Rates!A2", "'Rate Table'!XFD1048576", "aa10"] {
        let addr = a1_to_address(text, "Main").expect("valid A1");
        println!(
            "{text:<24} sheet={:<12} col={:<6} row={:<8} -> {}",
            addr.sheet,
            addr.col,
            addr.row,
            address_to_a1(&addr, true)
        );
    }
    for bad in ["A0", "B", "Main!", "XFE1"] {
        println!("{bad:<24} {}", a1_to_address(bad, "Main").unwrap_err());
    }
    println!("column 28 = {}, AB = {:?}", column_name(28), column_index("AB"));
    println!("{} {}", quote_sheet("Main"), quote_sheet("Rate Table"));
}
