//! Runs one acceptance suite (or a single check) and prints its table.
//!
//! cargo run --release --example acceptance_suite -- decay

use trafficfluid::harness::{accept, format_table};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let name = std::env::args().nth(1).unwrap_or_else(|| "prop1".into());
    let reports = accept(&name)?;
    print!("{}", format_table(&reports));
    let failed = reports.iter().flat_map(|r| &r.checks).filter(|c| !c.pass).count();
    println!("{failed} failing checks");
    Ok(())
}
