//! Reduced model at two desired speeds against LWR on the same initial
//! platoon: mean flow, peak density and support at the horizon.
//!
//! cargo run --release --example compare_belt

use trafficfluid::macrolab::setups::BeltSetup;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let belt = BeltSetup::default();
    println!("{:<16} {:>14} {:>18} {:>20}", "model", "flow [veh/h]", "max rho [veh/km]", "support [km]");
    for s in belt.compare()? {
        println!(
            "{:<16} {:>14.1} {:>18.2} {:>10.2} .. {:>7.2}",
            s.label, s.mean_flow, s.max_rho_end, s.support_end.xs, s.support_end.xf
        );
    }
    Ok(())
}
